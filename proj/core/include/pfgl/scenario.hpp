#pragma once

#include <optional>

#include "pfgl/adaptivity.hpp"
#include "pfgl/config.hpp"
#include "pfgl/postprocess.hpp"

namespace pfgl {

enum class SolverMode { SingleScale, GLStaticLocal, GLAdaptive };

struct BCSpec {
  std::string selector;  // bottom | top | left | right | seg <ax> <v> <ax> <a> <b>
  int comp = -1;         // 0 = x, 1 = y, -1 = both
  double scale = 0;      // 0 fixed, +1 drive, -1 drive_neg
};

struct Inclusion {
  Vec2 center = Vec2::Zero();
  double radius = 0;
};

struct ScenarioConfig {
  KeyValueConfig raw;

  // geometry
  double width = 0, height = 0;
  int nx = 0, ny = 0;
  std::vector<SeamSpec> seams;
  std::optional<CutoutSpec> cutout;

  // material (length_scale resolved at run time when factor-based)
  MaterialParams material;
  double length_scale_mm = 0;        // absolute, takes precedence when > 0
  double length_scale_factor_h = 2;  // l = factor * h of the phase-field mesh

  // heterogeneity
  std::vector<Inclusion> inclusions;
  double mismatch_ratio = 1.0;
  unsigned rng_seed = 0;

  // solver
  SolverMode mode = SolverMode::SingleScale;
  GLConfig gl;
  AdaptConfig adapt;
  std::string local_seed = "notch";  // notch | elements | initiation
  std::vector<int> local_elements;
  double initiation_fraction = 0.75;
  double initiation_radius_elems = 2.0;
  std::string pf_support = "all";  // all | seed (single-scale only)

  // load
  int steps = 0;
  double increment = 0;
  std::vector<BCSpec> bcs;

  // output
  int field_every = 0;
  std::string global_pf = "homogeneous";  // none | global | homogeneous | both

  static ScenarioConfig parse(const KeyValueConfig& raw);
  StiffnessField stiffness_field() const;
};

struct SeriesRow {
  int step = 0;
  double ubar = 0, reaction = 0, strain_energy = 0, fracture_energy = 0;
  int active_dofs = 0;
  double wall_ms = 0;
};

struct RunArtifacts {
  std::vector<SeriesRow> series;
  InvariantMonitor monitor;
  std::vector<AdaptEvent> adapt_events;
  std::vector<GLLogRow> gl_log;
  std::vector<int> cycles_per_step;

  QuadMesh global_mesh;  // final tags (GL) or the single-scale mesh
  std::optional<LocalMesh> local;
  std::optional<GLState> gl_state;
  VecX u, d;  // single-scale final fields
  double l_resolved = 0;
  int seed_step = 0;  // first GL step (initiation-seeded runs)
};

// Node groups for a BC list on a concrete mesh. Side selectors (bottom/...)
// refer to the physical domain extents; pass `domain` when `mesh` covers
// only part of it (local meshes), so interior interfaces are never clamped.
LoadSchedule make_schedule(const QuadMesh& mesh, int steps, double increment,
                           const std::vector<BCSpec>& bcs,
                           const QuadMesh* domain = nullptr);

// Runs the scenario; writes manifest/CSV/VTK artifacts when outdir is
// nonempty. Throws on solver failure after retaining last-good artifacts.
RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& outdir,
                          int log_level = 1);

struct CompareReport {
  int steps = 0;
  double max_reaction_dev = 0, rel_reaction_dev = 0;
  double max_strain_dev = 0, rel_strain_dev = 0;
  double max_fracture_dev = 0, rel_fracture_dev = 0;
  double interface_mismatch_a = 0, interface_mismatch_b = 0;
  bool pass = false;
};

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           double tol_reaction_rel, double tol_energy_rel);

// CLI entry points; return process exit codes.
int cli_run(const std::string& config_path, const std::string& outdir,
            const std::vector<std::string>& overrides, int log_level);
int cli_compare(const std::string& dir_a, const std::string& dir_b, double tol_reaction_rel,
                double tol_energy_rel);

}  // namespace pfgl
