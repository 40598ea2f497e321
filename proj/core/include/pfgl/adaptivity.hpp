#pragma once

#include "pfgl/gl_solver.hpp"

namespace pfgl {

struct AdaptConfig {
  double tol_d = 0.85;  // threshold in (0,1)
  int refinement_factor = 8;
  int max_corrector_cycles = 30;
  int halo = 0;  // extra neighbor layers around promoted elements

  void validate() const {
    require(tol_d > 0 && tol_d < 1, "adaptivity: tol_d must lie in (0,1)");
    require(refinement_factor >= 1, "adaptivity: refinement factor must be >= 1");
  }
};

struct AdaptEvent {
  int step = 0;
  int cycle = 0;
  std::vector<int> promoted;  // global element ids
  int local_dofs_after = 0;
};

// Predictor: local interface nodes with d_L < TOL_d are mapped through the
// trace pairing to global edges; their non-fictitious incident elements are
// promoted. Empty result means the checking criterion fails (stop).
std::vector<int> predict(const GLProblem& prob, const VecX& d_L, const AdaptConfig& cfg);

// Re-tags the promoted global elements FICTITIOUS and extends the local mesh
// by their refined versions (conforming glue via node provenance).
void grow_local_domain(QuadMesh& global_mesh, LocalMesh& local,
                       const std::vector<int>& promoted, const StiffnessField& stiffness);

// Interpolates u_G onto newly added local nodes (Q1 evaluation); new regions
// start intact (d = 1, H = 0); existing local entries are kept.
void transfer_solution(const QuadMesh& global_mesh, const VecX& u_G, const LocalMesh& local,
                       int old_n_nodes, int old_n_elements, VecX& u_L, VecX& d_L,
                       HistoryField& H);

struct AdaptHooks {
  StiffnessField stiffness;  // heterogeneity for newly refined elements
  std::function<LoadSchedule(const QuadMesh&)> make_local_schedule;
};

struct PCStepResult {
  GLStepStats gl;
  std::vector<AdaptEvent> events;
  int cycles = 1;  // number of GL solves performed at this load step
};

// Corrector loop at a fixed load step: solve, predict, grow, re-solve from
// the previous step's state until no interface node violates TOL_d.
PCStepResult predictor_corrector_step(GLProblem& prob, GLState& state, int step,
                                      QuadMesh& global_mesh, LocalMesh& local,
                                      const AdaptConfig& acfg, const AdaptHooks& hooks,
                                      InvariantMonitor* monitor = nullptr);

}  // namespace pfgl
