#pragma once

#include "pfgl/assembly.hpp"

namespace pfgl {

struct StaggeredConfig {
  double newton_tol = 1e-10;    // relative residual drop
  double newton_floor = 1e-14;  // absolute residual floor (zero-load steps)
  int max_newton = 30;
  double stagger_tol = 1e-6;    // relative change of u and d between sweeps
  // Crack transits advance quasi-statically through the sweeps, so critical
  // steps legitimately take hundreds of them.
  int max_stagger = 4000;
  // Past this sweep count the phase-field update is damped to break genuine
  // two-cycles (same fixed point; engages only in pathological states).
  int relax_after = 2000;
  double relaxation = 0.5;
};

// One constrained dof group: value = scale * ubar(step). scale = 0 fixes,
// +/-1 drives along the monotone displacement schedule.
struct BCGroup {
  std::vector<int> nodes;
  int comp = 0;
  double scale = 0;
  bool driven() const { return scale != 0.0; }
};

struct LoadSchedule {
  double increment = 0;  // mm per step
  int steps = 0;
  std::vector<BCGroup> groups;
  double ubar(int step) const { return increment * step; }

  void apply(DofMap& dofs, int step) const {
    for (const auto& g : groups)
      for (int n : g.nodes) dofs.constrain(n, g.comp, g.scale * ubar(step));
  }
  // (node, comp, sign) carrying the reaction sum
  std::vector<std::tuple<int, int, double>> reaction_dofs() const {
    std::vector<std::tuple<int, int, double>> out;
    for (const auto& g : groups)
      if (g.driven())
        for (int n : g.nodes) out.emplace_back(n, g.comp, g.scale > 0 ? 1.0 : -1.0);
    return out;
  }
};

// Running check of the irreversibility and bound invariants. Nodal d
// monotonicity is a fixed-domain property: growing the local domain couples
// old interface nodes to fresh intact elements and legitimately lifts d
// there, so growth steps skip that channel (H stays monotone regardless).
struct InvariantMonitor {
  double d_min = 1.0, d_max = 1.0;
  double max_d_increase = 0.0;  // max over fixed-domain steps of d_new - d_old
  double max_H_decrease = 0.0;  // max over steps/points of H_old - H_new

  void observe(const VecX& d_old, const VecX& d_new, const HistoryField& H_old,
               const HistoryField& H_new, bool domain_grew = false) {
    for (int i = 0; i < d_new.size(); ++i) {
      d_min = std::min(d_min, d_new[i]);
      d_max = std::max(d_max, d_new[i]);
      if (!domain_grew && i < d_old.size())
        max_d_increase = std::max(max_d_increase, d_new[i] - d_old[i]);
    }
    for (std::size_t k = 0; k < H_new.H.size() && k < H_old.H.size(); ++k)
      max_H_decrease = std::max(max_H_decrease, H_old.H[k] - H_new.H[k]);
  }
  void merge(const InvariantMonitor& o) {
    d_min = std::min(d_min, o.d_min);
    d_max = std::max(d_max, o.d_max);
    max_d_increase = std::max(max_d_increase, o.max_d_increase);
    max_H_decrease = std::max(max_H_decrease, o.max_H_decrease);
  }
};

struct SingleScaleProblem {
  const QuadMesh* mesh = nullptr;
  MaterialParams params;
  LoadSchedule schedule;
  StaggeredConfig config;
  // Elements carrying the phase field; empty = whole mesh. Elements outside
  // evaluate d = 1 and carry no history.
  std::vector<int> pf_support;

  std::vector<char> pf_mask() const {
    std::vector<char> m(mesh->n_elements(), pf_support.empty() ? 1 : 0);
    for (int e : pf_support) m[e] = 1;
    return m;
  }
};

struct SingleScaleState {
  VecX u, d;
  HistoryField H;
  int step = 0;
};

struct StepStats {
  int stagger_sweeps = 0;
  int newton_iterations = 0;
  double reaction = 0;
};

SingleScaleState initial_state(const SingleScaleProblem& prob);

// One staggered load step; throws on Newton divergence.
StepStats solve_load_step(const SingleScaleProblem& prob, SingleScaleState& state, int step,
                          InvariantMonitor* monitor = nullptr);

// Building blocks shared with the Global-Local local solve.
VecX solve_phase_field(const QuadMesh& mesh, const MaterialParams& params,
                       const HistoryField& H, const std::vector<int>& support);
void update_history_field(const QuadMesh& mesh, const MaterialParams& params, const VecX& u,
                          const std::vector<int>& support, HistoryField& H);
double reaction_force(const QuadMesh& mesh, const MaterialParams& params, const VecX& u,
                      const VecX* d, const std::vector<char>* pf_mask,
                      const LoadSchedule& schedule);

}  // namespace pfgl
