#include "pfgl/single_scale.hpp"

namespace pfgl {

namespace {

double free_norm(const VecX& r, const DofMap& dofs) {
  double s = 0;
  for (int i = 0; i < r.size(); ++i)
    if (!dofs.is_constrained(i)) s += r[i] * r[i];
  return std::sqrt(s);
}

double rel_change(const VecX& now, const VecX& before) {
  const double denom = std::max(now.norm(), 1e-14);
  return (now - before).norm() / denom;
}

}  // namespace

SingleScaleState initial_state(const SingleScaleProblem& prob) {
  SingleScaleState st;
  st.u = VecX::Zero(2 * prob.mesh->n_nodes());
  st.d = VecX::Ones(prob.mesh->n_nodes());
  st.H.resize(prob.mesh->n_elements());
  return st;
}

VecX solve_phase_field(const QuadMesh& mesh, const MaterialParams& params,
                       const HistoryField& H, const std::vector<int>& support) {
  Assembled sys = assemble_phase_field(mesh, params, H, support);
  DofMap dofs(mesh.n_nodes(), 1);
  if (!support.empty()) {
    std::vector<char> active(mesh.n_nodes(), 0);
    for (int e : support)
      for (int k = 0; k < 4; ++k) active[mesh.elements[e][k]] = 1;
    for (int n = 0; n < mesh.n_nodes(); ++n)
      if (!active[n]) dofs.constrain(n, 0, 1.0);  // intact outside the support
  }
  SpMat A;
  VecX b;
  apply_dirichlet(sys.K, sys.rhs, dofs, A, b);
  return solve_spd(A, b, "phase-field system");
}

void update_history_field(const QuadMesh& mesh, const MaterialParams& params, const VecX& u,
                          const std::vector<int>& support, HistoryField& H) {
  std::vector<int> elems = support;
  if (elems.empty()) {
    elems.resize(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) elems[e] = e;
  }
  ElementBasis basis;
  for (int e : elems) {
    const MaterialParams pe = params.scaled(mesh.stiffness_scale[e]);
    int q = 0;
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      const Mat2 eps = strain_at(basis, mesh, e, u);
      H.at(e, q) = update_history(H.at(e, q), crack_driving_state(eps, pe));
      ++q;
    }
  }
}

double reaction_force(const QuadMesh& mesh, const MaterialParams& params, const VecX& u,
                      const VecX* d, const std::vector<char>* pf_mask,
                      const LoadSchedule& schedule) {
  const Assembled sys = assemble_displacement(mesh, params, d, pf_mask, u);
  double r = 0;
  for (const auto& [node, comp, sign] : schedule.reaction_dofs())
    r += sign * sys.rhs[2 * node + comp];
  return r;
}

namespace {

// Newton solve of the displacement equation at fixed d.
int newton_displacement(const SingleScaleProblem& prob, const VecX& d,
                        const std::vector<char>& mask, DofMap& dofs, VecX& u) {
  const auto& cfg = prob.config;
  dofs.impose(u);
  double r0 = -1;
  for (int it = 0; it < cfg.max_newton; ++it) {
    Assembled sys = assemble_displacement(*prob.mesh, prob.params, &d, &mask, u);
    const double rn = free_norm(sys.rhs, dofs);
    if (it == 0) r0 = std::max(rn, cfg.newton_floor);
    if (rn <= cfg.newton_tol * r0 || rn <= cfg.newton_floor) return it;
    SpMat K;
    VecX rhs;
    apply_dirichlet(sys.K, -sys.rhs, dofs, K, rhs, /*homogeneous=*/true);
    u += solve_sparse(K, rhs, "displacement Newton");
  }
  fail("Newton diverged after ", cfg.max_newton,
       " iterations at step u=", u.norm(), " (no automatic substepping)");
}

}  // namespace

StepStats solve_load_step(const SingleScaleProblem& prob, SingleScaleState& state, int step,
                          InvariantMonitor* monitor) {
  const QuadMesh& mesh = *prob.mesh;
  const auto mask = prob.pf_mask();
  StepStats stats;

  DofMap dofs(mesh.n_nodes(), 2);
  prob.schedule.apply(dofs, step);

  const VecX d_prev_step = state.d;
  const HistoryField H_prev_step = state.H;

  HistoryField H_cur = state.H;
  VecX u = state.u;
  VecX d = state.d;

  for (int sweep = 0; sweep < prob.config.max_stagger; ++sweep) {
    const VecX u_before = u, d_before = d;

    d = solve_phase_field(mesh, prob.params, H_cur, prob.pf_support);
    if (sweep >= prob.config.relax_after)
      d = prob.config.relaxation * d + (1.0 - prob.config.relaxation) * d_before;
    stats.newton_iterations += newton_displacement(prob, d, mask, dofs, u);
    update_history_field(mesh, prob.params, u, prob.pf_support, H_cur);

    ++stats.stagger_sweeps;
    if (sweep > 0 && rel_change(u, u_before) < prob.config.stagger_tol &&
        rel_change(d, d_before) < prob.config.stagger_tol)
      break;
    require(sweep + 1 < prob.config.max_stagger, "stagger loop did not converge in ",
            prob.config.max_stagger, " sweeps at step ", step);
  }

  state.u = u;
  state.d = d;
  state.H = H_cur;
  state.step = step;
  stats.reaction = reaction_force(mesh, prob.params, u, &d, &mask, prob.schedule);
  if (monitor) monitor->observe(d_prev_step, state.d, H_prev_step, state.H);
  return stats;
}

}  // namespace pfgl
