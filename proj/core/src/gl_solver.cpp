#include "pfgl/gl_solver.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

namespace pfgl {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

VecX scatter_full(const VecX& active_vals, const std::vector<char>& mask) {
  VecX full = VecX::Zero(static_cast<int>(mask.size()));
  const auto pos = mask_positions(mask);
  for (std::size_t i = 0; i < pos.size(); ++i) full[pos[i]] = active_vals[i];
  return full;
}

double rel_norm(const VecX& delta, const VecX& ref, double floor_scale) {
  return delta.norm() / std::max(ref.norm(), floor_scale);
}

}  // namespace

GLProblem setup_gl_problem(const QuadMesh& global_mesh, const LocalMesh& local,
                           const MaterialParams& params, const LoadSchedule& gsched,
                           const LoadSchedule& lsched, const GLConfig& config) {
  GLProblem prob;
  prob.global_mesh = &global_mesh;
  prob.local = &local;
  prob.params = params;
  prob.global_schedule = gsched;
  prob.local_schedule = lsched;
  prob.config = config;
  // the interface mismatch cannot drop below the stagger noise floor
  prob.config.local.stagger_tol =
      std::min(prob.config.local.stagger_tol, 1e-2 * prob.config.tol_gl);

  const InterfaceTrace trace_F = extract_interface(global_mesh, Region::Fictitious, false);
  require(!trace_F.empty(), "setup_gl_problem: no fictitious region tagged on the global mesh");
  const InterfaceTrace trace_L = project_interface(ProjectionDirection::GlobalToLocal,
                                                   trace_F, local.mesh);
  prob.ops = interface_mass_matrices(global_mesh, trace_F, local.mesh, trace_L);

  prob.global_dofs = DofMap(global_mesh.n_nodes(), 2);
  gsched.apply(prob.global_dofs, 1);
  prob.local_dofs = DofMap(local.mesh.n_nodes(), 2);
  lsched.apply(prob.local_dofs, 1);
  set_active_pairs(prob.ops, prob.global_dofs, prob.local_dofs);

  // The condensed fictitious patch and the interface closure tolerate fixed
  // (zero-valued) boundary contact exactly; a driven boundary inside the
  // local region breaks the load-free local domain assumption.
  auto reject_driven = [](const LoadSchedule& sched, const std::vector<int>& trace_nodes,
                          const char* side) {
    for (const auto& g : sched.groups) {
      if (!g.driven()) continue;
      for (int n : g.nodes)
        for (int t : trace_nodes)
          require(n != t, "setup_gl_problem: the ", side,
                  " interface reaches a driven boundary; enlarge the domain or stop "
                  "the schedule before complete failure");
    }
  };
  reject_driven(gsched, prob.ops.trace_G.nodes(), "global");
  reject_driven(lsched, prob.ops.trace_L.nodes(), "local");
  std::vector<int> fict_nodes;
  for (int e = 0; e < global_mesh.n_elements(); ++e)
    if (global_mesh.element_tags[e] == Region::Fictitious)
      for (int k = 0; k < 4; ++k) fict_nodes.push_back(global_mesh.elements[e][k]);
  reject_driven(gsched, fict_nodes, "fictitious-region");

  // intact stiffness of the whole global mesh (also feeds both Schur maps)
  const VecX zero_u = VecX::Zero(2 * global_mesh.n_nodes());
  prob.K_G0 = assemble_displacement(global_mesh, params, nullptr, nullptr, zero_u).K;

  std::vector<int> active_gdofs;
  for (int p = 0; p < prob.ops.ng(); ++p)
    if (prob.ops.activeG[p]) active_gdofs.push_back(prob.ops.gdof[p]);

  std::vector<int> complementary, fictitious;
  for (int e = 0; e < global_mesh.n_elements(); ++e)
    (global_mesh.element_tags[e] == Region::Fictitious ? fictitious : complementary)
        .push_back(e);
  prob.S_C = schur_complement(elastic_stiffness(global_mesh, params, complementary),
                              prob.global_dofs, active_gdofs, Region::Global);
  prob.S_F = schur_complement(elastic_stiffness(global_mesh, params, fictitious),
                              prob.global_dofs, active_gdofs, Region::Fictitious);
  prob.robin = build_robin_params(prob.S_C, nullptr,
                                  prob.ops,
                                  config.mode == RobinMode::Robin ? RobinMode::RobinIdentity
                                                                  : config.mode);
  prob.robin.mode = config.mode;  // Robin-mode K_IA_G is refreshed per load step
  return prob;
}

GLState initial_gl_state(const GLProblem& prob) {
  GLState st;
  st.u_G = VecX::Zero(2 * prob.global_mesh->n_nodes());
  st.u_L = VecX::Zero(2 * prob.local->mesh.n_nodes());
  st.d_L = VecX::Ones(prob.local->mesh.n_nodes());
  const int nga = static_cast<int>(mask_positions(prob.ops.activeG).size());
  const int nla = static_cast<int>(mask_positions(prob.ops.activeL).size());
  st.u_Gamma = VecX::Zero(nga);
  st.lambda_C = VecX::Zero(nga);
  st.lambda_L = VecX::Zero(nla);
  st.H_L.resize(prob.local->mesh.n_elements());
  return st;
}

namespace {

// Newton solve of the local mechanical saddle system at fixed d_L.
int local_mechanical_solve(const GLProblem& prob, const DofMap& ldofs, const VecX& LambdaL,
                           const VecX& d_L, VecX& u_L, VecX& u_half, VecX& lambda_L) {
  const QuadMesh& mesh = prob.local->mesh;
  const CouplingOperators& ops = prob.ops;
  const auto posG = mask_positions(ops.activeG);
  const auto posL = mask_positions(ops.activeL);
  const int nu = 2 * mesh.n_nodes();
  const int nga = static_cast<int>(posG.size());
  const int nla = static_cast<int>(posL.size());
  const int ntot = nu + nga + nla;
  const bool dn_mode = prob.config.mode == RobinMode::DirichletNeumann;

  const MatX L_L_aa = masked(ops.L_L, ops.activeL, ops.activeG);
  const MatX M_row_active = masked(ops.M_LL, ops.activeL, std::vector<char>(ops.nl(), 1));

  const double floor_scale = 1e-14 * (1.0 + ops.trace_G.length());
  ldofs.impose(u_L);

  const std::vector<char> all_mask(mesh.n_elements(), 1);
  double r0 = -1;
  for (int it = 0; it < prob.config.local.max_newton; ++it) {
    Assembled sys = assemble_displacement(mesh, prob.params, &d_L, &all_mask, u_L);

    // residuals
    VecX lamL_full = scatter_full(lambda_L, ops.activeL);
    const VecX mortar_lam = ops.M_LL * lamL_full;

    VecX R_u = sys.rhs;
    for (int p = 0; p < ops.nl(); ++p) R_u[ops.ldof[p]] -= mortar_lam[p];
    for (int dof = 0; dof < nu; ++dof)
      if (ldofs.is_constrained(dof)) R_u[dof] = 0.0;

    VecX R_c1;
    if (dn_mode) {
      R_c1 = u_half - LambdaL;  // prescribed trace
    } else {
      R_c1 = prob.robin.K_IA_L * u_half +
             masked(ops.L_L.transpose() * lamL_full, ops.activeG) - LambdaL;
    }
    const VecX ul_trace = gather_pairs(ops.ldof, u_L);
    const VecX R_c2 = L_L_aa * u_half - masked(ops.M_LL * ul_trace, ops.activeL);

    const double rn = std::sqrt(R_u.squaredNorm() + R_c1.squaredNorm() + R_c2.squaredNorm());
    if (std::getenv("PFGL_DEBUG_NEWTON"))
      std::cout << "  newton it=" << it << " rn=" << rn << " Ru=" << R_u.norm()
                << " Rc1=" << R_c1.norm() << " Rc2=" << R_c2.norm() << "\n";
    if (it == 0) r0 = std::max(rn, prob.config.local.newton_floor);
    if (rn <= prob.config.local.newton_tol * r0 || rn <= prob.config.local.newton_floor)
      return it;

    // Jacobian
    Triplets J;
    J.reserve(sys.K.size() + 4 * ops.nl() * (nga + nla) + nga * nga);
    for (const auto& t : sys.K) {
      if (ldofs.is_constrained(t.row()) || ldofs.is_constrained(t.col())) continue;
      J.emplace_back(t.row(), t.col(), t.value());
    }
    for (int dof = 0; dof < nu; ++dof)
      if (ldofs.is_constrained(dof)) J.emplace_back(dof, dof, 1.0);

    // (u_L, lambda_L) block; its transpose comes from the C2 rows below
    for (int p = 0; p < ops.nl(); ++p) {
      const int row = ops.ldof[p];
      if (ldofs.is_constrained(row)) continue;
      for (int jq = 0; jq < nla; ++jq) {
        const double v = ops.M_LL(p, posL[jq]);
        if (v != 0.0) J.emplace_back(row, nu + nga + jq, -v);
      }
    }
    // C1 rows
    if (dn_mode) {
      for (int i = 0; i < nga; ++i) J.emplace_back(nu + i, nu + i, 1.0);
    } else {
      for (int i = 0; i < nga; ++i) {
        for (int j = 0; j < nga; ++j) {
          const double v = prob.robin.K_IA_L(i, j);
          if (v != 0.0) J.emplace_back(nu + i, nu + j, v);
        }
        for (int j = 0; j < nla; ++j) {
          const double v = L_L_aa(j, i);
          if (v != 0.0) J.emplace_back(nu + i, nu + nga + j, v);
        }
      }
    }
    // C2 rows: L_L u_half - M_LL (trace u_L)
    for (int i = 0; i < nla; ++i) {
      for (int j = 0; j < nga; ++j) {
        const double v = L_L_aa(i, j);
        if (v != 0.0) J.emplace_back(nu + nga + i, nu + j, v);
      }
      for (int p = 0; p < ops.nl(); ++p) {
        const int col = ops.ldof[p];
        if (ldofs.is_constrained(col)) continue;
        const double v = M_row_active(i, p);
        if (v != 0.0) J.emplace_back(nu + nga + i, col, -v);
      }
    }

    VecX R(ntot);
    R.segment(0, nu) = R_u;
    R.segment(nu, nga) = R_c1;
    R.segment(nu + nga, nla) = R_c2;

    SpMat Jm(ntot, ntot);
    Jm.setFromTriplets(J.begin(), J.end());
    const VecX dx = solve_sparse(Jm, -R, "local Robin saddle system");
    u_L += dx.segment(0, nu);
    u_half += dx.segment(nu, nga);
    lambda_L += dx.segment(nu + nga, nla);
    (void)floor_scale;
  }
  fail("local Robin solve: Newton diverged after ", prob.config.local.max_newton,
       " iterations");
}

}  // namespace

LocalSolveStats local_robin_solve(const GLProblem& prob, int step, const VecX& LambdaL,
                                  VecX& u_L, VecX& d_L, VecX& u_half, VecX& lambda_L,
                                  HistoryField& H_work) {
  const QuadMesh& mesh = prob.local->mesh;
  DofMap ldofs(mesh.n_nodes(), 2);
  prob.local_schedule.apply(ldofs, step);

  LocalSolveStats stats;
  const auto& cfg = prob.config.local;
  for (int sweep = 0; sweep < cfg.max_stagger; ++sweep) {
    const VecX u_before = u_L, d_before = d_L;

    d_L = solve_phase_field(mesh, prob.params, H_work, {});
    if (sweep >= cfg.relax_after)
      d_L = cfg.relaxation * d_L + (1.0 - cfg.relaxation) * d_before;
    stats.newton_iterations +=
        local_mechanical_solve(prob, ldofs, LambdaL, d_L, u_L, u_half, lambda_L);
    update_history_field(mesh, prob.params, u_L, {}, H_work);

    ++stats.stagger_sweeps;
    const double du = (u_L - u_before).norm() / std::max(u_L.norm(), 1e-14);
    const double dd = (d_L - d_before).norm() / std::max(d_L.norm(), 1e-14);
    if (std::getenv("PFGL_DEBUG_STAGGER") && sweep % 20 == 0)
      std::cout << "   sweep " << sweep << " du=" << du << " dd=" << dd
                << " dmin=" << d_L.minCoeff() << "\n";
    if (sweep > 0 && du < cfg.stagger_tol && dd < cfg.stagger_tol) break;
    require(sweep + 1 < cfg.max_stagger, "local stagger did not converge in ",
            cfg.max_stagger, " sweeps");
  }
  return stats;
}

void global_robin_solve(const GLProblem& prob, int step, const VecX& LambdaG,
                        const VecX& u_half, const VecX& lambda_L, VecX& u_G,
                        VecX& lambda_C, VecX& u_Gamma) {
  const QuadMesh& mesh = *prob.global_mesh;
  const CouplingOperators& ops = prob.ops;
  const auto posG = mask_positions(ops.activeG);
  const int nu = 2 * mesh.n_nodes();
  const int nga = static_cast<int>(posG.size());
  const int ntot = nu + 2 * nga;
  const bool dn_mode = prob.config.mode == RobinMode::DirichletNeumann;

  DofMap gdofs(mesh.n_nodes(), 2);
  prob.global_schedule.apply(gdofs, step);

  // combined dof map: only the u_G block carries Dirichlet data
  DofMap all(ntot, 1);
  for (int d = 0; d < nu; ++d)
    if (gdofs.is_constrained(d)) all.constrain(d, 0, gdofs.value[d]);

  Triplets K = prob.K_G0;
  VecX rhs = VecX::Zero(ntot);

  // condensed fictitious patch and traction coupling on interface dofs
  for (int i = 0; i < nga; ++i) {
    const int di = ops.gdof[posG[i]];
    for (int j = 0; j < nga; ++j) {
      const int dj = ops.gdof[posG[j]];
      const double sf = prob.S_F.S(i, j);
      if (sf != 0.0) K.emplace_back(di, dj, -sf);
      const double lg = ops.L_G(posG[i], posG[j]);
      if (lg != 0.0) K.emplace_back(di, nu + j, -lg);  // -J_G^T L_G lambda_C
    }
  }

  const VecX uhalf_full = scatter_full(u_half, ops.activeG);
  if (dn_mode) {
    // Neumann global problem: L_G lambda_C = -L_L^T lambda_L, and the
    // kinematic rows only report the trace of u_G.
    VecX lamL_full = scatter_full(lambda_L, ops.activeL);
    const VecX t = ops.L_L.transpose() * lamL_full;
    for (int i = 0; i < nga; ++i) {
      for (int j = 0; j < nga; ++j) {
        const double lg = ops.L_G(posG[i], posG[j]);
        if (lg != 0.0) K.emplace_back(nu + i, nu + j, lg);
      }
      rhs[nu + i] = -t[posG[i]];
      // u_Gamma := trace of u_G
      K.emplace_back(nu + nga + i, nu + nga + i, 1.0);
      K.emplace_back(nu + nga + i, ops.gdof[posG[i]], -1.0);
    }
  } else {
    // rows C4: -L_G (J_G u_G) = -L_G u_half
    const VecX c4 = ops.L_G * uhalf_full;
    for (int i = 0; i < nga; ++i) {
      for (int j = 0; j < nga; ++j) {
        const double lg = ops.L_G(posG[i], posG[j]);
        if (lg != 0.0) K.emplace_back(nu + i, ops.gdof[posG[j]], -lg);
      }
      rhs[nu + i] = -c4[posG[i]];
    }

    // rows C3: L_G lambda_C + K_IA_G W u_Gamma = Lambda_G, with the weak
    // interpolation W (active rows of C2) as the carrier so that
    // u_Gamma = u_half holds exactly at the fixed point
    const MatX M_aa = masked(ops.M_LL, ops.activeL, ops.activeL);
    const MatX W_aa = M_aa.ldlt().solve(masked(ops.L_L, ops.activeL, ops.activeG));
    const MatX K3 = prob.robin.K_IA_G * W_aa;
    for (int i = 0; i < nga; ++i) {
      for (int j = 0; j < nga; ++j) {
        const double lg = ops.L_G(posG[i], posG[j]);
        if (lg != 0.0) K.emplace_back(nu + nga + i, nu + j, lg);
        if (K3(i, j) != 0.0) K.emplace_back(nu + nga + i, nu + nga + j, K3(i, j));
      }
      rhs[nu + nga + i] = LambdaG[i];
    }
  }

  SpMat A;
  VecX b;
  apply_dirichlet(K, rhs, all, A, b);
  const VecX sol = solve_sparse(A, b, "global Robin saddle system");

  u_G = sol.segment(0, nu);
  lambda_C = sol.segment(nu, nga);
  u_Gamma = sol.segment(nu + nga, nga);
}

double gl_reaction(const GLProblem& prob, const GLState& state) {
  return reaction_force(*prob.global_mesh, prob.params, state.u_G, nullptr, nullptr,
                        prob.global_schedule);
}

GLStepStats gl_load_step(GLProblem& prob, GLState& state, int step,
                         InvariantMonitor* monitor) {
  const CouplingOperators& ops = prob.ops;
  GLStepStats stats;
  const double floor_scale = 1e-14 * (1.0 + ops.trace_G.length());
  const bool dn_mode = prob.config.mode == RobinMode::DirichletNeumann;

  if (prob.config.mode == RobinMode::Robin) {
    DofMap ldofs(prob.local->mesh.n_nodes(), 2);
    prob.local_schedule.apply(ldofs, step);
    std::vector<int> active_ldofs;
    for (int p = 0; p < ops.nl(); ++p)
      if (ops.activeL[p]) active_ldofs.push_back(ops.ldof[p]);
    const Triplets K_L = assemble_displacement(prob.local->mesh, prob.params, &state.d_L,
                                               nullptr, state.u_L)
                             .K;
    const SchurOperator S_L =
        schur_complement(K_L, ldofs, active_ldofs, Region::Local);
    prob.robin = build_robin_params(prob.S_C, &S_L, prob.ops, RobinMode::Robin);
  }

  VecX LambdaL;
  if (dn_mode) {
    LambdaL = masked(gather_pairs(ops.gdof, state.u_G), ops.activeG);
  } else {
    LambdaL = lambda_rhs_L(prob.robin, ops, state.u_G, state.lambda_C);
  }

  const VecX d_prev = state.d_L;
  const HistoryField H_prev = state.H_L;

  HistoryField H_work = state.H_L;
  for (int k = 1; k <= prob.config.max_gl_iter; ++k) {
    const auto t0 = Clock::now();
    H_work = state.H_L;

    VecX u_half = state.u_Gamma;
    const LocalSolveStats ls = local_robin_solve(prob, step, LambdaL, state.u_L, state.d_L,
                                                 u_half, state.lambda_L, H_work);

    VecX LambdaG;
    if (!dn_mode) LambdaG = lambda_rhs_G(prob.robin, ops, state.u_L, state.lambda_L);
    global_robin_solve(prob, step, LambdaG, u_half, state.lambda_L, state.u_G,
                       state.lambda_C, state.u_Gamma);

    VecX LambdaL_new;
    if (dn_mode) {
      LambdaL_new = masked(gather_pairs(ops.gdof, state.u_G), ops.activeG);
    } else {
      LambdaL_new = lambda_rhs_L(prob.robin, ops, state.u_G, state.lambda_C);
    }

    GLLogRow row;
    row.step = step;
    row.k = k;
    row.du_gamma_rel = rel_norm(u_half - state.u_Gamma, state.u_Gamma, floor_scale);
    row.dlambda_rel = rel_norm(LambdaL_new - LambdaL, LambdaL_new, floor_scale);
    row.stagger_sweeps = ls.stagger_sweeps;
    row.wall_ms = ms_since(t0);
    stats.log.push_back(row);

    LambdaL = LambdaL_new;
    stats.iterations = k;
    if (row.du_gamma_rel <= prob.config.tol_gl && row.dlambda_rel <= prob.config.tol_gl) {
      state.converged = true;
      break;
    }
    require(std::isfinite(row.du_gamma_rel) && row.du_gamma_rel < 1e8,
            "Global-Local iteration diverged at step ", step, ", k=", k,
            " (|du_Gamma| = ", row.du_gamma_rel,
            "); the plain fixed point is unstable for this configuration");
    if (k == prob.config.max_gl_iter) {
      std::ostringstream trace;
      for (const auto& r : stats.log)
        trace << "  k=" << r.k << " |du_G|=" << r.du_gamma_rel
              << " |dLam|=" << r.dlambda_rel << "\n";
      fail("Global-Local iteration did not converge in ", prob.config.max_gl_iter,
           " iterations at step ", step, "\n", trace.str());
    }
  }

  state.H_L = H_work;
  stats.reaction = gl_reaction(prob, state);
  if (monitor) monitor->observe(d_prev, state.d_L, H_prev, state.H_L);
  return stats;
}

}  // namespace pfgl
