#include "pfgl/adaptivity.hpp"

#include <algorithm>

namespace pfgl {

std::vector<int> predict(const GLProblem& prob, const VecX& d_L, const AdaptConfig& cfg) {
  const CouplingOperators& ops = prob.ops;
  const QuadMesh& gmesh = *prob.global_mesh;

  std::set<int> promoted;
  for (std::size_t le = 0; le < ops.trace_L.edges.size(); ++le) {
    const auto& e = ops.trace_L.edges[le];
    const bool flagged = d_L[e.n0] < cfg.tol_d || d_L[e.n1] < cfg.tol_d;
    if (!flagged) continue;
    const int ge = ops.parent_edge[le];
    const auto& eg = ops.trace_G.edges[ge];
    for (int cand : {eg.owner_elem, eg.outer_elem}) {
      if (cand >= 0 && gmesh.element_tags[cand] != Region::Fictitious)
        promoted.insert(cand);
    }
  }

  // optional halo layers of edge neighbors
  for (int layer = 0; layer < cfg.halo; ++layer) {
    std::set<int> grown = promoted;
    for (int e : promoted) {
      const auto& c = gmesh.elements[e];
      for (int k = 0; k < 4; ++k) {
        const int eid = gmesh.edge_id(c[k], c[(k + 1) % 4]);
        if (eid < 0) continue;
        for (int s = 0; s < gmesh.edges[eid].count; ++s) {
          const int nb = gmesh.edges[eid].elems[s];
          if (nb >= 0 && gmesh.element_tags[nb] != Region::Fictitious) grown.insert(nb);
        }
      }
    }
    promoted.swap(grown);
  }
  return {promoted.begin(), promoted.end()};
}

void grow_local_domain(QuadMesh& global_mesh, LocalMesh& local,
                       const std::vector<int>& promoted, const StiffnessField& stiffness) {
  require(!promoted.empty(), "grow_local_domain: empty promotion set");
  for (int e : promoted) {
    require(global_mesh.element_tags[e] != Region::Fictitious,
            "grow_local_domain: element ", e, " is already fictitious");
    global_mesh.element_tags[e] = Region::Fictitious;
  }
  extend_local_mesh(local, global_mesh, promoted, stiffness);
}

namespace {

// Inverse bilinear map, Newton on the reference square.
Vec2 reference_coords(const QuadMesh& mesh, int elem, const Vec2& x) {
  const auto& c = mesh.elements[elem];
  Vec2 xi(0, 0);
  for (int it = 0; it < 30; ++it) {
    const std::array<double, 4> xs = {-1, 1, 1, -1};
    const std::array<double, 4> es = {-1, -1, 1, 1};
    Vec2 r = -x;
    Mat2 J = Mat2::Zero();
    for (int i = 0; i < 4; ++i) {
      const double N = 0.25 * (1 + xs[i] * xi.x()) * (1 + es[i] * xi.y());
      const Vec2 dN(0.25 * xs[i] * (1 + es[i] * xi.y()), 0.25 * es[i] * (1 + xs[i] * xi.x()));
      r += N * mesh.nodes[c[i]];
      J += mesh.nodes[c[i]] * dN.transpose();
    }
    const Vec2 dxi = J.inverse() * (-r);
    xi += dxi;
    if (dxi.norm() < 1e-14) break;
  }
  return xi;
}

}  // namespace

void transfer_solution(const QuadMesh& global_mesh, const VecX& u_G, const LocalMesh& local,
                       int old_n_nodes, int old_n_elements, VecX& u_L, VecX& d_L,
                       HistoryField& H) {
  const int n_new = local.mesh.n_nodes();
  require(u_L.size() == 2 * old_n_nodes && d_L.size() == old_n_nodes,
          "transfer_solution: stale field sizes");

  VecX u_new = VecX::Zero(2 * n_new);
  VecX d_new = VecX::Ones(n_new);
  u_new.head(2 * old_n_nodes) = u_L;
  d_new.head(old_n_nodes) = d_L;

  // map each added node into its parent global element and evaluate u_G there
  std::vector<int> parent_of_node(n_new, -1);
  for (int le = 0; le < local.mesh.n_elements(); ++le)
    for (int k = 0; k < 4; ++k) {
      const int n = local.mesh.elements[le][k];
      if (n >= old_n_nodes && parent_of_node[n] < 0)
        parent_of_node[n] = local.parent_elem[le];
    }
  for (int n = old_n_nodes; n < n_new; ++n) {
    const int ge = parent_of_node[n];
    require(ge >= 0, "transfer_solution: node ", n, " outside the refined region");
    const Vec2 xi = reference_coords(global_mesh, ge, local.mesh.nodes[n]);
    require(xi.cwiseAbs().maxCoeff() < 1.0 + 1e-6, "transfer_solution: point (",
            local.mesh.nodes[n].x(), ",", local.mesh.nodes[n].y(),
            ") outside its parent global element");
    const std::array<double, 4> xs = {-1, 1, 1, -1};
    const std::array<double, 4> es = {-1, -1, 1, 1};
    Vec2 val(0, 0);
    const auto& c = global_mesh.elements[ge];
    for (int i = 0; i < 4; ++i) {
      const double N = 0.25 * (1 + xs[i] * xi.x()) * (1 + es[i] * xi.y());
      val += N * Vec2(u_G[2 * c[i]], u_G[2 * c[i] + 1]);
    }
    u_new[2 * n] = val.x();
    u_new[2 * n + 1] = val.y();
  }

  u_L = std::move(u_new);
  d_L = std::move(d_new);
  H.H.resize(static_cast<std::size_t>(local.mesh.n_elements()) * 4, 0.0);
  require(old_n_elements <= local.mesh.n_elements(), "transfer_solution: element loss");
}

PCStepResult predictor_corrector_step(GLProblem& prob, GLState& state, int step,
                                      QuadMesh& global_mesh, LocalMesh& local,
                                      const AdaptConfig& acfg, const AdaptHooks& hooks,
                                      InvariantMonitor* monitor) {
  acfg.validate();
  PCStepResult out;
  GLState base = state;  // restart snapshot from step n-1

  for (int cycle = 0;; ++cycle) {
    require(cycle < acfg.max_corrector_cycles, "predictor-corrector: exceeded ",
            acfg.max_corrector_cycles, " corrector cycles at step ", step);
    GLState work = base;
    out.gl = gl_load_step(prob, work, step, nullptr);
    out.cycles = cycle + 1;

    const std::vector<int> promoted = predict(prob, work.d_L, acfg);
    if (promoted.empty()) {
      if (monitor)
        monitor->observe(base.d_L, work.d_L, base.H_L, work.H_L,
                         /*domain_grew=*/cycle > 0);
      state = std::move(work);
      return out;
    }

    const int old_nodes = local.mesh.n_nodes();
    const int old_elems = local.mesh.n_elements();
    grow_local_domain(global_mesh, local, promoted, hooks.stiffness);
    transfer_solution(global_mesh, base.u_G, local, old_nodes, old_elems, base.u_L,
                      base.d_L, base.H_L);

    prob = setup_gl_problem(global_mesh, local, prob.params, prob.global_schedule,
                            hooks.make_local_schedule(local.mesh), prob.config);

    // interface unknowns restart from zero on the new trace
    const int nga = static_cast<int>(mask_positions(prob.ops.activeG).size());
    const int nla = static_cast<int>(mask_positions(prob.ops.activeL).size());
    base.u_Gamma = VecX::Zero(nga);
    base.lambda_C = VecX::Zero(nga);
    base.lambda_L = VecX::Zero(nla);

    AdaptEvent ev;
    ev.step = step;
    ev.cycle = cycle;
    ev.promoted = promoted;
    ev.local_dofs_after = 3 * local.mesh.n_nodes();
    out.events.push_back(std::move(ev));
  }
}

}  // namespace pfgl
