#include "pfgl/interface.hpp"

#include <algorithm>
#include <cmath>

namespace pfgl {

namespace {

// 2-point Gauss on [0,1].
constexpr double kG0 = 0.5 - 0.5 / 1.7320508075688772;
constexpr double kG1 = 0.5 + 0.5 / 1.7320508075688772;

void add_segment_mass(MatX& M, const InterfaceDofs& dofs, int na, int nb, double h) {
  for (int c = 0; c < 2; ++c) {
    const int pa = dofs.pair(na, c), pb = dofs.pair(nb, c);
    M(pa, pa) += h / 3.0;
    M(pb, pb) += h / 3.0;
    M(pa, pb) += h / 6.0;
    M(pb, pa) += h / 6.0;
  }
}

}  // namespace

CouplingOperators interface_mass_matrices(const QuadMesh& global_mesh,
                                          const InterfaceTrace& trace_G,
                                          const QuadMesh& local_mesh,
                                          const InterfaceTrace& trace_L) {
  require(!trace_G.empty() && !trace_L.empty(),
          "interface_mass_matrices: empty interface trace");
  CouplingOperators ops;
  ops.trace_G = trace_G;
  ops.trace_L = trace_L;
  ops.parent_edge = pair_trace_edges(trace_L, trace_G);

  ops.gnodes.build(trace_G.nodes());
  ops.lnodes.build(trace_L.nodes());
  const int ng = ops.ng(), nl = ops.nl();

  ops.L_G = MatX::Zero(ng, ng);
  ops.M_LL = MatX::Zero(nl, nl);
  ops.L_L = MatX::Zero(nl, ng);
  ops.P = MatX::Zero(nl, ng);

  for (std::size_t e = 0; e < trace_G.edges.size(); ++e)
    add_segment_mass(ops.L_G, ops.gnodes, trace_G.edges[e].n0, trace_G.edges[e].n1,
                     trace_G.edge_length(static_cast<int>(e)));
  for (std::size_t e = 0; e < trace_L.edges.size(); ++e)
    add_segment_mass(ops.M_LL, ops.lnodes, trace_L.edges[e].n0, trace_L.edges[e].n1,
                     trace_L.edge_length(static_cast<int>(e)));

  // mortar blocks: integrate local hats against the containing global hat
  for (std::size_t le = 0; le < trace_L.edges.size(); ++le) {
    const int ge = ops.parent_edge[le];
    const auto& eL = trace_L.edges[le];
    const auto& eG = trace_G.edges[ge];
    const Vec2 A = global_mesh.nodes[eG.n0], B = global_mesh.nodes[eG.n1];
    const Vec2 P0 = local_mesh.nodes[eL.n0], P1 = local_mesh.nodes[eL.n1];
    const double h = (P1 - P0).norm();
    const double ab2 = (B - A).squaredNorm();
    for (double t : {kG0, kG1}) {
      const Vec2 x = (1 - t) * P0 + t * P1;
      const double s = (B - A).dot(x - A) / ab2;
      const double NL[2] = {1 - t, t};
      const double NG[2] = {1 - s, s};
      const int lid[2] = {eL.n0, eL.n1};
      const int gid[2] = {eG.n0, eG.n1};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int c = 0; c < 2; ++c)
            ops.L_L(ops.lnodes.pair(lid[i], c), ops.gnodes.pair(gid[j], c)) +=
                0.5 * h * NL[i] * NG[j];
    }
  }

  // nodal interpolation of global-trace fields at local trace nodes
  const double tol = 1e-9 * std::max(global_mesh.diameter(), 1.0);
  for (std::size_t k = 0; k < ops.lnodes.nodes.size(); ++k) {
    const Vec2 x = local_mesh.nodes[ops.lnodes.nodes[k]];
    bool placed = false;
    for (const auto& eG : trace_G.edges) {
      const Vec2 A = global_mesh.nodes[eG.n0], B = global_mesh.nodes[eG.n1];
      const Vec2 d = B - A;
      const double s = d.dot(x - A) / d.squaredNorm();
      const double dist = std::abs(d.x() * (x - A).y() - d.y() * (x - A).x()) / d.norm();
      if (dist > tol || s < -1e-9 || s > 1 + 1e-9) continue;
      for (int c = 0; c < 2; ++c) {
        ops.P(2 * static_cast<int>(k) + c, ops.gnodes.pair(eG.n0, c)) = 1 - s;
        ops.P(2 * static_cast<int>(k) + c, ops.gnodes.pair(eG.n1, c)) = s;
      }
      placed = true;
      break;
    }
    require(placed, "interface_mass_matrices: local trace node at (", x.x(), ",", x.y(),
            ") is not on the global trace");
  }

  ops.W = ops.M_LL.ldlt().solve(ops.L_L);

  ops.gdof.resize(ng);
  for (std::size_t k = 0; k < ops.gnodes.nodes.size(); ++k)
    for (int c = 0; c < 2; ++c) ops.gdof[2 * k + c] = 2 * ops.gnodes.nodes[k] + c;
  ops.ldof.resize(nl);
  for (std::size_t k = 0; k < ops.lnodes.nodes.size(); ++k)
    for (int c = 0; c < 2; ++c) ops.ldof[2 * k + c] = 2 * ops.lnodes.nodes[k] + c;

  ops.activeG.assign(ng, 1);
  ops.activeL.assign(nl, 1);
  return ops;
}

void set_active_pairs(CouplingOperators& ops, const DofMap& global_dofs,
                      const DofMap& local_dofs) {
  for (int p = 0; p < ops.ng(); ++p)
    ops.activeG[p] = global_dofs.is_constrained(ops.gdof[p]) ? 0 : 1;
  for (int p = 0; p < ops.nl(); ++p)
    ops.activeL[p] = local_dofs.is_constrained(ops.ldof[p]) ? 0 : 1;
}

VecX gather_pairs(const std::vector<int>& pair_dofs, const VecX& full) {
  VecX out(static_cast<int>(pair_dofs.size()));
  for (std::size_t p = 0; p < pair_dofs.size(); ++p) out[p] = full[pair_dofs[p]];
  return out;
}

std::vector<int> mask_positions(const std::vector<char>& mask) {
  std::vector<int> pos;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) pos.push_back(static_cast<int>(i));
  return pos;
}

MatX masked(const MatX& A, const std::vector<char>& rows, const std::vector<char>& cols) {
  const auto r = mask_positions(rows), c = mask_positions(cols);
  MatX out(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = A(r[i], c[j]);
  return out;
}

VecX masked(const VecX& v, const std::vector<char>& rows) {
  const auto r = mask_positions(rows);
  VecX out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = v[r[i]];
  return out;
}

}  // namespace pfgl
