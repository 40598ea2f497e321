#pragma once

#include "pfgl/assembly.hpp"
#include "pfgl/mesh.hpp"

namespace pfgl {

// Vector-valued trace dofs on an interface: pair index p = 2*k + comp for
// the k-th trace node (ascending mesh-node order).
struct InterfaceDofs {
  std::vector<int> nodes;
  std::unordered_map<int, int> index;

  void build(const std::vector<int>& node_ids) {
    nodes = node_ids;
    index.clear();
    for (std::size_t k = 0; k < nodes.size(); ++k) index[nodes[k]] = static_cast<int>(k);
  }
  int n_pairs() const { return 2 * static_cast<int>(nodes.size()); }
  int pair(int node, int comp) const { return 2 * index.at(node) + comp; }
};

// Interface operators of the coupled two-mesh problem. L_G is the
// global-trace mass matrix, L_L the mortar matrix (local test functions
// against global-trace interface functions), M_LL the local-trace mass,
// P nodal interpolation of global-trace fields onto local trace nodes.
// gdof/ldof realize the signed Boolean maps (J_G, J_L and the trace
// restriction T_L) as dof gather lists.
struct CouplingOperators {
  InterfaceTrace trace_G, trace_L;
  std::vector<int> parent_edge;  // local trace edge -> global trace edge

  InterfaceDofs gnodes, lnodes;
  MatX L_G, L_L, M_LL, P;
  MatX W;  // M_LL^{-1} L_L, the C2-consistent weak interpolation onto the local trace

  std::vector<int> gdof, ldof;      // pair -> mesh dof (2*node+comp)
  std::vector<char> activeG, activeL;  // pair masks (0 on Dirichlet pairs)

  int ng() const { return gnodes.n_pairs(); }
  int nl() const { return lnodes.n_pairs(); }
};

CouplingOperators interface_mass_matrices(const QuadMesh& global_mesh,
                                          const InterfaceTrace& trace_G,
                                          const QuadMesh& local_mesh,
                                          const InterfaceTrace& trace_L);

// Marks interface pairs whose dof is Dirichlet-constrained in either carrier
// mesh inactive; multiplier and u_Gamma unknowns exist on active pairs only.
void set_active_pairs(CouplingOperators& ops, const DofMap& global_dofs,
                      const DofMap& local_dofs);

// Gather full-mesh dof vector entries at interface pairs.
VecX gather_pairs(const std::vector<int>& pair_dofs, const VecX& full);

// Dense restriction helpers over active masks.
MatX masked(const MatX& A, const std::vector<char>& rows, const std::vector<char>& cols);
VecX masked(const VecX& v, const std::vector<char>& rows);
std::vector<int> mask_positions(const std::vector<char>& mask);

}  // namespace pfgl
