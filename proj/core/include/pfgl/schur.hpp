#pragma once

#include "pfgl/interface.hpp"

namespace pfgl {

// Dense interface operator S = K_bb - K_ba K_aa^{-1} K_ab built from an
// assembled (and Dirichlet-reduced) stiffness. Dofs absent from K (nodes
// outside the source subdomain) are ignored.
struct SchurOperator {
  MatX S;
  std::vector<int> interface_dofs;  // mesh dofs, in row order of S
  Region source = Region::Global;
  double regularization = 0;        // diagonal shift applied to K_aa, if any
};

SchurOperator schur_complement(const Triplets& K, const DofMap& dofs,
                               const std::vector<int>& interface_dofs,
                               Region source = Region::Global);

// Contribution of the condensed fictitious patch to the global tangent on
// interface dofs (the lambda_F unknown is never solved for).
inline MatX fictitious_condensation(const SchurOperator& S_F) { return -S_F.S; }

enum class RobinMode { Robin, RobinIdentity, DirichletNeumann };

RobinMode robin_mode_from_string(const std::string& s);
const char* to_string(RobinMode m);

// Augmented interface stiffnesses. K_IA_L acts on active global-trace pairs;
// K_IA_G maps active local-trace pairs to active global-trace pairs. In
// DirichletNeumann mode both are empty and the solvers take the limit form.
struct RobinParams {
  RobinMode mode = RobinMode::RobinIdentity;
  MatX K_IA_L;
  MatX K_IA_G;
};

RobinParams build_robin_params(const SchurOperator& S_C, const SchurOperator* S_L,
                               const CouplingOperators& ops, RobinMode mode);

// Robin right-hand sides (active global-trace pairs).
// Lambda_L = K_IA_L (J_G u_G) - L_G lambda_C
VecX lambda_rhs_L(const RobinParams& robin, const CouplingOperators& ops, const VecX& u_G,
                  const VecX& lambda_C_active);
// Lambda_G = K_IA_G (T_L u_L) - L_L^T lambda_L
VecX lambda_rhs_G(const RobinParams& robin, const CouplingOperators& ops, const VecX& u_L,
                  const VecX& lambda_L_active);

// Binary replay dump: int64 rows, int64 cols, row-major doubles (little endian).
void dump_schur(const std::string& path, const MatX& S);
MatX load_schur(const std::string& path);

}  // namespace pfgl
