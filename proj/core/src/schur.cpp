#include "pfgl/schur.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fstream>

namespace pfgl {

SchurOperator schur_complement(const Triplets& K, const DofMap& dofs,
                               const std::vector<int>& interface_dofs, Region source) {
  const int n = dofs.ndof();
  std::vector<char> present(n, 0);
  for (const auto& t : K) {
    if (t.value() != 0.0) {
      present[t.row()] = 1;
      present[t.col()] = 1;
    }
  }
  std::vector<int> where(n, -1);  // >=0: position in b, -2: position in a via amap
  std::vector<int> amap(n, -1);
  for (std::size_t k = 0; k < interface_dofs.size(); ++k) {
    const int d = interface_dofs[k];
    require(!dofs.is_constrained(d), "schur_complement: interface dof ", d,
            " is Dirichlet-constrained");
    // dofs absent from K contribute zero rows (degenerate subdomains)
    where[d] = static_cast<int>(k);
  }
  int na = 0;
  for (int d = 0; d < n; ++d)
    if (present[d] && !dofs.is_constrained(d) && where[d] < 0) amap[d] = na++;

  const int nb = static_cast<int>(interface_dofs.size());
  Triplets taa, tab;
  MatX Kbb = MatX::Zero(nb, nb);
  double atrace = 0;
  for (const auto& t : K) {
    const int r = t.row(), c = t.col();
    if (dofs.is_constrained(r) || dofs.is_constrained(c)) continue;
    const bool rb = where[r] >= 0, cb = where[c] >= 0;
    if (!rb && !cb) {
      taa.emplace_back(amap[r], amap[c], t.value());
      if (r == c) atrace += t.value();
    } else if (rb && cb) {
      Kbb(where[r], where[c]) += t.value();
    } else if (!rb && cb) {
      tab.emplace_back(amap[r], where[c], t.value());
    }
    // the (b,a) block is recovered from symmetry
  }

  SchurOperator out;
  out.source = source;
  out.interface_dofs = interface_dofs;
  if (na == 0) {
    out.S = 0.5 * (Kbb + Kbb.transpose());
    return out;
  }

  SpMat Kaa(na, na), Kab(na, nb);
  Kaa.setFromTriplets(taa.begin(), taa.end());
  Kab.setFromTriplets(tab.begin(), tab.end());

  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(Kaa);
  auto near_singular = [&] {
    if (ldlt.info() != Eigen::Success) return true;
    const VecX D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    return D.cwiseAbs().minCoeff() <= 1e-12 * dmax || D.minCoeff() < 0;
  };
  double shift = 0;
  if (near_singular()) {
    // floating subdomain: trace-scaled diagonal regularization
    shift = 1e-8 * atrace / na;
    SpMat Kreg = Kaa;
    for (int i = 0; i < na; ++i) Kreg.coeffRef(i, i) += shift;
    ldlt.compute(Kreg);
    require(!near_singular(),
            "schur_complement: K_aa singular even after regularization; "
            "source subdomain needs constraints");
  }
  out.regularization = shift;

  const MatX X = ldlt.solve(MatX(Kab));
  out.S = Kbb - MatX(Kab).transpose() * X;
  out.S = 0.5 * (out.S + out.S.transpose()).eval();
  return out;
}

RobinMode robin_mode_from_string(const std::string& s) {
  if (s == "robin") return RobinMode::Robin;
  if (s == "robin_identity") return RobinMode::RobinIdentity;
  if (s == "dirichlet_neumann") return RobinMode::DirichletNeumann;
  fail("unknown robin mode '", s, "' (robin | robin_identity | dirichlet_neumann)");
}

const char* to_string(RobinMode m) {
  switch (m) {
    case RobinMode::Robin: return "robin";
    case RobinMode::RobinIdentity: return "robin_identity";
    case RobinMode::DirichletNeumann: return "dirichlet_neumann";
  }
  return "?";
}

RobinParams build_robin_params(const SchurOperator& S_C, const SchurOperator* S_L,
                               const CouplingOperators& ops, RobinMode mode) {
  RobinParams rp;
  rp.mode = mode;
  if (mode == RobinMode::DirichletNeumann) return rp;

  rp.K_IA_L = S_C.S;
  const MatX LLt = masked(ops.L_L, ops.activeL, ops.activeG).transpose();
  if (mode == RobinMode::RobinIdentity) {
    rp.K_IA_G = LLt;  // S_L replaced by the identity
  } else {
    require(S_L != nullptr, "build_robin_params: Robin mode needs S_L");
    // Rigid (and fully degraded) modes of a floating local patch sit in the
    // kernel of S_L and would make the u_Gamma recovery singular; a small
    // trace-mass shift keeps the operator invertible. The converged state
    // does not depend on this choice.
    const MatX M_aa = masked(ops.M_LL, ops.activeL, ops.activeL);
    const double mu = 1e-6 * S_L->S.norm() / std::max(M_aa.norm(), 1e-300);
    rp.K_IA_G = LLt * (S_L->S + mu * M_aa);
  }
  return rp;
}

VecX lambda_rhs_L(const RobinParams& robin, const CouplingOperators& ops, const VecX& u_G,
                  const VecX& lambda_C_active) {
  const VecX ug_trace = masked(gather_pairs(ops.gdof, u_G), ops.activeG);
  // scatter active multiplier to the full trace, then take active rows of L_G
  VecX lam_full = VecX::Zero(ops.ng());
  const auto pos = mask_positions(ops.activeG);
  for (std::size_t i = 0; i < pos.size(); ++i) lam_full[pos[i]] = lambda_C_active[i];
  return robin.K_IA_L * ug_trace - masked(ops.L_G * lam_full, ops.activeG);
}

VecX lambda_rhs_G(const RobinParams& robin, const CouplingOperators& ops, const VecX& u_L,
                  const VecX& lambda_L_active) {
  const VecX ul_trace = masked(gather_pairs(ops.ldof, u_L), ops.activeL);
  VecX lam_full = VecX::Zero(ops.nl());
  const auto pos = mask_positions(ops.activeL);
  for (std::size_t i = 0; i < pos.size(); ++i) lam_full[pos[i]] = lambda_L_active[i];
  return robin.K_IA_G * ul_trace - masked(ops.L_L.transpose() * lam_full, ops.activeG);
}

void dump_schur(const std::string& path, const MatX& S) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "dump_schur: cannot open ", path);
  const std::int64_t r = S.rows(), c = S.cols();
  f.write(reinterpret_cast<const char*>(&r), sizeof(r));
  f.write(reinterpret_cast<const char*>(&c), sizeof(c));
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) {
      const double v = S(i, j);
      f.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

MatX load_schur(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "load_schur: cannot open ", path);
  std::int64_t r = 0, c = 0;
  f.read(reinterpret_cast<char*>(&r), sizeof(r));
  f.read(reinterpret_cast<char*>(&c), sizeof(c));
  require(r >= 0 && c >= 0, "load_schur: corrupt header in ", path);
  MatX S(r, c);
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) {
      double v = 0;
      f.read(reinterpret_cast<char*>(&v), sizeof(v));
      S(i, j) = v;
    }
  require(f.good(), "load_schur: truncated file ", path);
  return S;
}

}  // namespace pfgl
