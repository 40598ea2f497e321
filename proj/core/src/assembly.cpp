#include "pfgl/assembly.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace pfgl {

const std::array<QuadPoint, 4>& gauss4() {
  static const double g = 1.0 / std::sqrt(3.0);
  static const std::array<QuadPoint, 4> pts = {
      QuadPoint{-g, -g, 1.0}, QuadPoint{g, -g, 1.0}, QuadPoint{g, g, 1.0},
      QuadPoint{-g, g, 1.0}};
  return pts;
}

void ElementBasis::compute(const QuadMesh& mesh, int elem, double xi, double eta) {
  const auto& c = mesh.elements[elem];
  const std::array<double, 4> xs = {-1, 1, 1, -1};
  const std::array<double, 4> es = {-1, -1, 1, 1};
  Mat2 J = Mat2::Zero();
  std::array<Vec2, 4> dref;
  for (int i = 0; i < 4; ++i) {
    N[i] = 0.25 * (1 + xs[i] * xi) * (1 + es[i] * eta);
    dref[i] = {0.25 * xs[i] * (1 + es[i] * eta), 0.25 * es[i] * (1 + xs[i] * xi)};
    J += mesh.nodes[c[i]] * dref[i].transpose();
  }
  detJ = J.determinant();
  require(detJ > 0, "element ", elem, " has nonpositive Jacobian (detJ=", detJ, ")");
  const Mat2 Jinv = J.inverse();
  for (int i = 0; i < 4; ++i) dN[i] = Jinv.transpose() * dref[i];
}

Mat2 strain_at(const ElementBasis& basis, const QuadMesh& mesh, int elem, const VecX& u) {
  const auto& c = mesh.elements[elem];
  Mat2 grad = Mat2::Zero();
  for (int i = 0; i < 4; ++i) {
    const Vec2 ui(u[2 * c[i]], u[2 * c[i] + 1]);
    grad += ui * basis.dN[i].transpose();
  }
  return 0.5 * (grad + grad.transpose());
}

Assembled assemble_displacement(const QuadMesh& mesh, const MaterialParams& params,
                                const VecX* d_nodal, const std::vector<char>* pf_elements,
                                const VecX& u) {
  const int ndof = 2 * mesh.n_nodes();
  require(u.size() == ndof, "assemble_displacement: u size mismatch");
  Assembled out;
  out.rhs = VecX::Zero(ndof);
  out.K.reserve(static_cast<std::size_t>(mesh.n_elements()) * 64);

  ElementBasis basis;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& c = mesh.elements[e];
    const MaterialParams pe = params.scaled(mesh.stiffness_scale[e]);
    const bool with_d =
        d_nodal && (!pf_elements || (*pf_elements)[static_cast<std::size_t>(e)]);

    Eigen::Matrix<double, 8, 8> Ke = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> fe = Eigen::Matrix<double, 8, 1>::Zero();
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      const double dv = qp.w * basis.detJ;

      double d = 1.0;
      if (with_d)
        d = basis.N[0] * (*d_nodal)[c[0]] + basis.N[1] * (*d_nodal)[c[1]] +
            basis.N[2] * (*d_nodal)[c[2]] + basis.N[3] * (*d_nodal)[c[3]];

      const Mat2 eps = strain_at(basis, mesh, e, u);
      const Mat2 sig = stress(eps, d, pe);
      const Mat3 C = tangent(eps, d, pe);

      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int i = 0; i < 4; ++i) {
        B(0, 2 * i) = basis.dN[i].x();
        B(1, 2 * i + 1) = basis.dN[i].y();
        B(2, 2 * i) = basis.dN[i].y();
        B(2, 2 * i + 1) = basis.dN[i].x();
      }
      const Eigen::Vector3d sv(sig(0, 0), sig(1, 1), sig(0, 1));
      fe += dv * B.transpose() * sv;
      Ke += dv * B.transpose() * C * B;
    }

    for (int i = 0; i < 4; ++i)
      for (int ci = 0; ci < 2; ++ci) {
        const int gi = 2 * c[i] + ci;
        out.rhs[gi] += fe[2 * i + ci];
        for (int j = 0; j < 4; ++j)
          for (int cj = 0; cj < 2; ++cj)
            out.K.emplace_back(gi, 2 * c[j] + cj, Ke(2 * i + ci, 2 * j + cj));
      }
  }
  return out;
}

Assembled assemble_phase_field(const QuadMesh& mesh, const MaterialParams& params,
                               const HistoryField& H, const std::vector<int>& support) {
  const int ndof = mesh.n_nodes();
  Assembled out;
  out.rhs = VecX::Zero(ndof);

  std::vector<int> elems = support;
  if (elems.empty()) {
    elems.resize(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) elems[e] = e;
  }
  out.K.reserve(elems.size() * 16);

  const double l2 = params.length_scale * params.length_scale;
  const Mat2 diff = l2 * (Mat2::Identity() + params.alpha * params.structural_tensor());

  // The reaction block (1 + 2(1-kappa)H) is row-sum lumped; with the
  // consistent gradient stiffness this keeps the operator inverse-positive
  // on square meshes, so 0 < d <= 1 and stepwise monotonicity hold at the
  // discrete level. Row sums match the consistent form, so uniform states
  // (the homogeneous closed form) are reproduced exactly.
  ElementBasis basis;
  for (int e : elems) {
    const auto& c = mesh.elements[e];
    Eigen::Matrix4d Ae = Eigen::Matrix4d::Zero();
    Eigen::Vector4d be = Eigen::Vector4d::Zero();
    int q = 0;
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      const double dv = qp.w * basis.detJ;
      const double hq = H.at(e, q++);
      const double react = 1.0 + 2.0 * (1.0 - params.kappa) * hq;
      for (int i = 0; i < 4; ++i) {
        be[i] += dv * basis.N[i];
        Ae(i, i) += dv * react * basis.N[i];
        for (int j = 0; j < 4; ++j)
          Ae(i, j) += dv * basis.dN[i].dot(diff * basis.dN[j]);
      }
    }
    for (int i = 0; i < 4; ++i) {
      out.rhs[c[i]] += be[i];
      for (int j = 0; j < 4; ++j) out.K.emplace_back(c[i], c[j], Ae(i, j));
    }
  }
  return out;
}

Triplets elastic_stiffness(const QuadMesh& mesh, const MaterialParams& params,
                           const std::vector<int>& elems) {
  std::vector<int> ids = elems;
  if (ids.empty()) {
    ids.resize(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) ids[e] = e;
  }
  Triplets K;
  K.reserve(ids.size() * 64);
  ElementBasis basis;
  for (int e : ids) {
    const auto& c = mesh.elements[e];
    const MaterialParams pe = params.scaled(mesh.stiffness_scale[e]);
    const Mat3 C = tangent(Mat2::Zero(), 1.0, pe);
    Eigen::Matrix<double, 8, 8> Ke = Eigen::Matrix<double, 8, 8>::Zero();
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int i = 0; i < 4; ++i) {
        B(0, 2 * i) = basis.dN[i].x();
        B(1, 2 * i + 1) = basis.dN[i].y();
        B(2, 2 * i) = basis.dN[i].y();
        B(2, 2 * i + 1) = basis.dN[i].x();
      }
      Ke += qp.w * basis.detJ * B.transpose() * C * B;
    }
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        K.emplace_back(2 * c[i / 2] + i % 2, 2 * c[j / 2] + j % 2, Ke(i, j));
  }
  return K;
}

void apply_dirichlet(const Triplets& K, const VecX& rhs, const DofMap& dofs,
                     SpMat& K_out, VecX& rhs_out, bool homogeneous) {
  const int n = dofs.ndof();
  require(rhs.size() == n, "apply_dirichlet: rhs size mismatch");
  rhs_out = rhs;

  Triplets kept;
  kept.reserve(K.size() + dofs.constrained.size());
  for (const auto& t : K) {
    const bool ri = dofs.is_constrained(t.row());
    const bool cj = dofs.is_constrained(t.col());
    if (!ri && !cj) {
      kept.push_back(t);
    } else if (!ri && cj && !homogeneous) {
      rhs_out[t.row()] -= t.value() * dofs.value[t.col()];
    }
  }
  for (int d = 0; d < n; ++d) {
    if (dofs.is_constrained(d)) {
      kept.emplace_back(d, d, 1.0);
      rhs_out[d] = homogeneous ? 0.0 : dofs.value[d];
    }
  }
  K_out.resize(n, n);
  K_out.setFromTriplets(kept.begin(), kept.end());
}

VecX solve_sparse(const SpMat& K, const VecX& rhs, const char* context) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(K);
  require(lu.info() == Eigen::Success, "sparse LU factorization failed: ", context);
  VecX x = lu.solve(rhs);
  require(lu.info() == Eigen::Success, "sparse LU solve failed: ", context);
  return x;
}

VecX solve_spd(const SpMat& K, const VecX& rhs, const char* context) {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(K);
  if (ldlt.info() == Eigen::Success) {
    VecX x = ldlt.solve(rhs);
    if (ldlt.info() == Eigen::Success) return x;
  }
  return solve_sparse(K, rhs, context);
}

}  // namespace pfgl
