#include "pfgl/material.hpp"

#include <cmath>

namespace pfgl {

namespace {

// Heaviside with the tensile convention H(0) = 1, so that the +/- branches
// always sum to one.
inline double heaviside_plus(double x) { return x >= 0.0 ? 1.0 : 0.0; }
inline double heaviside_minus(double x) { return 1.0 - heaviside_plus(x); }

inline double psi_iso(double I1, double I2, const MaterialParams& p) {
  return 0.5 * p.lambda * I1 * I1 + p.mu * I2;
}
inline double psi_aniso(double I4, double I5, const MaterialParams& p) {
  return 0.5 * p.chi * I4 * I4 + 2.0 * p.xi * I5;
}

struct Spectral {
  double e1, e2;   // eigenvalues, e1 >= e2
  Vec2 n1, n2;     // orthonormal eigenvectors
};

Spectral eigen2(const Mat2& eps) {
  Eigen::SelfAdjointEigenSolver<Mat2> es;
  es.computeDirect(eps);
  Spectral s;
  s.e1 = es.eigenvalues()(1);
  s.e2 = es.eigenvalues()(0);
  s.n1 = es.eigenvectors().col(1);
  s.n2 = es.eigenvectors().col(0);
  return s;
}

}  // namespace

Invariants invariants(const Mat2& eps, const Mat2& M) {
  Invariants iv;
  iv.I1 = eps.trace();
  iv.I2 = (eps * eps).trace();
  iv.I4 = (eps * M).trace();
  iv.I5 = (eps * eps * M).trace();
  return iv;
}

SplitStrain spectral_split(const Mat2& eps) {
  const Spectral s = eigen2(eps);
  SplitStrain out;
  out.principal_values = {s.e1, s.e2};
  out.principal_dirs.col(0) = s.n1;
  out.principal_dirs.col(1) = s.n2;
  out.plus = macaulay_plus(s.e1) * (s.n1 * s.n1.transpose()) +
             macaulay_plus(s.e2) * (s.n2 * s.n2.transpose());
  out.minus = macaulay_minus(s.e1) * (s.n1 * s.n1.transpose()) +
              macaulay_minus(s.e2) * (s.n2 * s.n2.transpose());
  return out;
}

double tensile_energy(const Mat2& eps, const MaterialParams& p) {
  const Mat2 M = p.structural_tensor();
  const Invariants iv = invariants(eps, M);
  const SplitStrain sp = spectral_split(eps);
  const double I1p = macaulay_plus(iv.I1);
  const double I2p = (sp.plus * sp.plus).trace();
  return psi_iso(I1p, I2p, p) + psi_aniso(iv.I4, iv.I5, p);
}

double bulk_energy_density(const Mat2& eps, double d, const MaterialParams& p) {
  const Mat2 M = p.structural_tensor();
  const Invariants iv = invariants(eps, M);
  const SplitStrain sp = spectral_split(eps);
  const double I1p = macaulay_plus(iv.I1), I1m = macaulay_minus(iv.I1);
  const double I2p = (sp.plus * sp.plus).trace();
  const double I2m = (sp.minus * sp.minus).trace();
  return degradation(d, p.kappa) * (psi_iso(I1p, I2p, p) + psi_aniso(iv.I4, iv.I5, p)) +
         psi_iso(I1m, I2m, p);
}

Mat2 stress(const Mat2& eps, double d, const MaterialParams& p) {
  const Mat2 M = p.structural_tensor();
  const Invariants iv = invariants(eps, M);
  const SplitStrain sp = spectral_split(eps);
  const double I1p = macaulay_plus(iv.I1), I1m = macaulay_minus(iv.I1);
  const Mat2 s_plus = p.lambda * I1p * Mat2::Identity() + 2.0 * p.mu * sp.plus;
  const Mat2 s_minus = p.lambda * I1m * Mat2::Identity() + 2.0 * p.mu * sp.minus;
  const Mat2 s_aniso = p.chi * iv.I4 * M + 2.0 * p.xi * (eps * M + M * eps);
  return degradation(d, p.kappa) * (s_plus + s_aniso) + s_minus;
}

namespace {

// Action of the projection derivative dP(eps)[deps] for the +/- branches,
// from the spectral representation. Near eigenvalue coalescence the
// difference quotient uses symmetrically perturbed eigenvalues.
void split_derivative(const Mat2& eps, const Mat2& deps, Mat2& dplus, Mat2& dminus) {
  const Spectral s = eigen2(eps);
  const double nrm = eps.norm();
  double e1 = s.e1, e2 = s.e2;
  if (std::abs(e1 - e2) < 1e-8 * nrm || nrm == 0.0) {
    const double delta = 1e-8 * nrm;
    e1 += delta;
    e2 -= delta;
  }

  const double d11 = s.n1.dot(deps * s.n1);
  const double d22 = s.n2.dot(deps * s.n2);
  const double d12 = s.n1.dot(deps * s.n2);

  const Mat2 N11 = s.n1 * s.n1.transpose();
  const Mat2 N22 = s.n2 * s.n2.transpose();
  const Mat2 N12 = s.n1 * s.n2.transpose() + s.n2 * s.n1.transpose();

  double rp, rm;
  if (e1 == e2) {  // only reachable for exactly zero strain
    rp = heaviside_plus(e1);
    rm = heaviside_minus(e1);
  } else {
    rp = (macaulay_plus(e1) - macaulay_plus(e2)) / (e1 - e2);
    rm = (macaulay_minus(e1) - macaulay_minus(e2)) / (e1 - e2);
  }
  dplus = heaviside_plus(e1) * d11 * N11 + heaviside_plus(e2) * d22 * N22 + rp * d12 * N12;
  dminus = heaviside_minus(e1) * d11 * N11 + heaviside_minus(e2) * d22 * N22 + rm * d12 * N12;
}

}  // namespace

Mat2 stress_derivative(const Mat2& eps, double d, const MaterialParams& p, const Mat2& deps) {
  const Mat2 M = p.structural_tensor();
  const double I1 = eps.trace();
  const double dI1 = deps.trace();
  Mat2 dplus, dminus;
  split_derivative(eps, deps, dplus, dminus);

  const Mat2 ds_plus =
      p.lambda * heaviside_plus(I1) * dI1 * Mat2::Identity() + 2.0 * p.mu * dplus;
  const Mat2 ds_minus =
      p.lambda * heaviside_minus(I1) * dI1 * Mat2::Identity() + 2.0 * p.mu * dminus;
  const Mat2 ds_aniso =
      p.chi * (deps * M).trace() * M + 2.0 * p.xi * (deps * M + M * deps);
  return degradation(d, p.kappa) * (ds_plus + ds_aniso) + ds_minus;
}

Mat3 tangent(const Mat2& eps, double d, const MaterialParams& p) {
  // columns = stress response to the Voigt strain basis (engineering shear)
  static const std::array<Mat2, 3> basis = {
      (Mat2() << 1, 0, 0, 0).finished(),
      (Mat2() << 0, 0, 0, 1).finished(),
      (Mat2() << 0, 0.5, 0.5, 0).finished(),
  };
  Mat3 C;
  for (int j = 0; j < 3; ++j) {
    const Mat2 ds = stress_derivative(eps, d, p, basis[j]);
    C(0, j) = ds(0, 0);
    C(1, j) = ds(1, 1);
    C(2, j) = ds(0, 1);
  }
  return C;
}

double crack_driving_state(const Mat2& eps, const MaterialParams& p) {
  return p.length_scale * tensile_energy(eps, p) / p.Gc;
}

double crack_surface_density(double d, const Vec2& grad_d, const MaterialParams& p) {
  const double l = p.length_scale;
  const Mat2 M = p.structural_tensor();
  const double iso = (1.0 - d) * (1.0 - d) / (2.0 * l) + 0.5 * l * grad_d.squaredNorm();
  const double aniso = 0.5 * p.alpha * l * grad_d.dot(M * grad_d);
  return iso + aniso;
}

}  // namespace pfgl
