#pragma once

#include <cmath>

#include "pfgl/types.hpp"

namespace pfgl {

// Transversely isotropic brittle material. Units: stresses kN/mm^2,
// Gc kN/mm, lengths mm. d = 1 intact, d = 0 broken.
struct MaterialParams {
  double lambda = 0;        // Lame first parameter
  double mu = 0;            // shear modulus
  double chi = 0;           // deformation anisotropy penalty
  double xi = 0;            // second deformation anisotropy modulus
  double alpha = 0;         // fracture anisotropy penalty
  double Gc = 0;            // critical energy release rate
  double length_scale = 0;  // phase-field regularization length l
  double kappa = 1e-10;     // residual stiffness
  double fiber_angle = 0;   // radians

  Vec2 fiber() const { return {std::cos(fiber_angle), std::sin(fiber_angle)}; }
  Mat2 structural_tensor() const {
    const Vec2 a = fiber();
    return a * a.transpose();
  }
  // Plane-strain-independent isotropic Young's modulus E = mu(3l+2m)/(l+m).
  double youngs_modulus() const { return mu * (3 * lambda + 2 * mu) / (lambda + mu); }

  // Per-element heterogeneity: elastic moduli scaled, fracture properties kept.
  MaterialParams scaled(double stiffness_scale) const {
    MaterialParams p = *this;
    p.lambda *= stiffness_scale;
    p.mu *= stiffness_scale;
    p.chi *= stiffness_scale;
    p.xi *= stiffness_scale;
    return p;
  }

  void validate() const {
    require(lambda > 0 && mu > 0, "material: lambda, mu must be positive");
    require(Gc > 0 && length_scale > 0, "material: Gc, l must be positive");
    require(kappa > 0 && kappa < 1, "material: kappa must be in (0,1)");
    require(chi >= 0 && alpha >= 0, "material: chi, alpha must be nonnegative");
  }
};

struct Invariants {
  double I1 = 0, I2 = 0, I4 = 0, I5 = 0;
};

Invariants invariants(const Mat2& eps, const Mat2& M);

struct SplitStrain {
  Mat2 plus = Mat2::Zero();
  Mat2 minus = Mat2::Zero();
  Vec2 principal_values = Vec2::Zero();
  Mat2 principal_dirs = Mat2::Identity();  // columns
};

SplitStrain spectral_split(const Mat2& eps);

inline double macaulay_plus(double x) { return 0.5 * (x + std::abs(x)); }
inline double macaulay_minus(double x) { return 0.5 * (x - std::abs(x)); }

// g(d+) = (1-kappa) d+^2 + kappa, d+ = max(d, 0).
inline double degradation(double d, double kappa) {
  const double dp = std::max(d, 0.0);
  return (1.0 - kappa) * dp * dp + kappa;
}

// Tensile part of the stored energy that drives the crack:
// Psi^{iso,+}(I1+, I2+) + Psi^{aniso}(I4, I5).
double tensile_energy(const Mat2& eps, const MaterialParams& p);

double bulk_energy_density(const Mat2& eps, double d, const MaterialParams& p);

Mat2 stress(const Mat2& eps, double d, const MaterialParams& p);

// Directional derivative of stress at eps in direction deps (symmetric).
Mat2 stress_derivative(const Mat2& eps, double d, const MaterialParams& p, const Mat2& deps);

// Voigt 3x3 tangent, strain ordered [e11, e22, 2 e12], stress [s11, s22, s12].
Mat3 tangent(const Mat2& eps, double d, const MaterialParams& p);

// Dimensionless crack driving state, l * [Psi+ + Psi_aniso] / Gc.
double crack_driving_state(const Mat2& eps, const MaterialParams& p);

inline double update_history(double H_old, double D) { return std::max(H_old, D); }

// Crack surface density gamma_l(d, grad d; M), per unit volume.
double crack_surface_density(double d, const Vec2& grad_d, const MaterialParams& p);

// Per-quadrature-point history, 4 Gauss points per element.
struct HistoryField {
  std::vector<double> H;  // element*4 + q
  int n_elements() const { return static_cast<int>(H.size() / 4); }
  void resize(int n_elems) { H.assign(static_cast<std::size_t>(n_elems) * 4, 0.0); }
  double& at(int e, int q) { return H[static_cast<std::size_t>(e) * 4 + q]; }
  double at(int e, int q) const { return H[static_cast<std::size_t>(e) * 4 + q]; }
};

}  // namespace pfgl
