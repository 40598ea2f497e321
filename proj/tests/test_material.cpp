#include <doctest.h>

#include "support/oracles.hpp"

using namespace pfgl;

namespace {

MaterialParams base_params() {
  MaterialParams p;
  p.lambda = 121.15;
  p.mu = 80.77;
  p.Gc = 2.7e-3;
  p.length_scale = 0.02;
  p.kappa = 1e-10;
  return p;
}

}  // namespace

TEST_CASE("invariants of simple strain states") {
  MaterialParams p = base_params();
  const Mat2 M = p.structural_tensor();  // a = (1, 0)

  SUBCASE("identity strain") {
    const Invariants iv = invariants(Mat2::Identity(), M);
    CHECK(iv.I1 == 2.0);
    CHECK(iv.I2 == 2.0);
    CHECK(iv.I4 == 1.0);
    CHECK(iv.I5 == 1.0);
  }
  SUBCASE("stress-free state has zero invariants and zero energy") {
    const Invariants iv = invariants(Mat2::Zero(), M);
    CHECK(iv.I1 == 0.0);
    CHECK(iv.I2 == 0.0);
    CHECK(iv.I4 == 0.0);
    CHECK(iv.I5 == 0.0);
    p.chi = 50;
    p.xi = 3;
    CHECK(bulk_energy_density(Mat2::Zero(), 1.0, p) == 0.0);
    CHECK(tensile_energy(Mat2::Zero(), p) == 0.0);
  }
  SUBCASE("30-degree fiber, diagonal strain") {
    p.fiber_angle = 30.0 * M_PI / 180.0;
    Mat2 eps = Mat2::Zero();
    eps(0, 0) = 0.3;
    eps(1, 1) = -0.1;
    // direct matrix arithmetic with independent pieces
    const Vec2 a(std::cos(p.fiber_angle), std::sin(p.fiber_angle));
    const Mat2 Mo = a * a.transpose();
    const double expected = (eps * Mo).trace();
    const Invariants iv = invariants(eps, p.structural_tensor());
    CHECK(doctest::Approx(iv.I4).epsilon(1e-14) == expected);
    CHECK(doctest::Approx(iv.I4).epsilon(1e-12) == 0.2);
  }
}

TEST_CASE("spectral split of canonical states") {
  SUBCASE("mixed diagonal") {
    Mat2 e = Mat2::Zero();
    e(0, 0) = 1;
    e(1, 1) = -2;
    const SplitStrain s = spectral_split(e);
    CHECK(s.plus(0, 0) == 1.0);
    CHECK(s.plus(1, 1) == 0.0);
    CHECK(s.minus(0, 0) == 0.0);
    CHECK(s.minus(1, 1) == -2.0);
  }
  SUBCASE("pure compression") {
    const SplitStrain s = spectral_split(-Mat2::Identity());
    CHECK(s.plus.norm() == 0.0);
    CHECK((s.minus + Mat2::Identity()).norm() == 0.0);
  }
  SUBCASE("pure shear: eigen-decomposition oracle") {
    Mat2 e;
    e << 0, 0.5, 0.5, 0;
    const SplitStrain s = spectral_split(e);
    const Vec2 n(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    const Mat2 expected_plus = 0.5 * n * n.transpose();
    CHECK((s.plus - expected_plus).norm() < 1e-14);
    CHECK((s.plus + s.minus - e).norm() < 1e-14);
    CHECK(doctest::Approx(s.principal_values[0]).epsilon(1e-14) == 0.5);
    CHECK(doctest::Approx(s.principal_values[1]).epsilon(1e-14) == -0.5);
  }
}

TEST_CASE("split reconstruction and projector partition on random states") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat2 e = oracle::random_strain(rng, 1.0, 0.0);
    const SplitStrain s = spectral_split(e);
    CHECK((s.plus + s.minus - e).norm() <= 1e-12 * std::max(1.0, e.norm()));
    Eigen::SelfAdjointEigenSolver<Mat2> es;
    es.computeDirect(s.plus);
    CHECK(es.eigenvalues()(0) >= -1e-12);
    es.computeDirect(s.minus);
    CHECK(es.eigenvalues()(1) <= 1e-12);
  }
}

TEST_CASE("bulk energy density") {
  MaterialParams p = base_params();

  SUBCASE("d=1 leaves the energy undegraded") {
    p.chi = 50;
    Mat2 e;
    e << 2e-3, 1e-4, 1e-4, -5e-4;
    const double w1 = bulk_energy_density(e, 1.0, p);
    // g(1) = 1 regardless of kappa
    MaterialParams p2 = p;
    p2.kappa = 0.5;
    CHECK(doctest::Approx(bulk_energy_density(e, 1.0, p2)).epsilon(1e-14) == w1);
  }

  SUBCASE("no degradation in compression at d=0") {
    const Mat2 e = -0.01 * Mat2::Identity();
    const double w = bulk_energy_density(e, 0.0, p);
    const double I1 = e.trace();
    const double psi_minus = 0.5 * p.lambda * I1 * I1 + p.mu * (e * e).trace();
    CHECK(doctest::Approx(w).epsilon(1e-9) == psi_minus);
  }

  SUBCASE("uniaxial anisotropic state, scalar arithmetic oracle") {
    p.chi = 50;
    Mat2 e = Mat2::Zero();
    e(0, 0) = 1e-3;
    const double I1 = 1e-3, I2 = 1e-6, I4 = 1e-3;
    const double expected = 0.5 * p.lambda * I1 * I1 + p.mu * I2 + 0.5 * p.chi * I4 * I4;
    CHECK(doctest::Approx(bulk_energy_density(e, 1.0, p)).epsilon(1e-13) == expected);
  }
}

TEST_CASE("stress response") {
  MaterialParams p = base_params();

  SUBCASE("zero strain gives zero stress") {
    CHECK(stress(Mat2::Zero(), 1.0, p).norm() == 0.0);
  }
  SUBCASE("uniaxial tension with fibers along x (symbolic expansion)") {
    p.chi = 50;
    const double e = 1e-3;
    Mat2 eps = Mat2::Zero();
    eps(0, 0) = e;
    const Mat2 sig = stress(eps, 1.0, p);
    CHECK(doctest::Approx(sig(0, 0)).epsilon(1e-12) ==
          p.lambda * e + 2 * p.mu * e + p.chi * e);
    CHECK(doctest::Approx(sig(1, 1)).epsilon(1e-12) == p.lambda * e);
    CHECK(sig(0, 1) == 0.0);
  }
  SUBCASE("fully broken state keeps the compressive branch") {
    p.chi = 10;
    p.xi = 2;
    std::mt19937_64 rng(7);
    const Mat2 eps = oracle::random_strain(rng, 1e-2);
    const Mat2 sig0 = stress(eps, 0.0, p);
    const SplitStrain s = spectral_split(eps);
    const double I1m = macaulay_minus(eps.trace());
    const Mat2 sig_minus = p.lambda * I1m * Mat2::Identity() + 2 * p.mu * s.minus;
    CHECK((sig0 - sig_minus).norm() <= 1e-8 * sig_minus.norm() + 1e-9);
  }
}

TEST_CASE("stress equals the energy gradient (finite differences)") {
  std::mt19937_64 rng(1234);
  MaterialParams p = base_params();
  p.chi = 50;
  p.xi = 4;
  p.fiber_angle = 0.4;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat2 eps = oracle::random_strain(rng, 1e-3, 1e-3);
    if (std::abs(eps.trace()) < 1e-6 * eps.norm()) continue;  // away from the I1 kink
    for (double d : {1.0, 0.6, 0.2}) {
      const Mat2 sig = stress(eps, d, p);
      const Mat2 fd = oracle::fd_stress(eps, d, p, 1e-9);
      CHECK((sig - fd).norm() <= 1e-6 * std::max(sig.norm(), 1e-12));
    }
  }
}

TEST_CASE("tangent matches finite differences of the stress") {
  std::mt19937_64 rng(99);
  MaterialParams p = base_params();
  p.chi = 50;
  p.xi = 4;
  p.fiber_angle = -0.3;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat2 eps = oracle::random_strain(rng, 1e-3, 1e-2);
    if (std::abs(eps.trace()) < 1e-4 * eps.norm()) continue;
    const Mat3 C = tangent(eps, 0.7, p);
    const Mat3 fd = oracle::fd_tangent(eps, 0.7, p, 1e-9);
    CHECK((C - fd).norm() <= 1e-6 * C.norm());
    CHECK((C - C.transpose()).norm() <= 1e-10 * C.norm());
  }
}

TEST_CASE("intact isotropic tangent for positive definite strain") {
  MaterialParams p = base_params();
  Mat2 eps;
  eps << 3e-3, 1e-4, 1e-4, 2e-3;
  const Mat3 C = tangent(eps, 1.0, p);
  Mat3 iso;
  iso << p.lambda + 2 * p.mu, p.lambda, 0, p.lambda, p.lambda + 2 * p.mu, 0, 0, 0, p.mu;
  CHECK((C - iso).norm() <= 1e-10 * iso.norm());
}

TEST_CASE("tangent stays bounded and symmetric at eigenvalue coalescence") {
  MaterialParams p = base_params();
  for (double c : {1e-3, -1e-3, 0.0}) {
    const Mat3 C = tangent(c * Mat2::Identity(), 0.8, p);
    CHECK(C.allFinite());
    CHECK((C - C.transpose()).norm() <= 1e-9 * std::max(C.norm(), 1.0));
    CHECK(C.norm() <= 10 * (p.lambda + 2 * p.mu) * 3);
  }
}

TEST_CASE("crack driving state function") {
  MaterialParams p = base_params();

  SUBCASE("zero strain drives nothing") { CHECK(crack_driving_state(Mat2::Zero(), p) == 0.0); }
  SUBCASE("pure compression with chi=0 drives nothing") {
    CHECK(crack_driving_state(-0.01 * Mat2::Identity(), p) == 0.0);
  }
  SUBCASE("uniaxial state, arithmetic oracle") {
    p.chi = 50;
    Mat2 e = Mat2::Zero();
    e(0, 0) = 1e-3;
    const double expected =
        p.length_scale * (0.5 * p.lambda + p.mu + 0.5 * p.chi) * 1e-6 / p.Gc;
    CHECK(doctest::Approx(crack_driving_state(e, p)).epsilon(1e-12) == expected);
  }
  SUBCASE("driving state is nonnegative") {
    std::mt19937_64 rng(5);
    p.chi = 50;
    p.xi = 4;
    for (int i = 0; i < 200; ++i)
      CHECK(crack_driving_state(oracle::random_strain(rng, 1e-2), p) >= 0.0);
  }
}

TEST_CASE("history update keeps the running maximum") {
  CHECK(update_history(0.5, 0.2) == 0.5);
  CHECK(update_history(0.0, 0.0) == 0.0);

  // fold property over a monotone loading sequence
  MaterialParams p = base_params();
  double H = 0, running_max = 0;
  for (int k = 0; k <= 20; ++k) {
    Mat2 e = Mat2::Zero();
    e(0, 0) = 1e-4 * k * (k % 5 == 0 ? 0.3 : 1.0);  // non-monotone strain path
    const double D = crack_driving_state(e, p);
    running_max = std::max(running_max, D);
    H = update_history(H, D);
    CHECK(H == running_max);
  }
}

TEST_CASE("frame indifference of the energy under random rotations") {
  std::mt19937_64 rng(2024);
  MaterialParams p = base_params();
  p.chi = 50;
  p.xi = 4;
  p.fiber_angle = 0.7;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat2 eps = oracle::random_strain(rng, 1e-3);
    const Mat2 Q = oracle::random_rotation(rng);
    const double theta = std::atan2(Q(1, 0), Q(0, 0));
    MaterialParams rotated = p;
    rotated.fiber_angle = p.fiber_angle + theta;  // M -> Q M Q^T
    const double w = bulk_energy_density(eps, 0.8, p);
    const double wr = bulk_energy_density(Q * eps * Q.transpose(), 0.8, rotated);
    CHECK(std::abs(w - wr) <= 1e-12 * std::max(std::abs(w), 1e-30) + 1e-18);
  }
}

TEST_CASE("isotropic recovery with chi=xi=alpha=0") {
  MaterialParams p = base_params();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Mat2 eps = oracle::random_strain(rng, 1e-3);
    const SplitStrain s = spectral_split(eps);
    const double I1p = macaulay_plus(eps.trace()), I1m = macaulay_minus(eps.trace());
    const double iso = degradation(0.5, p.kappa) *
                           (0.5 * p.lambda * I1p * I1p + p.mu * (s.plus * s.plus).trace()) +
                       0.5 * p.lambda * I1m * I1m + p.mu * (s.minus * s.minus).trace();
    CHECK(doctest::Approx(bulk_energy_density(eps, 0.5, p)).epsilon(1e-13) == iso);
  }
}

TEST_CASE("crack surface density") {
  MaterialParams p = base_params();
  p.alpha = 50;
  p.length_scale = 0.1;

  // fully broken homogeneous state integrates to 1/(2l) per unit area
  CHECK(doctest::Approx(crack_surface_density(0.0, Vec2::Zero(), p)).epsilon(1e-14) ==
        1.0 / (2 * p.length_scale));
  // gradient along the fiber pays the anisotropic penalty
  const Vec2 g(1.0, 0.0);
  CHECK(doctest::Approx(crack_surface_density(1.0, g, p)).epsilon(1e-14) ==
        0.5 * p.length_scale * (1 + p.alpha));
}
