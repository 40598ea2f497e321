#include <doctest.h>

#include "pfgl/postprocess.hpp"
#include "pfgl/scenario.hpp"
#include "support/oracles.hpp"

using namespace pfgl;

namespace {

MaterialParams params_53() {
  MaterialParams p;
  p.lambda = 6.16;
  p.mu = 10.95;
  p.Gc = 9e-5;
  p.length_scale = 10.0;
  p.kappa = 1e-10;
  p.chi = 50;
  p.alpha = 50;
  p.fiber_angle = -15.0 * M_PI / 180.0;
  return p;
}

}  // namespace

TEST_CASE("homogenized global phase field") {
  MaterialParams p = params_53();
  const QuadMesh mesh = build_structured_mesh(1, 1, 2, 2);
  HistoryField H;
  H.resize(mesh.n_elements());

  SUBCASE("H = 0 gives d_G = 1 exactly") {
    const VecX d = homogenized_global_pf(mesh, p, H, GlobalPFMode::Homogeneous);
    CHECK((d - VecX::Ones(mesh.n_nodes())).norm() == 0.0);
  }

  SUBCASE("kappa = 0, H = 0.5 gives the closed-form 0.5") {
    MaterialParams p0 = p;
    p0.kappa = 0.0;
    for (double& h : H.H) h = 0.5;
    const VecX d = homogenized_global_pf(mesh, p0, H, GlobalPFMode::Homogeneous);
    for (int i = 0; i < d.size(); ++i) CHECK(doctest::Approx(d[i]).epsilon(1e-14) == 0.5);
  }

  SUBCASE("huge H drives d_G toward zero") {
    for (double& h : H.H) h = 1e6;
    const VecX d = homogenized_global_pf(mesh, p, H, GlobalPFMode::Homogeneous);
    for (int i = 0; i < d.size(); ++i) {
      CHECK(d[i] > 0.0);
      CHECK(d[i] < 1e-5);
    }
  }

  SUBCASE("monotone decreasing in H, range (0, 1]") {
    double prev = 2.0;
    for (double h : {0.0, 0.1, 0.5, 2.0, 50.0, 1e4}) {
      for (double& x : H.H) x = h;
      const VecX d = homogenized_global_pf(mesh, p, H, GlobalPFMode::Homogeneous);
      CHECK(d[0] <= prev);
      CHECK(d[0] > 0.0);
      CHECK(d[0] <= 1.0);
      prev = d[0];
    }
  }

  SUBCASE("solve and closed form agree in the zero-gradient single-element limit") {
    const QuadMesh one = build_structured_mesh(1, 1, 1, 1);
    HistoryField H1;
    H1.resize(1);
    for (int q = 0; q < 4; ++q) H1.at(0, q) = 0.37;
    const VecX da = homogenized_global_pf(one, p, H1, GlobalPFMode::GlobalPF);
    const VecX db = homogenized_global_pf(one, p, H1, GlobalPFMode::Homogeneous);
    CHECK((da - db).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("energy evaluation") {
  MaterialParams p = params_53();

  SUBCASE("zero state has zero energies") {
    const QuadMesh mesh = build_structured_mesh(1, 1, 2, 2);
    const VecX u = VecX::Zero(2 * mesh.n_nodes());
    const VecX d = VecX::Ones(mesh.n_nodes());
    const EnergyBreakdown en = single_scale_energies(mesh, p, u, &d, nullptr);
    CHECK(en.strain == 0.0);
    CHECK(en.fracture <= 1e-30);  // interpolation roundoff of (1-d)^2 at d = 1
  }

  SUBCASE("uniform d = 0 on the unit square gives Gc*area/(2l)") {
    MaterialParams pl = p;
    pl.length_scale = 0.03;
    const QuadMesh mesh = build_structured_mesh(1, 1, 4, 4);
    const VecX u = VecX::Zero(2 * mesh.n_nodes());
    const VecX d = VecX::Zero(mesh.n_nodes());
    const EnergyBreakdown en = single_scale_energies(mesh, pl, u, &d, nullptr);
    CHECK(doctest::Approx(en.fracture).epsilon(1e-12) ==
          pl.Gc * 1.0 / (2 * pl.length_scale));
  }
}

TEST_CASE("critical stress criterion") {
  MaterialParams p = params_53();
  p.length_scale = 10.0;

  SUBCASE("effective modulus is the Voigt/Reuss midpoint") {
    const InitiationCriterion c = critical_stress_from_averages(p, 44.423, 27.850);
    CHECK(doctest::Approx(c.E_bar).epsilon(1e-14) == 36.1365);
  }

  SUBCASE("chi = 0 recovers the isotropic initiation stress") {
    MaterialParams iso = p;
    iso.chi = 0;
    const InitiationCriterion c = critical_stress_from_averages(iso, 30.0, 30.0);
    const double expected =
        (3 * std::sqrt(3.0) / 16) * std::sqrt(iso.Gc * 30.0 / iso.length_scale);
    CHECK(doctest::Approx(c.sigma_c).epsilon(1e-14) == expected);
  }

  SUBCASE("the stress/strain formulas share one scaling constant") {
    const InitiationCriterion c = critical_stress_from_averages(p, 44.423, 27.850);
    const double a = std::sin(p.fiber_angle);
    const double stiff = p.chi * a * a * a * a + c.E_bar;
    const double ratio = c.sigma_c / (c.eps_c * stiff);
    const double expected = (3 * std::sqrt(3.0) / 16) / (std::sqrt(3.0) / 3);
    CHECK(std::abs(ratio - expected) <= 1e-12);
  }

  SUBCASE("homogeneous modulus field collapses the averages") {
    QuadMesh mesh = build_structured_mesh(2, 1, 4, 2);
    const InitiationCriterion c = critical_stress(p, mesh);
    const double E = p.youngs_modulus();
    CHECK(doctest::Approx(c.E_voigt).epsilon(1e-12) == E);
    CHECK(doctest::Approx(c.E_reuss).epsilon(1e-12) == E);
    CHECK(doctest::Approx(c.E_bar).epsilon(1e-12) == E);
  }

  SUBCASE("Reuss never exceeds Voigt, equality only for constant fields") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ur(0.5, 10.0);
    QuadMesh mesh = build_structured_mesh(1, 1, 5, 5);
    for (auto& s : mesh.stiffness_scale) s = ur(rng);
    const InitiationCriterion c = critical_stress(p, mesh);
    CHECK(c.E_reuss < c.E_voigt);
    CHECK(c.E_bar <= c.E_voigt);
    CHECK(c.E_bar >= c.E_reuss);
  }
}

TEST_CASE("initiation monitor") {
  MaterialParams p = params_53();
  p.length_scale = 25.0;

  // L-shaped panel: 500x500 with the lower-right quadrant removed
  const QuadMesh mesh = build_structured_mesh(500, 500, 8, 8, {},
                                              CutoutSpec{250, 500, 0, 250});
  LoadSchedule s = make_schedule(mesh, 1, 0.05,
                                 {{"seg y 0 x 0 250", -1, 0}, {"seg y 250 x 430 500", 1, 1}});
  REQUIRE(!s.reaction_dofs().empty());

  SingleScaleProblem prob;
  prob.mesh = &mesh;
  prob.params = p;
  prob.params.Gc = 1e9;  // elastic probe
  prob.schedule = s;
  SingleScaleState st = initial_state(prob);
  solve_load_step(prob, st, 1);

  const InitiationCriterion crit = critical_stress_from_averages(p, 44.423, 27.850);

  SUBCASE("zero load never triggers") {
    const VecX u0 = VecX::Zero(2 * mesh.n_nodes());
    const InitiationHit hit = initiation_monitor(mesh, p, u0, crit, 125.0);
    CHECK(!hit.triggered);
  }

  SUBCASE("maximum stress sits at the re-entrant corner") {
    InitiationCriterion loose = crit;
    loose.trigger_fraction = 0.0;
    const InitiationHit hit = initiation_monitor(mesh, p, st.u, loose, 100.0);
    CHECK(hit.triggered);  // trigger fraction zero fires at any nonzero load
    CHECK((hit.location - Vec2(250, 250)).norm() <= 130.0);
    CHECK(!hit.candidate_elements.empty());
    for (int e : hit.candidate_elements)
      CHECK((mesh.centroid(e) - hit.location).norm() <= 100.0 + 1e-9);
  }
}

TEST_CASE("crack band direction fit") {
  const QuadMesh mesh = build_structured_mesh(1, 1, 20, 20);
  VecX d = VecX::Ones(mesh.n_nodes());
  const double phi = 30.0 * M_PI / 180.0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2 x = mesh.nodes[n] - Vec2(0.5, 0.5);
    const double dist = std::abs(-std::sin(phi) * x.x() + std::cos(phi) * x.y());
    if (dist < 0.04 && x.norm() < 0.4) d[n] = 0.05;
  }
  const double angle = crack_band_angle(mesh, d, 0.1);
  CHECK(std::abs(angle - phi) <= 7.5 * M_PI / 180.0);

  SUBCASE("fewer than two broken nodes yields NaN") {
    VecX ones = VecX::Ones(mesh.n_nodes());
    CHECK(std::isnan(crack_band_angle(mesh, ones, 0.1)));
  }
}
