#include <doctest.h>

#include "pfgl/schur.hpp"
#include "support/oracles.hpp"

using namespace pfgl;

namespace {

MaterialParams elastic_params() {
  MaterialParams p;
  p.lambda = 10.0;
  p.mu = 7.0;
  p.Gc = 1e-3;
  p.length_scale = 0.1;
  return p;
}

}  // namespace

TEST_CASE("two-spring chain condenses to the series stiffness") {
  // fixed -- k1 -- (mid) -- k2 -- (interface end)
  const double k1 = 3.0, k2 = 5.0;
  Triplets K = {
      {0, 0, k1},  {0, 1, -k1}, {1, 0, -k1}, {1, 1, k1 + k2},
      {1, 2, -k2}, {2, 1, -k2}, {2, 2, k2},
  };
  DofMap dofs(3, 1);
  dofs.constrain(0, 0, 0.0);
  const SchurOperator S = schur_complement(K, dofs, {2});
  REQUIRE(S.S.rows() == 1);
  CHECK(doctest::Approx(S.S(0, 0)).epsilon(1e-14) == k1 * k2 / (k1 + k2));
}

TEST_CASE("interface covering all dofs returns K itself") {
  Triplets K = {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}};
  DofMap dofs(2, 1);
  const SchurOperator S = schur_complement(K, dofs, {0, 1});
  MatX expected(2, 2);
  expected << 2, -1, -1, 2;
  CHECK((S.S - expected).norm() == 0.0);
}

TEST_CASE("random SPD systems match the dense block-elimination oracle") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 12 + trial;
    MatX B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = ur(rng);
    const MatX Kd = B.transpose() * B + n * MatX::Identity(n, n);
    Triplets K;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) K.emplace_back(i, j, Kd(i, j));

    std::vector<int> b_dofs, a_dofs;
    for (int i = 0; i < n; ++i) (i % 3 == 0 ? b_dofs : a_dofs).push_back(i);
    DofMap dofs(n, 1);
    const SchurOperator S = schur_complement(K, dofs, b_dofs);
    const MatX oracle_S = oracle::dense_schur(Kd, b_dofs, a_dofs);
    CHECK((S.S - oracle_S).norm() <= 1e-10 * oracle_S.norm());
  }
}

TEST_CASE("dirichlet-to-neumann identity on an elastic patch") {
  // complementary = everything around a single fictitious cell
  QuadMesh g = build_structured_mesh(1, 1, 4, 4);
  g.element_tags[5] = Region::Fictitious;
  const auto trG = extract_interface(g, Region::Fictitious);
  const MaterialParams p = elastic_params();

  DofMap dofs(g.n_nodes(), 2);
  for (int n = 0; n < g.n_nodes(); ++n)
    if (g.nodes[n].y() < 1e-12) {
      dofs.constrain(n, 0, 0.0);
      dofs.constrain(n, 1, 0.0);
    }

  std::vector<int> comp;
  for (int e = 0; e < g.n_elements(); ++e)
    if (g.element_tags[e] != Region::Fictitious) comp.push_back(e);
  const Triplets K_C = elastic_stiffness(g, p, comp);

  std::vector<int> b_dofs;
  for (int n : trG.nodes())
    for (int c = 0; c < 2; ++c) b_dofs.push_back(2 * n + c);
  const SchurOperator S = schur_complement(K_C, dofs, b_dofs);

  CHECK((S.S - S.S.transpose()).norm() <= 1e-10 * S.S.norm());
  CHECK(S.regularization == 0.0);

  // equilibrium response to a prescribed interface displacement increment
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(-1e-3, 1e-3);
  VecX ub(static_cast<int>(b_dofs.size()));
  for (int i = 0; i < ub.size(); ++i) ub[i] = ur(rng);

  DofMap solve_dofs = dofs;
  for (std::size_t i = 0; i < b_dofs.size(); ++i)
    solve_dofs.constrain(b_dofs[i] / 2, b_dofs[i] % 2, ub[i]);
  // complementary dofs only: pin everything not present in K_C
  std::vector<char> present(2 * g.n_nodes(), 0);
  for (const auto& t : K_C) present[t.row()] = 1;
  for (int d = 0; d < 2 * g.n_nodes(); ++d)
    if (!present[d]) solve_dofs.constrain(d / 2, d % 2, 0.0);

  SpMat A;
  VecX rhs;
  apply_dirichlet(K_C, VecX::Zero(2 * g.n_nodes()), solve_dofs, A, rhs);
  const VecX u = solve_sparse(A, rhs, "dtn patch");

  // traction at the interface dofs from the unconstrained operator
  VecX f = VecX::Zero(2 * g.n_nodes());
  for (const auto& t : K_C) f[t.row()] += t.value() * u[t.col()];
  VecX fb(ub.size());
  for (std::size_t i = 0; i < b_dofs.size(); ++i) fb[i] = f[b_dofs[i]];

  CHECK((S.S * ub - fb).norm() <= 1e-10 * fb.norm());
}

TEST_CASE("floating subdomain gets the recorded regularization shift") {
  const QuadMesh g = build_structured_mesh(1, 1, 2, 2);
  const MaterialParams p = elastic_params();
  const Triplets K = elastic_stiffness(g, p);
  DofMap dofs(g.n_nodes(), 2);  // no constraints: rigid modes present
  const SchurOperator S = schur_complement(K, dofs, {0, 1});
  CHECK(S.regularization > 0.0);
  CHECK(S.S.allFinite());
}

TEST_CASE("robin parameter assembly") {
  QuadMesh g = build_structured_mesh(1.0, 1.0, 2, 2);
  g.element_tags[0] = Region::Fictitious;
  const auto trG = extract_interface(g, Region::Fictitious);
  const LocalMesh lm = refine_region_to_local(g, {0}, 2);
  const auto trL = project_interface(ProjectionDirection::GlobalToLocal, trG, lm.mesh);
  auto ops = interface_mass_matrices(g, trG, lm.mesh, trL);

  const MaterialParams p = elastic_params();
  DofMap gdofs(g.n_nodes(), 2), ldofs(lm.mesh.n_nodes(), 2);
  set_active_pairs(ops, gdofs, ldofs);

  std::vector<int> comp, b_dofs;
  for (int e = 0; e < g.n_elements(); ++e)
    if (g.element_tags[e] != Region::Fictitious) comp.push_back(e);
  for (int n : trG.nodes())
    for (int c = 0; c < 2; ++c) b_dofs.push_back(2 * n + c);
  DofMap fixed = gdofs;
  for (int n = 0; n < g.n_nodes(); ++n)
    if (g.nodes[n].y() > 1 - 1e-12) {
      fixed.constrain(n, 0, 0.0);
      fixed.constrain(n, 1, 0.0);
    }
  const SchurOperator S_C = schur_complement(elastic_stiffness(g, p, comp), fixed, b_dofs);

  SUBCASE("identity mode takes the mortar transpose") {
    const RobinParams rp = build_robin_params(S_C, nullptr, ops, RobinMode::RobinIdentity);
    CHECK((rp.K_IA_L - S_C.S).norm() == 0.0);  // bit-for-bit
    const MatX LLt = masked(ops.L_L, ops.activeL, ops.activeG).transpose();
    CHECK((rp.K_IA_G - LLt).norm() == 0.0);
  }
  SUBCASE("dirichlet-neumann mode carries no matrices") {
    const RobinParams rp =
        build_robin_params(S_C, nullptr, ops, RobinMode::DirichletNeumann);
    CHECK(rp.K_IA_G.size() == 0);
    CHECK(rp.K_IA_L.size() == 0);
  }

  SUBCASE("lambda right-hand sides") {
    const RobinParams rp = build_robin_params(S_C, nullptr, ops, RobinMode::RobinIdentity);
    const int nga = static_cast<int>(mask_positions(ops.activeG).size());
    const int nla = static_cast<int>(mask_positions(ops.activeL).size());

    SUBCASE("zero inputs give zero") {
      const VecX l0 =
          lambda_rhs_L(rp, ops, VecX::Zero(2 * g.n_nodes()), VecX::Zero(nga));
      CHECK(l0.norm() == 0.0);
      const VecX g0 =
          lambda_rhs_G(rp, ops, VecX::Zero(2 * lm.mesh.n_nodes()), VecX::Zero(nla));
      CHECK(g0.norm() == 0.0);
    }

    SUBCASE("rigid translation maps through K_IA_L") {
      VecX u_G(2 * g.n_nodes());
      for (int n = 0; n < g.n_nodes(); ++n) {
        u_G[2 * n] = 1.0;
        u_G[2 * n + 1] = -2.0;
      }
      const VecX lam = lambda_rhs_L(rp, ops, u_G, VecX::Zero(nga));
      const VecX trace = masked(gather_pairs(ops.gdof, u_G), ops.activeG);
      CHECK((lam - rp.K_IA_L * trace).norm() <= 1e-14 * lam.norm());
    }

    SUBCASE("flipping the local state flips Lambda_G") {
      std::mt19937_64 rng(9);
      std::uniform_real_distribution<double> ur(-1.0, 1.0);
      VecX u_L(2 * lm.mesh.n_nodes());
      VecX lam_L(nla);
      for (int i = 0; i < u_L.size(); ++i) u_L[i] = ur(rng);
      for (int i = 0; i < nla; ++i) lam_L[i] = ur(rng);
      const VecX a = lambda_rhs_G(rp, ops, u_L, lam_L);
      const VecX b = lambda_rhs_G(rp, ops, VecX(-u_L), VecX(-lam_L));
      CHECK((a + b).norm() <= 1e-13 * a.norm());
    }
  }
}

TEST_CASE("fictitious condensation") {
  const MaterialParams p = elastic_params();

  SUBCASE("surrounded load-free patch condenses to a PSD operator") {
    // rigid motions of the unconstrained patch stay in the kernel (dim 3)
    QuadMesh g = build_structured_mesh(1, 1, 4, 4);
    for (int e : {5, 6, 9, 10}) g.element_tags[e] = Region::Fictitious;
    const auto trG = extract_interface(g, Region::Fictitious);
    std::vector<int> b_dofs;
    for (int n : trG.nodes())
      for (int c = 0; c < 2; ++c) b_dofs.push_back(2 * n + c);
    DofMap dofs(g.n_nodes(), 2);
    const SchurOperator S_F = schur_complement(elastic_stiffness(g, p, {5, 6, 9, 10}),
                                               dofs, b_dofs, Region::Fictitious);
    Eigen::SelfAdjointEigenSolver<MatX> es(S_F.S);
    int rigid = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      CHECK(es.eigenvalues()(i) >= -1e-9 * S_F.S.norm());
      if (std::abs(es.eigenvalues()(i)) < 1e-7 * S_F.S.norm()) ++rigid;
    }
    CHECK(rigid == 3);
    CHECK((fictitious_condensation(S_F) + S_F.S).norm() == 0.0);
  }

  SUBCASE("zero-stiffness fictitious material contributes nothing") {
    QuadMesh g = build_structured_mesh(1, 1, 2, 2);
    g.element_tags[0] = Region::Fictitious;
    g.stiffness_scale[0] = 0.0;
    const auto trG = extract_interface(g, Region::Fictitious);
    std::vector<int> b_dofs;
    for (int n : trG.nodes())
      for (int c = 0; c < 2; ++c) b_dofs.push_back(2 * n + c);
    DofMap dofs(g.n_nodes(), 2);
    const SchurOperator S_F =
        schur_complement(elastic_stiffness(g, p, {0}), dofs, b_dofs, Region::Fictitious);
    CHECK(S_F.S.norm() == 0.0);
  }

  SUBCASE("condensed patch reproduces the direct complementary assembly") {
    // plate pulled on the right, patch of 4 center cells removed-and-condensed
    QuadMesh g = build_structured_mesh(1, 1, 4, 4);
    const std::vector<int> patch = {5, 6, 9, 10};
    for (int e : patch) g.element_tags[e] = Region::Fictitious;
    const auto trG = extract_interface(g, Region::Fictitious);
    std::vector<int> b_dofs;
    for (int n : trG.nodes())
      for (int c = 0; c < 2; ++c) b_dofs.push_back(2 * n + c);

    DofMap dofs(g.n_nodes(), 2);
    const double pull = 1e-3;
    for (int n = 0; n < g.n_nodes(); ++n) {
      if (g.nodes[n].x() < 1e-12) {
        dofs.constrain(n, 0, 0.0);
        dofs.constrain(n, 1, 0.0);
      } else if (g.nodes[n].x() > 1 - 1e-12) {
        dofs.constrain(n, 0, pull);
      }
    }

    std::vector<int> comp;
    for (int e = 0; e < g.n_elements(); ++e)
      if (g.element_tags[e] != Region::Fictitious) comp.push_back(e);
    const SchurOperator S_F = schur_complement(elastic_stiffness(g, p, patch), dofs,
                                               b_dofs, Region::Fictitious);

    // path A: full stiffness minus the condensed patch
    Triplets KA = elastic_stiffness(g, p);
    for (std::size_t i = 0; i < b_dofs.size(); ++i)
      for (std::size_t j = 0; j < b_dofs.size(); ++j)
        KA.emplace_back(b_dofs[i], b_dofs[j], -S_F.S(i, j));
    SpMat A;
    VecX rhs;
    apply_dirichlet(KA, VecX::Zero(2 * g.n_nodes()), dofs, A, rhs);
    const VecX uA = solve_sparse(A, rhs, "condensed");

    // path B: direct assembly of the complementary domain only
    const Triplets KB = elastic_stiffness(g, p, comp);
    std::vector<char> present(2 * g.n_nodes(), 0);
    for (const auto& t : KB) present[t.row()] = 1;
    DofMap dofsB = dofs;
    for (int d = 0; d < 2 * g.n_nodes(); ++d)
      if (!present[d]) dofsB.constrain(d / 2, d % 2, 0.0);
    SpMat B;
    VecX rhsB;
    apply_dirichlet(KB, VecX::Zero(2 * g.n_nodes()), dofsB, B, rhsB);
    const VecX uB = solve_sparse(B, rhsB, "direct complementary");

    double err = 0, scale = 0;
    for (int d = 0; d < 2 * g.n_nodes(); ++d) {
      if (!present[d]) continue;  // fictitious interior is harmonic filler in path A
      err = std::max(err, std::abs(uA[d] - uB[d]));
      scale = std::max(scale, std::abs(uB[d]));
    }
    CHECK(err <= 1e-11 * scale);
  }
}

TEST_CASE("schur binary dump round-trips") {
  MatX S(2, 3);
  S << 1.5, -2.25, 3.125, 0.0625, 7, -9;
  const std::string path = "/tmp/pfgl_schur_test.bin";
  dump_schur(path, S);
  const MatX R = load_schur(path);
  REQUIRE(R.rows() == 2);
  REQUIRE(R.cols() == 3);
  CHECK((R - S).norm() == 0.0);
}
