#include "pfgl/postprocess.hpp"

#include <cmath>

namespace pfgl {

namespace {

Vec2 grad_scalar_at(const ElementBasis& basis, const QuadMesh& mesh, int elem,
                    const VecX& s) {
  const auto& c = mesh.elements[elem];
  Vec2 g = Vec2::Zero();
  for (int i = 0; i < 4; ++i) g += s[c[i]] * basis.dN[i];
  return g;
}

double scalar_at(const ElementBasis& basis, const QuadMesh& mesh, int elem, const VecX& s) {
  const auto& c = mesh.elements[elem];
  double v = 0;
  for (int i = 0; i < 4; ++i) v += s[c[i]] * basis.N[i];
  return v;
}

}  // namespace

EnergyBreakdown single_scale_energies(const QuadMesh& mesh, const MaterialParams& params,
                                      const VecX& u, const VecX* d,
                                      const std::vector<char>* pf_mask) {
  EnergyBreakdown out;
  ElementBasis basis;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const MaterialParams pe = params.scaled(mesh.stiffness_scale[e]);
    const bool with_d = d && (!pf_mask || (*pf_mask)[e]);
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      const double dv = qp.w * basis.detJ;
      const Mat2 eps = strain_at(basis, mesh, e, u);
      const double dq = with_d ? scalar_at(basis, mesh, e, *d) : 1.0;
      out.strain += dv * bulk_energy_density(eps, dq, pe);
      if (with_d) {
        const Vec2 gd = grad_scalar_at(basis, mesh, e, *d);
        out.fracture += dv * pe.Gc * crack_surface_density(dq, gd, pe);
      }
    }
  }
  return out;
}

GLEnergies gl_energies(const GLProblem& prob, const GLState& state) {
  GLEnergies out;
  const QuadMesh& gm = *prob.global_mesh;
  const QuadMesh& lm = prob.local->mesh;
  ElementBasis basis;

  for (int e = 0; e < gm.n_elements(); ++e) {
    const MaterialParams pe = prob.params.scaled(gm.stiffness_scale[e]);
    for (const auto& qp : gauss4()) {
      basis.compute(gm, e, qp.xi, qp.eta);
      const double dv = qp.w * basis.detJ;
      const double w = bulk_energy_density(strain_at(basis, gm, e, state.u_G), 1.0, pe);
      out.global_term += dv * w;
      if (gm.element_tags[e] == Region::Fictitious) out.fictitious_term += dv * w;
    }
  }
  const EnergyBreakdown local =
      single_scale_energies(lm, prob.params, state.u_L, &state.d_L, nullptr);
  out.local_strain = local.strain;
  out.local_fracture = local.fracture;

  // interface functional lambda_C.(u_Gamma - u_G) + lambda_L.(u_Gamma - u_L)
  const CouplingOperators& ops = prob.ops;
  const auto posG = mask_positions(ops.activeG);
  const auto posL = mask_positions(ops.activeL);
  VecX ugam_full = VecX::Zero(ops.ng());
  VecX lamC_full = VecX::Zero(ops.ng());
  for (std::size_t i = 0; i < posG.size(); ++i) {
    ugam_full[posG[i]] = state.u_Gamma[i];
    lamC_full[posG[i]] = state.lambda_C[i];
  }
  VecX lamL_full = VecX::Zero(ops.nl());
  for (std::size_t i = 0; i < posL.size(); ++i) lamL_full[posL[i]] = state.lambda_L[i];
  const VecX ug_trace = gather_pairs(ops.gdof, state.u_G);
  const VecX ul_trace = gather_pairs(ops.ldof, state.u_L);
  out.coupling_residual = lamC_full.dot(ops.L_G * (ugam_full - ug_trace)) +
                          lamL_full.dot(ops.L_L * ugam_full - ops.M_LL * ul_trace);
  return out;
}

void update_global_history(const QuadMesh& mesh, const MaterialParams& params_lG,
                           const VecX& u_G, HistoryField& H_G) {
  if (H_G.H.empty()) H_G.resize(mesh.n_elements());
  update_history_field(mesh, params_lG, u_G, {}, H_G);
}

VecX homogenized_global_pf(const QuadMesh& mesh, const MaterialParams& params_lG,
                           const HistoryField& H_G, GlobalPFMode mode) {
  if (mode == GlobalPFMode::GlobalPF)
    return solve_phase_field(mesh, params_lG, H_G, {});

  // nodal average of the quadrature-point history, then the closed form
  VecX Hsum = VecX::Zero(mesh.n_nodes());
  VecX count = VecX::Zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double he = 0;
    for (int q = 0; q < 4; ++q) he += H_G.at(e, q);
    he *= 0.25;
    for (int k = 0; k < 4; ++k) {
      Hsum[mesh.elements[e][k]] += he;
      count[mesh.elements[e][k]] += 1;
    }
  }
  VecX d(mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const double h = count[n] > 0 ? Hsum[n] / count[n] : 0.0;
    d[n] = 1.0 / (1.0 + 2.0 * (1.0 - params_lG.kappa) * h);
  }
  return d;
}

InitiationCriterion critical_stress_from_averages(const MaterialParams& params,
                                                  double E_voigt, double E_reuss,
                                                  double trigger_fraction) {
  InitiationCriterion c;
  c.E_voigt = E_voigt;
  c.E_reuss = E_reuss;
  c.E_bar = 0.5 * (E_voigt + E_reuss);
  c.trigger_fraction = trigger_fraction;
  const double a = std::sin(params.fiber_angle);
  const double stiff = params.chi * a * a * a * a + c.E_bar;
  c.eps_c = (std::sqrt(3.0) / 3.0) * std::sqrt(params.Gc / (params.length_scale * stiff));
  c.sigma_c = (3.0 * std::sqrt(3.0) / 16.0) *
              std::sqrt(params.Gc * stiff / params.length_scale);
  return c;
}

InitiationCriterion critical_stress(const MaterialParams& params, const QuadMesh& mesh,
                                    double trigger_fraction) {
  const double E0 = params.youngs_modulus();
  double area = 0, sumE = 0, sumInv = 0;
  ElementBasis basis;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double ae = 0;
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      ae += qp.w * basis.detJ;
    }
    const double Ee = E0 * mesh.stiffness_scale[e];
    area += ae;
    sumE += ae * Ee;
    sumInv += ae / Ee;
  }
  return critical_stress_from_averages(params, sumE / area, area / sumInv,
                                       trigger_fraction);
}

InitiationHit initiation_monitor(const QuadMesh& mesh, const MaterialParams& params,
                                 const VecX& u, const InitiationCriterion& crit,
                                 double radius) {
  InitiationHit hit;
  ElementBasis basis;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const MaterialParams pe = params.scaled(mesh.stiffness_scale[e]);
    for (const auto& qp : gauss4()) {
      basis.compute(mesh, e, qp.xi, qp.eta);
      const Mat2 sig = stress(strain_at(basis, mesh, e, u), 1.0, pe);
      Eigen::SelfAdjointEigenSolver<Mat2> es;
      es.computeDirect(sig);
      const double smax = es.eigenvalues()(1);
      if (smax > hit.max_principal_stress) {
        hit.max_principal_stress = smax;
        Vec2 x = Vec2::Zero();
        for (int i = 0; i < 4; ++i) x += basis.N[i] * mesh.nodes[mesh.elements[e][i]];
        hit.location = x;
      }
    }
  }
  hit.triggered = hit.max_principal_stress >= crit.trigger_fraction * crit.sigma_c;
  if (hit.triggered) {
    for (int e = 0; e < mesh.n_elements(); ++e)
      if ((mesh.centroid(e) - hit.location).norm() <= radius)
        hit.candidate_elements.push_back(e);
  }
  return hit;
}

double crack_band_angle(const QuadMesh& mesh, const VecX& d, double threshold) {
  std::vector<Vec2> pts;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (d[n] < threshold) pts.push_back(mesh.nodes[n]);
  if (pts.size() < 2) return std::nan("");

  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat2 cov = Mat2::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat2> es;
  es.computeDirect(cov);
  const Vec2 dir = es.eigenvectors().col(1);  // dominant axis
  double ang = std::atan2(dir.y(), dir.x());
  if (ang <= -M_PI / 2) ang += M_PI;
  if (ang > M_PI / 2) ang -= M_PI;
  return ang;
}

}  // namespace pfgl
