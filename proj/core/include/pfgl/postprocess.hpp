#pragma once

#include "pfgl/gl_solver.hpp"

namespace pfgl {

struct EnergyBreakdown {
  double strain = 0;    // kN*mm
  double fracture = 0;  // kN*mm
};

// Bulk + fracture energies of a single-domain state. Elements outside the
// phase-field mask evaluate d = 1 (no fracture energy contribution).
EnergyBreakdown single_scale_energies(const QuadMesh& mesh, const MaterialParams& params,
                                      const VecX& u, const VecX* d,
                                      const std::vector<char>* pf_mask);

struct GLEnergies {
  double global_term = 0;      // intact energy over the whole global mesh
  double fictitious_term = 0;  // subtracted patch energy
  double local_strain = 0;
  double local_fracture = 0;
  double coupling_residual = 0;  // interface functional, ~0 at convergence
  EnergyBreakdown total() const {
    return {global_term - fictitious_term + local_strain, local_fracture};
  }
};

GLEnergies gl_energies(const GLProblem& prob, const GLState& state);

enum class GlobalPFMode { GlobalPF, Homogeneous };

// Accumulates the coarse driving-force history on the global mesh with the
// rescaled length l_G.
void update_global_history(const QuadMesh& mesh, const MaterialParams& params_lG,
                           const VecX& u_G, HistoryField& H_G);

// Coarse crack representation: either a phase-field solve at length l_G or
// the closed-form homogeneous solution 1 / (1 + 2 (1-kappa) H).
VecX homogenized_global_pf(const QuadMesh& mesh, const MaterialParams& params_lG,
                           const HistoryField& H_G, GlobalPFMode mode);

struct InitiationCriterion {
  double E_voigt = 0, E_reuss = 0, E_bar = 0;  // kN/mm^2
  double eps_c = 0;
  double sigma_c = 0;  // kN/mm^2
  double trigger_fraction = 0.75;
};

// Voigt/Reuss averaging of the element modulus field (area weighted) and the
// threshold-stress initiation criterion with a = sin(fiber angle).
InitiationCriterion critical_stress(const MaterialParams& params, const QuadMesh& mesh,
                                    double trigger_fraction = 0.75);
InitiationCriterion critical_stress_from_averages(const MaterialParams& params,
                                                  double E_voigt, double E_reuss,
                                                  double trigger_fraction = 0.75);

struct InitiationHit {
  bool triggered = false;
  double max_principal_stress = 0;
  Vec2 location = Vec2::Zero();
  std::vector<int> candidate_elements;
};

// Max principal Cauchy stress over quadrature points of an intact solve,
// compared against trigger_fraction * sigma_c; candidates are the elements
// within `radius` of the maximum.
InitiationHit initiation_monitor(const QuadMesh& mesh, const MaterialParams& params,
                                 const VecX& u, const InitiationCriterion& crit,
                                 double radius);

// Least-squares (principal axis) direction of the broken node cloud
// {x : d(x) < threshold}; returns angle in radians in (-pi/2, pi/2], or NaN
// when fewer than two nodes qualify.
double crack_band_angle(const QuadMesh& mesh, const VecX& d, double threshold);

}  // namespace pfgl
