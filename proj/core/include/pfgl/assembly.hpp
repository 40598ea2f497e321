#pragma once

#include "pfgl/dofs.hpp"
#include "pfgl/material.hpp"
#include "pfgl/mesh.hpp"

namespace pfgl {

struct QuadPoint {
  double xi, eta, w;
};

// 2x2 Gauss rule on [-1,1]^2.
const std::array<QuadPoint, 4>& gauss4();

// Q1 shape functions and physical gradients on one element.
struct ElementBasis {
  std::array<double, 4> N;
  std::array<Vec2, 4> dN;  // physical gradients
  double detJ = 0;

  // Throws when the Jacobian is singular or inverted.
  void compute(const QuadMesh& mesh, int elem, double xi, double eta);
};

Mat2 strain_at(const ElementBasis& basis, const QuadMesh& mesh, int elem, const VecX& u);

// Sparse system in triplet form plus right-hand side.
struct Assembled {
  Triplets K;
  VecX rhs;
};

// Internal force and tangent of the displacement equation. `d_nodal` may be
// null (intact material everywhere); `pf_elements` limits where d is
// interpolated -- elements outside evaluate d = 1.
Assembled assemble_displacement(const QuadMesh& mesh, const MaterialParams& params,
                                const VecX* d_nodal, const std::vector<char>* pf_elements,
                                const VecX& u);

// Linear phase-field operator A d = b for frozen history H; assembled over
// `support` elements only (or all when empty).
Assembled assemble_phase_field(const QuadMesh& mesh, const MaterialParams& params,
                               const HistoryField& H, const std::vector<int>& support = {});

// Intact (d = 1) stiffness over an element subset; empty = whole mesh.
Triplets elastic_stiffness(const QuadMesh& mesh, const MaterialParams& params,
                           const std::vector<int>& elems = {});

// Row/column elimination with prescribed-value lift; keeps unit diagonal on
// constrained dofs. `homogeneous` ignores prescribed values (Newton updates).
void apply_dirichlet(const Triplets& K, const VecX& rhs, const DofMap& dofs,
                     SpMat& K_out, VecX& rhs_out, bool homogeneous = false);

// Deterministic sparse direct solve (LU); throws on singular systems.
VecX solve_sparse(const SpMat& K, const VecX& rhs, const char* context = "");

// Symmetric positive definite variant (LDLT), falls back to LU on failure.
VecX solve_spd(const SpMat& K, const VecX& rhs, const char* context = "");

}  // namespace pfgl
