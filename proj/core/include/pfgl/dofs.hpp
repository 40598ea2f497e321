#pragma once

#include "pfgl/types.hpp"

namespace pfgl {

// Contiguous nodal dof numbering: dof = node * ncomp + comp.
struct DofMap {
  int ncomp = 1;
  int n_nodes = 0;
  std::vector<char> constrained;  // per dof
  std::vector<double> value;      // prescribed value per dof

  DofMap() = default;
  DofMap(int nodes, int comps) : ncomp(comps), n_nodes(nodes) {
    constrained.assign(static_cast<std::size_t>(nodes) * comps, 0);
    value.assign(static_cast<std::size_t>(nodes) * comps, 0.0);
  }

  int ndof() const { return n_nodes * ncomp; }
  int dof(int node, int comp) const { return node * ncomp + comp; }
  bool is_constrained(int d) const { return constrained[d] != 0; }

  void constrain(int node, int comp, double v) {
    const int d = dof(node, comp);
    constrained[d] = 1;
    value[d] = v;
  }
  void release_all() {
    std::fill(constrained.begin(), constrained.end(), 0);
    std::fill(value.begin(), value.end(), 0.0);
  }
  int n_free() const {
    int n = 0;
    for (char c : constrained) n += (c == 0);
    return n;
  }
  // Overwrite constrained entries of a state vector with prescribed values.
  void impose(VecX& x) const {
    for (int d = 0; d < ndof(); ++d)
      if (constrained[d]) x[d] = value[d];
  }
};

}  // namespace pfgl
