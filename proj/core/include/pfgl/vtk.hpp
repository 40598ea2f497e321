#pragma once

#include <map>

#include "pfgl/mesh.hpp"

namespace pfgl {

// Legacy ASCII VTK unstructured grid (POINTS / CELLS type 9 / CELL_DATA).
struct VtkFields {
  std::map<std::string, const VecX*> point_scalars;  // size n_nodes
  std::map<std::string, const VecX*> point_vectors;  // size 2*n_nodes
  std::map<std::string, std::vector<double>> cell_scalars;
};

void write_vtk(const std::string& path, const QuadMesh& mesh,
               const VtkFields& fields = {});

}  // namespace pfgl
