#include "pfgl/vtk.hpp"

#include <fstream>
#include <iomanip>

namespace pfgl {

void write_vtk(const std::string& path, const QuadMesh& mesh, const VtkFields& fields) {
  std::ofstream f(path);
  require(f.good(), "write_vtk: cannot open ", path);
  f << std::setprecision(12);

  f << "# vtk DataFile Version 3.0\n";
  f << "pfgl snapshot\n";
  f << "ASCII\n";
  f << "DATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes) f << p.x() << " " << p.y() << " 0\n";

  f << "CELLS " << mesh.n_elements() << " " << 5 * mesh.n_elements() << "\n";
  for (const auto& c : mesh.elements)
    f << "4 " << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
  f << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) f << "9\n";

  if (!fields.point_scalars.empty() || !fields.point_vectors.empty()) {
    f << "POINT_DATA " << mesh.n_nodes() << "\n";
    for (const auto& [name, v] : fields.point_scalars) {
      require(v->size() == mesh.n_nodes(), "write_vtk: scalar ", name, " size mismatch");
      f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < v->size(); ++i) f << (*v)[i] << "\n";
    }
    for (const auto& [name, v] : fields.point_vectors) {
      require(v->size() == 2 * mesh.n_nodes(), "write_vtk: vector ", name, " size mismatch");
      f << "VECTORS " << name << " double\n";
      for (int i = 0; i < mesh.n_nodes(); ++i)
        f << (*v)[2 * i] << " " << (*v)[2 * i + 1] << " 0\n";
    }
  }

  bool cell_header = false;
  auto cell_data_header = [&] {
    if (!cell_header) {
      f << "CELL_DATA " << mesh.n_elements() << "\n";
      cell_header = true;
    }
  };
  {
    cell_data_header();
    f << "SCALARS region int 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < mesh.n_elements(); ++e)
      f << static_cast<int>(mesh.element_tags[e]) << "\n";
  }
  for (const auto& [name, vals] : fields.cell_scalars) {
    require(vals.size() == static_cast<std::size_t>(mesh.n_elements()),
            "write_vtk: cell field ", name, " size mismatch");
    cell_data_header();
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : vals) f << v << "\n";
  }
}

}  // namespace pfgl
