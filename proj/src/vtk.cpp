#include "hafem/vtk.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "hafem/whitney.hpp"

namespace hafem {

void write_vtk(std::ostream& os, const Mesh& mesh, const std::string& title, const VtkCellData& data) {
  const Index nt = mesh.num_triangles();
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) os << p.x() << ' ' << p.y() << " 0\n";
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) os << "3 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (Index t = 0; t < nt; ++t) os << "5\n";
  if (data.vectors.empty() && data.scalars.empty()) return;
  os << "CELL_DATA " << nt << '\n';
  for (const auto& [name, values] : data.vectors) {
    if (static_cast<Index>(values.size()) != nt) throw MeshError("vtk: vector data '" + name + "' has wrong length");
    os << "VECTORS " << name << " double\n";
    for (const auto& v : values) os << v.x() << ' ' << v.y() << " 0\n";
  }
  for (const auto& [name, values] : data.scalars) {
    if (static_cast<Index>(values.size()) != nt) throw MeshError("vtk: scalar data '" + name + "' has wrong length");
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) os << v << '\n';
  }
}

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::string& title,
               const VtkCellData& data) {
  std::ofstream os(path);
  if (!os) throw MeshError("cannot open " + path.string() + " for writing");
  write_vtk(os, mesh, title, data);
}

std::vector<Vec2> barycenter_values(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  std::vector<Vec2> out(mesh.num_triangles());
  const std::array<double, 3> centre{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (Index t = 0; t < mesh.num_triangles(); ++t) out[t] = evaluate_in_triangle(mesh, coeffs, t, centre);
  return out;
}

}  // namespace hafem
