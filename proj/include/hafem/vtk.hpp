#ifndef HAFEM_VTK_HPP
#define HAFEM_VTK_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hafem/mesh.hpp"

namespace hafem {

struct VtkCellData {
  std::vector<std::pair<std::string, std::vector<Vec2>>> vectors;
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
};

/// Legacy ASCII unstructured grid: POINTS (z = 0), triangle CELLS
/// (type 5) and optional CELL_DATA.
void write_vtk(std::ostream& os, const Mesh& mesh, const std::string& title, const VtkCellData& data = {});
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::string& title,
               const VtkCellData& data = {});

/// Edge field sampled at the element barycenters.
std::vector<Vec2> barycenter_values(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

}  // namespace hafem

#endif  // HAFEM_VTK_HPP
