#ifndef HAFEM_MESH_IO_HPP
#define HAFEM_MESH_IO_HPP

#include <filesystem>
#include <iosfwd>

#include "hafem/mesh.hpp"

namespace hafem {

// Text format:
//   VERTICES n      followed by n lines "x y"
//   TRIANGLES m     followed by m lines "v0 v1 v2 refEdgeLocalIndex"
//   BOUNDARY k      followed by k lines "va vb marker"
// Optional trailing lineage sections written for refined meshes:
//   GENERATION g
//   PARENTS m       followed by m lines "parentTriangle"
// refEdgeLocalIndex i names the edge opposite local vertex i.

void write_mesh(std::ostream& os, const Mesh& mesh);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

struct MeshFile {
  MeshPtr mesh;
  bool has_lineage = false;
  int generation = 0;
  std::vector<Index> parents;
};

MeshFile read_mesh(std::istream& is);
MeshFile read_mesh(const std::filesystem::path& path);

/// Rebuilds a mesh read from disk with its lineage attached to `parent`.
MeshPtr attach_lineage(const MeshFile& file, const MeshPtr& parent);

}  // namespace hafem

#endif  // HAFEM_MESH_IO_HPP
