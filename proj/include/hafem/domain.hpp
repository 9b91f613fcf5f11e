#ifndef HAFEM_DOMAIN_HPP
#define HAFEM_DOMAIN_HPP

#include <string>
#include <vector>

#include "hafem/mesh.hpp"

namespace hafem {

enum class DomainKind { unit_square, square_annulus, three_hole, polygon, file };

/// Polygon with holes. Rings are closed implicitly (last vertex connects to
/// the first); orientation of the input rings is irrelevant.
struct PolygonWithHoles {
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;
};

struct DomainSpec {
  DomainKind kind = DomainKind::square_annulus;
  /// Grid cells per unit length of the structured triangulation.
  int cells_per_unit = 1;
  PolygonWithHoles polygon;  // kind == polygon
  std::string mesh_file;     // kind == file
};

DomainKind parse_domain_kind(const std::string& name);
std::string to_string(DomainKind kind);

/// [0,3]^2 minus [1,2]^2.
PolygonWithHoles square_annulus();
/// [0,7]x[0,3] minus [1,2]x[1,2], [3,4]x[1,2], [5,6]x[1,2].
PolygonWithHoles three_hole_rectangle();
PolygonWithHoles unit_square();

/// Structured triangulation of an axis-aligned polygon with holes whose
/// vertices lie on the grid of spacing 1/cells_per_unit. Every grid cell is
/// split along its (0,0)-(1,1) diagonal, which becomes the refinement edge
/// of both halves; the result is refined uniformly once and returned as a
/// root mesh (generation 0).
MeshPtr structured_polygon_mesh(const PolygonWithHoles& poly, int cells_per_unit);

MeshPtr create_domain(const DomainSpec& spec);

/// Reentrant (interior angle 3*pi/2) corners of the domain boundary.
std::vector<Vec2> reentrant_corners(const Mesh& mesh);

}  // namespace hafem

#endif  // HAFEM_DOMAIN_HPP
