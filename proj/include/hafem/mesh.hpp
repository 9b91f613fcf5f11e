#ifndef HAFEM_MESH_HPP
#define HAFEM_MESH_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hafem {

using Index = int;
using Vec2 = Eigen::Vector2d;

/// Thrown for invalid meshes, inputs outside an operation's domain and
/// failed numerical preconditions.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A triangle stored with its newest vertex first: v[0] is the peak and the
/// refinement edge is (v[1], v[2]). Local edge i is the edge opposite v[i].
/// Vertices are always positively oriented.
struct Triangle {
  std::array<Index, 3> v;
};

/// Edge oriented from the lower to the higher vertex index.
struct Edge {
  Index a = -1;
  Index b = -1;
  std::array<Index, 2> tri{-1, -1};  // tri[1] == -1 on the boundary
  int marker = -1;                   // boundary marker, -1 for interior edges

  bool is_boundary() const { return tri[1] < 0; }
};

struct BoundarySegment {
  Index a;
  Index b;
  int marker;
};

/// Conforming triangulation with newest-vertex labels and refinement lineage.
///
/// Meshes are immutable once constructed. A refined mesh keeps a pointer to
/// the mesh it was bisected from together with the triangle parent map, so
/// any descendant can locate its ancestors for exact prolongation.
class Mesh {
 public:
  /// Builds the edge table and validates orientation and edge multiplicity.
  /// Boundary edges not listed in `boundary` get markers from their boundary
  /// loop: 0 for the outer loop, 1..k for the holes.
  Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
       std::span<const BoundarySegment> boundary = {});

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vec2& vertex(Index i) const { return vertices_[i]; }
  const Triangle& triangle(Index t) const { return triangles_[t]; }
  const Edge& edge(Index e) const { return edges_[e]; }

  /// Global edge ids of triangle t, local edge i opposite local vertex i.
  const std::array<Index, 3>& triangle_edges(Index t) const { return tri_edges_[t]; }
  Index refinement_edge(Index t) const { return tri_edges_[t][0]; }

  double area(Index t) const;
  /// h_T = |T|^{1/2}.
  double size(Index t) const;
  Vec2 barycenter(Index t) const;
  double min_angle(Index t) const;
  double min_angle() const;
  double total_area() const;

  /// Triangles across the three edges of t (-1 on the boundary).
  std::array<Index, 3> neighbors(Index t) const;
  std::vector<bool> boundary_vertices() const;

  /// Closed boundary loops as vertex cycles, outer loop first, holes ordered
  /// by their smallest vertex index.
  std::vector<std::vector<Index>> boundary_loops() const;

  bool is_connected() const;
  /// Full check for hanging vertices: every boundary vertex must have exactly
  /// two boundary edges and no boundary vertex may lie inside a boundary edge.
  bool is_conforming() const;

  int euler_characteristic() const;

  int generation() const { return generation_; }
  std::uint64_t id() const { return id_; }
  const std::shared_ptr<const Mesh>& parent() const { return parent_; }
  /// Triangle of parent() containing triangle t; empty for a root mesh.
  const std::vector<Index>& parent_map() const { return parent_map_; }

  /// Attaches refinement lineage. Used by bisection and by the run loader.
  void set_lineage(std::shared_ptr<const Mesh> parent, std::vector<Index> parent_map);
  void set_generation(int g) { generation_ = g; }

  std::vector<BoundarySegment> boundary_segments() const;

 private:
  void build_edges(std::span<const BoundarySegment> boundary);
  void assign_loop_markers();

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<Index, 3>> tri_edges_;
  int generation_ = 0;
  std::uint64_t id_ = 0;
  std::shared_ptr<const Mesh> parent_;
  std::vector<Index> parent_map_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

struct RefinementTrace {
  std::vector<Index> marked;   // sorted, unique
  std::vector<Index> refined;  // old triangles that were bisected, sorted
  std::vector<std::vector<Index>> child_map;  // old triangle -> new triangles
  Index bisections = 0;        // #T_new - #T_old
};

struct BisectionResult {
  MeshPtr mesh;
  RefinementTrace trace;
};

/// Newest-vertex bisection of the marked triangles plus conforming closure.
BisectionResult bisect(const MeshPtr& mesh, std::span<const Index> marked);

/// n rounds of "bisect everything twice"; each round quadruples #T.
MeshPtr uniform_refine(const MeshPtr& mesh, int n);

/// Number of holes, 1 - (V - E + F). Rejects disconnected meshes.
int betti_number(const Mesh& mesh);

/// For each triangle of `fine`, the triangle of `coarse` containing it.
/// Throws if `fine` is not a refinement descendant of `coarse`.
std::vector<Index> ancestor_map(const Mesh& coarse, const Mesh& fine);

/// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const Mesh& mesh, Index t, const Vec2& p);

}  // namespace hafem

#endif  // HAFEM_MESH_HPP
