#ifndef HAFEM_WHITNEY_HPP
#define HAFEM_WHITNEY_HPP

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hafem/mesh.hpp"

namespace hafem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Local geometry of one triangle: vertex positions, barycentric gradients
/// and, for each local edge k (opposite vertex k), the local indices of its
/// endpoints ordered by the global edge orientation (low -> high index).
struct ElementFrame {
  std::array<Vec2, 3> p;
  std::array<Vec2, 3> grad;
  double area = 0.0;
  std::array<std::array<int, 2>, 3> edge_ends;
};

ElementFrame element_frame(const Mesh& mesh, Index t);

/// Whitney 1-form of local edge k, lambda_a grad(lambda_b) - lambda_b grad(lambda_a),
/// evaluated at barycentric coordinates `bary`. Its tangential integral over
/// the oriented edge a -> b is 1.
Vec2 whitney_value(const ElementFrame& f, int k, const std::array<double, 3>& bary);

/// rot of the local Whitney form: rot v = d_y v1 - d_x v2 (constant on T).
double whitney_rot(const ElementFrame& f, int k);

/// The discrete complex V0 --grad--> V1 --rot--> V2 on one mesh:
/// continuous P1, lowest-order edge elements with DOF = tangential integral,
/// and piecewise constants with DOF = value.
struct DeRhamSpaces {
  MeshPtr mesh;
  Index n0 = 0;
  Index n1 = 0;
  Index n2 = 0;
  SparseMatrix M0;  // P1 mass
  SparseMatrix M1;  // edge-element mass
  SparseMatrix M2;  // diag(|T|)
  SparseMatrix K0;  // P1 stiffness, directly assembled
  SparseMatrix G;   // n1 x n0, +1 at the head vertex, -1 at the tail
  SparseMatrix Rt;  // n2 x n1, rot of each edge basis field
};

DeRhamSpaces build_spaces(const MeshPtr& mesh);

/// A V1 field given by its edge coefficients.
struct EdgeField {
  MeshPtr mesh;
  Eigen::VectorXd coeffs;
};

/// Edge-moment interpolant: coefficient = integral of f . tangent over each
/// oriented edge (3-point Gauss, exact for quadratic f).
EdgeField interpolate(const MeshPtr& mesh, const std::function<Vec2(const Vec2&)>& f);

/// Field value inside triangle t at barycentric coordinates `bary`.
Vec2 evaluate_in_triangle(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t,
                          const std::array<double, 3>& bary);

/// Pointwise evaluation; throws MeshError for points outside the mesh.
std::vector<Vec2> evaluate_field(const EdgeField& f, const std::vector<Vec2>& points);

/// Constant divergence and rot of the field on triangle t.
double divergence_on(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t);
double rot_on(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t);

/// Max Euclidean magnitude over 7 samples per element (vertices, edge
/// midpoints, barycenter).
double linf_norm(const EdgeField& f);
double linf_norm(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

/// Locates the triangle containing a point using a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(const MeshPtr& mesh);
  /// Triangle id containing p (boundary inclusive, tolerance 1e-12), or -1.
  Index locate(const Vec2& p) const;

 private:
  MeshPtr mesh_;
  Vec2 lo_, cell_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<Index>> buckets_;
};

}  // namespace hafem

#endif  // HAFEM_WHITNEY_HPP
