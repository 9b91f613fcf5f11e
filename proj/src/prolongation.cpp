#include "hafem/prolongation.hpp"

#include <cmath>

namespace hafem {

Prolongation::Prolongation(MeshPtr coarse, MeshPtr fine) : coarse_(std::move(coarse)), fine_(std::move(fine)) {
  const Mesh& C = *coarse_;
  const Mesh& F = *fine_;
  const std::vector<Index> anc = ancestor_map(C, F);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * static_cast<std::size_t>(F.num_edges()));
  for (Index e = 0; e < F.num_edges(); ++e) {
    const Edge& ed = F.edge(e);
    const Index T = anc[ed.tri[0]];
    const Vec2 a = F.vertex(ed.a), b = F.vertex(ed.b);
    const Vec2 d = b - a;
    // The coarse field is affine along the edge, so its moment is the
    // midpoint value times the edge vector.
    const auto bary = barycentric(C, T, 0.5 * (a + b));
    const ElementFrame frame = element_frame(C, T);
    const auto& ce = C.triangle_edges(T);
    for (int k = 0; k < 3; ++k) {
      const double w = whitney_value(frame, k, bary).dot(d);
      if (w != 0.0) trip.emplace_back(e, ce[k], w);
    }
  }
  P_.resize(F.num_edges(), C.num_edges());
  P_.setFromTriplets(trip.begin(), trip.end());
  P_.makeCompressed();
}

Eigen::VectorXd Prolongation::apply(const Eigen::VectorXd& coarse_coeffs) const {
  if (coarse_coeffs.size() != P_.cols()) throw MeshError("prolongation: coefficient length does not match coarse edges");
  return P_ * coarse_coeffs;
}

Eigen::MatrixXd Prolongation::apply(const Eigen::MatrixXd& coarse_coeffs) const {
  if (coarse_coeffs.rows() != P_.cols()) throw MeshError("prolongation: coefficient rows do not match coarse edges");
  return P_ * coarse_coeffs;
}

Eigen::VectorXd prolong_edge_coeffs(const MeshPtr& coarse, const MeshPtr& fine, const Eigen::VectorXd& coeffs) {
  return Prolongation(coarse, fine).apply(coeffs);
}

}  // namespace hafem
