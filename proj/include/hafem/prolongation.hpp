#ifndef HAFEM_PROLONGATION_HPP
#define HAFEM_PROLONGATION_HPP

#include <Eigen/Core>

#include "hafem/whitney.hpp"

namespace hafem {

/// Exact embedding of the coarse edge space into the edge space of a
/// refinement descendant. Row e of the matrix holds the tangential moments of
/// the (at most three) coarse basis fields living on the coarse ancestor of
/// fine edge e.
class Prolongation {
 public:
  /// Throws MeshError if `fine` does not descend from `coarse`.
  Prolongation(MeshPtr coarse, MeshPtr fine);

  const MeshPtr& coarse() const { return coarse_; }
  const MeshPtr& fine() const { return fine_; }
  const SparseMatrix& matrix() const { return P_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& coarse_coeffs) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& coarse_coeffs) const;

 private:
  MeshPtr coarse_;
  MeshPtr fine_;
  SparseMatrix P_;
};

Eigen::VectorXd prolong_edge_coeffs(const MeshPtr& coarse, const MeshPtr& fine, const Eigen::VectorXd& coeffs);

}  // namespace hafem

#endif  // HAFEM_PROLONGATION_HPP
