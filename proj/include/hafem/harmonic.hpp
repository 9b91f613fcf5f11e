#ifndef HAFEM_HARMONIC_HPP
#define HAFEM_HARMONIC_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hafem/prolongation.hpp"
#include "hafem/whitney.hpp"

namespace hafem {

/// Numerical failure: lost spectral gap, failed cut construction, singular
/// solves, dimension mismatches between bases that must agree.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// M1-orthonormal basis of the discrete harmonic fields on one mesh.
struct HarmonicBasis {
  MeshPtr mesh;
  Eigen::MatrixXd Q;  // n1 x beta
  int beta = 0;
  /// sigma_{beta+1} / sigma_beta of the scaled constraint operator; infinity
  /// for beta = 0 and NaN for bases that did not come from the kernel solve.
  double sigma_gap = 0.0;
};

struct KernelOptions {
  int max_iterations = 60;
  /// Convergence threshold on the change of the kernel span between sweeps.
  double tolerance = 1e-13;
  /// Smallest accepted sigma_{beta+1} / sigma_beta.
  double min_gap = 1e6;
};

/// Null space of q -> (G^T M1 q, Rt q) by shifted block inverse iteration on
///   A = M1 G D0^{-1} G^T M1 + Rt^T M2 Rt      (D0 = lumped M0)
/// in the M1 inner product. The dimension is the Betti number of the mesh.
HarmonicBasis compute_basis(const DeRhamSpaces& spaces, const KernelOptions& options = {});

/// A cut from a hole to the outer boundary, as a path of mesh vertices.
struct Cut {
  int hole = 0;
  std::vector<Index> path;
};

/// One vertex-disjoint cut per hole. Throws SolverError when a hole cannot
/// be connected to the outer boundary.
std::vector<Cut> build_cuts(const Mesh& mesh);

/// Closed but non-exact edge field: the gradient of the potential that jumps
/// by one across the cut, taken elementwise.
Eigen::VectorXd cut_jump_field(const Mesh& mesh, const Cut& cut);

/// Harmonic basis from the cut potentials: q = z - G phi with
/// K0 phi = G^T M1 z, then M1-orthonormalised.
HarmonicBasis cutting_basis(const DeRhamSpaces& spaces);

/// Modified Gram-Schmidt in the M1 inner product (two passes).
void m1_orthonormalize(Eigen::MatrixXd& Q, const SparseMatrix& M1);

/// Makes the entry of largest magnitude in each column positive.
void normalize_signs(Eigen::MatrixXd& Q);

struct FieldProjection {
  Eigen::VectorXd coefficients;
  EdgeField residual;
};

/// Coefficients c = Q^T M1 f and residual f - Q c.
FieldProjection project_field(const EdgeField& f, const HarmonicBasis& basis, const DeRhamSpaces& spaces);

/// M_ij = <q_ref^i, P q_coarse^j>, evaluated on the reference mesh.
Eigen::MatrixXd cross_gram(const HarmonicBasis& ref, const DeRhamSpaces& ref_spaces, const HarmonicBasis& coarse,
                           const Prolongation& prolongation);

/// Largest deflection sup_{a in span A, |a| = 1} dist(a, span B) between two
/// M1-orthonormal column sets on the same mesh, from the residual
/// A - B (B^T M1 A).
double span_gap(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const SparseMatrix& M1);

struct HarmonicResidual {
  double gradient = 0.0;    // max |G^T M1 Q| / max |M1|
  double rot = 0.0;         // max over columns of ||rot q||_{L2}
  double orthonormality = 0.0;  // max |Q^T M1 Q - I|
};

HarmonicResidual harmonic_residual(const DeRhamSpaces& spaces, const Eigen::MatrixXd& Q);

}  // namespace hafem

#endif  // HAFEM_HARMONIC_HPP
