#ifndef HAFEM_ESTIMATOR_HPP
#define HAFEM_ESTIMATOR_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hafem/harmonic.hpp"

namespace hafem {

enum class IndicatorKind { practical, theoretical };

/// Per-element indicators aggregated over a set of fields by root-sum-square.
struct ErrorIndicators {
  IndicatorKind kind = IndicatorKind::practical;
  std::vector<double> per_element;
  double total = 0.0;  // sqrt of the sum of squares, summed in element order
};

/// eta(T; q) = h_T ||div q||_T + h_T^{1/2} ||[q.n]||_{dT} with h_T = |T|^{1/2}.
/// Every element integrates the normal jump over its whole boundary, so an
/// interior edge is seen by both neighbours; on boundary edges the exterior
/// trace is zero. Columns of `fields` are edge-coefficient vectors.
ErrorIndicators indicators(const DeRhamSpaces& spaces, const Eigen::MatrixXd& fields,
                           IndicatorKind kind = IndicatorKind::practical);

/// Practical indicators of the computed basis.
ErrorIndicators eta(const DeRhamSpaces& spaces, const HarmonicBasis& basis);

/// Theoretical indicators: the eta functional applied to the projections
/// P q^j = sum_m M_jm q^m of the reference fields, M = cross_gram.
ErrorIndicators mu(const DeRhamSpaces& spaces, const HarmonicBasis& basis, const Eigen::MatrixXd& cross_gram_M);
ErrorIndicators mu(const DeRhamSpaces& spaces, const HarmonicBasis& basis, const HarmonicBasis& ref,
                   const DeRhamSpaces& ref_spaces, const Prolongation& prolongation);

/// Largest |div q| over elements and columns, relative to the natural scale
/// sum_k |c_k| |grad lambda_a| |grad lambda_b| of the element.
double max_relative_divergence(const DeRhamSpaces& spaces, const Eigen::MatrixXd& fields);

struct DefectReport {
  double E = 0.0;           // sqrt(beta - ||M||_F^2)
  double P_norm = 1.0;      // sigma_max(M)
  double P_inv_norm = 1.0;  // 1 / sigma_min(M)
  double gap = 0.0;         // sqrt(1 - sigma_min(M)^2)
  double sigma_min = 1.0;
};

/// Throws SolverError if M is not square or sigma_min(M) == 0.
DefectReport defect(const Eigen::MatrixXd& M);

/// Refined triangles of `trace` plus their edge neighbours on the coarse mesh.
std::vector<Index> enlarged_refined_set(const Mesh& coarse, const RefinementTrace& trace);

/// numerator / sum over the enlarged refined set of eta(T)^2. Returns 0 when
/// nothing was refined and the numerator vanishes, +infinity when nothing
/// was refined but the numerator does not vanish.
double localized_ratio(double numerator, const ErrorIndicators& eta_coarse, const Mesh& coarse,
                       const RefinementTrace& trace);

}  // namespace hafem

#endif  // HAFEM_ESTIMATOR_HPP
