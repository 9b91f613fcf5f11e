#ifndef HAFEM_AFEM_HPP
#define HAFEM_AFEM_HPP

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hafem/domain.hpp"
#include "hafem/estimator.hpp"

namespace hafem {

enum class BasisMethod { kernel, cut };
enum class RefinementMode { adaptive, uniform };

BasisMethod parse_basis_method(const std::string& name);
std::string to_string(BasisMethod m);
std::string to_string(RefinementMode m);

struct AfemConfig {
  DomainSpec domain;
  double theta = 0.5;
  Index max_dofs = 30000;
  double tol = 0.0;
  double gamma = 0.1;
  int reference_extra_refines = 2;
  BasisMethod basis_method = BasisMethod::kernel;
  BasisMethod reference_method = BasisMethod::cut;
  int max_levels = 200;
  /// Level meshes and bases are written here as they are computed; empty
  /// disables persistence.
  std::filesystem::path out_dir;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// One row of records.csv.
struct ConvergenceRecord {
  int level = 0;
  Index n_triangles = 0;
  Index n1 = 0;
  int beta = 0;
  double E = 0.0;
  double eta_total = 0.0;
  double mu_total = 0.0;
  double P_norm = 1.0;
  double P_inv_norm = 1.0;
  double contraction_ratio = 0.0;  // NaN on the last level
  Index marked_count = 0;
  Index refined_count = 0;
  double linf_max = 0.0;
};

/// Extra per-level measurements behind the acceptance checks.
struct LevelDiagnostics {
  double sigma_gap = 0.0;
  HarmonicResidual harmonic;
  double defect_E = 0.0;            // sqrt(beta - ||M||_F^2)
  double frobenius_residual = 0.0;  // spread of the three defect formulas (squared)
  double gap = 0.0;                 // sqrt(1 - sigma_min^2)
  double gap_ref_to_level = 0.0;    // residual-based deflections, both directions
  double gap_level_to_ref = 0.0;
  double sigma_min = 1.0;
  std::vector<double> projection_norms;  // ||P_l q_ref^j|| per j
  double equivalence_upper = 0.0;        // max_T mu(T) - ||P|| eta(T)
  double equivalence_lower = 0.0;        // max_T eta(T) - ||P^-1|| mu(T)
  // Level pair (l, l+1); NaN on the last level.
  double projection_increment = 0.0;     // sum_j ||(P_l - P_{l+1}) q_ref^j||^2
  double orthogonality_residual = 0.0;   // |E_l^2 - E_{l+1}^2 - increment| / E_l^2
  double localized_ratio = 0.0;
  std::array<double, 3> contraction{};   // gamma = 0.01, 0.1, 1
};

struct LevelData {
  int level = 0;
  MeshPtr mesh;
  DeRhamSpaces spaces;
  HarmonicBasis basis;
  ErrorIndicators eta;
  ErrorIndicators mu;
  std::vector<Index> marked;
  RefinementTrace trace;  // refinement from this level to the next
  double linf = 0.0;
};

struct RunResult {
  AfemConfig config;
  RefinementMode mode = RefinementMode::adaptive;
  std::vector<LevelData> levels;
  std::vector<ConvergenceRecord> records;
  std::vector<LevelDiagnostics> diagnostics;
  MeshPtr reference_mesh;
  double complexity_constant = 0.0;  // (#T_L - #T_0) / sum of marked counts
  std::string initial_checksum;
  bool failed = false;
  std::string failure;
};

/// solve -> estimate -> mark -> refine until n1 > max_dofs or the estimator
/// total drops below tol, then measure every level against the overkill
/// reference basis.
RunResult run_adaptive(const AfemConfig& config);
/// Same records on the uniformly refined sequence.
RunResult run_uniform(const AfemConfig& config);
RunResult run(const AfemConfig& config, RefinementMode mode);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least-squares line through (log x, log y).
RateFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Slope of log E against log n1 over the last `window` levels with E > 0.
/// Throws std::invalid_argument with fewer than 3 usable points.
RateFit rate_fit(const std::vector<ConvergenceRecord>& records, int window);
/// Same against log(#T_l - #T_0), levels >= 1 only.
RateFit rate_fit_work(const std::vector<ConvergenceRecord>& records, int window);

/// Number of trailing levels whose n1 lies within a factor 10 of the final
/// n1, but at least 3.
int decade_window(const std::vector<ConvergenceRecord>& records);

/// log-log interpolation of E at n1 = dofs; NaN outside the recorded range.
double error_at_dofs(const std::vector<ConvergenceRecord>& records, double dofs);

struct ThresholdRow {
  double theta = 0.0;
  double slope = 0.0;
  int levels = 0;
  Index final_n1 = 0;
  Index total_marked = 0;
  double final_E = 0.0;
  double complexity = 0.0;
};

/// One adaptive run per theta (each in its own subdirectory when out_dir is set).
std::vector<ThresholdRow> threshold_study(const AfemConfig& base, std::span<const double> thetas);

}  // namespace hafem

#endif  // HAFEM_AFEM_HPP
