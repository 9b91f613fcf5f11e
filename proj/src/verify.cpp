#include "hafem/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "hafem/marking.hpp"

namespace hafem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A NaN measurement fails the check.
double nan_max(double a, double b) { return std::isnan(b) ? kInf : std::max(a, b); }

CheckResult check(const std::string& name, double value, double tolerance) {
  return {name, value, tolerance, !std::isnan(value) && value <= tolerance};
}

// Mass-norm preservation of the prolongation, relative.
double prolongation_residual(const LevelData& coarse, const LevelData& fine) {
  const Prolongation P(coarse.mesh, fine.mesh);
  double worst = 0.0;
  for (Index j = 0; j < coarse.basis.Q.cols(); ++j) {
    const Eigen::VectorXd q = coarse.basis.Q.col(j);
    const Eigen::VectorXd w = P.apply(q);
    const double a = q.dot(coarse.spaces.M1 * q), b = w.dot(fine.spaces.M1 * w);
    worst = std::max(worst, std::abs(a - b) / a);
  }
  return worst;
}

// 1 if the marked set misses the criterion or still meets it without its
// last element, else 0.
double marking_violation(const ErrorIndicators& eta, const std::vector<Index>& marked, double theta) {
  if (marked.empty()) return 0.0;
  double total = 0.0, sum = 0.0;
  for (double e : eta.per_element) total += e * e;
  for (Index t : marked) sum += eta.per_element[t] * eta.per_element[t];
  const double last = eta.per_element[marked.back()];
  const double goal = theta * theta * total;
  if (sum < goal * (1.0 - 1e-14)) return 1.0;
  return sum - last * last >= goal ? 1.0 : 0.0;
}

}  // namespace

Fault parse_fault(const std::string& name) {
  if (name == "none") return Fault::none;
  if (name == "zero_column") return Fault::zero_column;
  throw std::invalid_argument("unknown fault '" + name + "' (expected none or zero_column)");
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> out;

  for (const auto& [kind, expected] : {std::pair{DomainKind::unit_square, 0}, std::pair{DomainKind::square_annulus, 1},
                                       std::pair{DomainKind::three_hole, 3}}) {
    DomainSpec spec;
    spec.kind = kind;
    const MeshPtr m = create_domain(spec);
    const HarmonicBasis b = compute_basis(build_spaces(m));
    out.push_back(check("topology " + to_string(kind) + " beta=" + std::to_string(expected),
                        std::abs(betti_number(*m) - expected) + std::abs(b.beta - expected), 0.0));
  }

  AfemConfig cfg = options.config;
  cfg.out_dir.clear();
  cfg.max_dofs = options.max_dofs;
  cfg.max_levels = std::max(cfg.max_levels, 4);
  const RunResult R = run_adaptive(cfg);
  if (R.failed) throw SolverError("verification run failed: " + R.failure);
  const int beta = R.levels.back().basis.beta;
  const std::size_t nl = R.levels.size();

  double d_rot_grad = 0.0, d_resid = 0.0, d_orth = 0.0, d_div = 0.0, d_prolong = 0.0, d_oracle = 0.0;
  double d_marking = 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    const LevelData& L = R.levels[l];
    const SparseMatrix RG = L.spaces.Rt * L.spaces.G;
    for (Index k = 0; k < RG.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(RG, k); it; ++it) d_rot_grad = std::max(d_rot_grad, std::abs(it.value()));
    }
    Eigen::MatrixXd Q = L.basis.Q;
    if (options.fault == Fault::zero_column && Q.cols() > 0) Q.col(0).setZero();
    const HarmonicResidual h = harmonic_residual(L.spaces, Q);
    d_resid = std::max({d_resid, h.gradient, h.rot});
    d_orth = std::max(d_orth, h.orthonormality);
    if (beta > 0) {
      d_div = std::max(d_div, max_relative_divergence(L.spaces, Q));
      const HarmonicBasis cut = cutting_basis(L.spaces);
      d_oracle = std::max({d_oracle, span_gap(cut.Q, L.basis.Q, L.spaces.M1), span_gap(L.basis.Q, cut.Q, L.spaces.M1)});
    }
    if (l + 1 < nl) {
      d_prolong = std::max(d_prolong, prolongation_residual(L, R.levels[l + 1]));
      d_marking = std::max(d_marking, marking_violation(L.eta, L.marked, cfg.theta));
    }
  }
  out.push_back(check("rot o grad == 0 (max entry)", d_rot_grad, 0.0));
  out.push_back(check("basis closed and co-closed (relative)", d_resid, 1e-9));
  out.push_back(check("basis M1-orthonormal", d_orth, 1e-10));
  out.push_back(check("prolongation preserves the mass norm", d_prolong, 1e-12));
  out.push_back(check("Doerfler marking minimal", d_marking, 0.0));
  if (beta == 0) {
    out.push_back(check("beta = 0: harmonic space empty on every level", 0.0, 0.0));
    return out;
  }
  out.push_back(check("discrete divergence of basis vanishes", d_div, 1e-13));
  out.push_back(check("cutting basis vs kernel basis span gap", d_oracle, 1e-8));

  double d_frob = 0.0, d_gapsym = 0.0, d_orthog = 0.0, d_equiv = 0.0, d_pnorm = 0.0, d_pinv = 0.0, d_contr = 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    const LevelDiagnostics& D = R.diagnostics[l];
    const ConvergenceRecord& rec = R.records[l];
    d_frob = nan_max(d_frob, D.frobenius_residual);
    d_gapsym = nan_max(d_gapsym, std::abs(D.gap_ref_to_level - D.gap_level_to_ref));
    d_equiv = nan_max(d_equiv, std::max(D.equivalence_upper, D.equivalence_lower));
    d_pnorm = nan_max(d_pnorm, rec.P_norm - 1.0);
    if (l > 0) d_pinv = nan_max(d_pinv, rec.P_inv_norm - R.records[l - 1].P_inv_norm);
    if (l + 1 < nl) {
      d_orthog = nan_max(d_orthog, D.orthogonality_residual);
      d_contr = nan_max(d_contr, D.contraction[1]);
    }
  }
  out.push_back(check("defect identities agree (Frobenius)", d_frob, 1e-12));
  out.push_back(check("gap symmetric in both directions", d_gapsym, 1e-10));
  out.push_back(check("error split E_l^2 - E_l+1^2 = increment (relative)", d_orthog, 1e-9));
  out.push_back(check("mu <= |P| eta and eta <= |P^-1| mu elementwise", d_equiv, 1e-12));
  out.push_back(check("|P| <= 1", d_pnorm, 1e-12));
  out.push_back(check("|P^-1| nonincreasing", d_pinv, 1e-12));
  out.push_back(check("contraction ratio (gamma = 0.1) below 1", d_contr, 1.0 - 1e-12));
  return out;
}

void print_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
  char buf[256];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s  %-55s value=%.3e tol=%.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.value, c.tolerance);
    os << buf;
  }
}

}  // namespace hafem
