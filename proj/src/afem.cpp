#include "hafem/afem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "hafem/marking.hpp"
#include "hafem/mesh_io.hpp"
#include "hafem/parallel.hpp"
#include "hafem/run_io.hpp"

namespace hafem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<double, 3> kGammas{0.01, 0.1, 1.0};

HarmonicBasis solve_basis(const DeRhamSpaces& spaces, BasisMethod method) {
  return method == BasisMethod::kernel ? compute_basis(spaces) : cutting_basis(spaces);
}

double m1_frobenius2(const SparseMatrix& M1, const Eigen::MatrixXd& X) {
  double s = 0.0;
  for (Index j = 0; j < X.cols(); ++j) s += X.col(j).dot(M1 * X.col(j));
  return s;
}

// Measures every stored level against the overkill reference basis.
void backfill(RunResult& R) {
  const AfemConfig& cfg = R.config;
  const LevelData& finest = R.levels.back();
  R.reference_mesh = uniform_refine(finest.mesh, cfg.reference_extra_refines);
  const DeRhamSpaces ref_spaces = build_spaces(R.reference_mesh);
  const HarmonicBasis ref = solve_basis(ref_spaces, cfg.reference_method);
  if (ref.beta != finest.basis.beta) throw SolverError("reference basis dimension differs from the level bases");
  const SparseMatrix& M1 = ref_spaces.M1;
  const double beta = ref.beta;

  const std::size_t nl = R.levels.size();
  std::vector<double> E2(nl, kNaN);
  Eigen::MatrixXd prev_proj;
  for (std::size_t l = 0; l < nl; ++l) {
    LevelData& L = R.levels[l];
    LevelDiagnostics& D = R.diagnostics[l];
    const Prolongation P(L.mesh, R.reference_mesh);
    const Eigen::MatrixXd W = P.apply(L.basis.Q);
    const Eigen::MatrixXd M = ref.Q.transpose() * (M1 * W);
    const DefectReport rep = defect(M);
    const Eigen::MatrixXd proj = W * M.transpose();  // column j = P_l q_ref^j

    E2[l] = m1_frobenius2(M1, ref.Q - proj);
    const double other = m1_frobenius2(M1, W - ref.Q * M);
    const double frob = beta - M.squaredNorm();
    D.frobenius_residual = std::max({std::abs(E2[l] - other), std::abs(E2[l] - frob), std::abs(other - frob)});
    D.defect_E = rep.E;
    D.gap = rep.gap;
    D.sigma_min = rep.sigma_min;
    D.gap_ref_to_level = span_gap(ref.Q, W, M1);
    D.gap_level_to_ref = span_gap(W, ref.Q, M1);
    D.projection_norms.resize(ref.beta);
    for (int j = 0; j < ref.beta; ++j) D.projection_norms[j] = M.row(j).norm();

    L.mu = mu(L.spaces, L.basis, M);
    D.equivalence_upper = -std::numeric_limits<double>::infinity();
    D.equivalence_lower = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < L.eta.per_element.size(); ++t) {
      D.equivalence_upper = std::max(D.equivalence_upper, L.mu.per_element[t] - rep.P_norm * L.eta.per_element[t]);
      D.equivalence_lower = std::max(D.equivalence_lower, L.eta.per_element[t] - rep.P_inv_norm * L.mu.per_element[t]);
    }

    ConvergenceRecord& rec = R.records[l];
    rec.E = std::sqrt(std::max(0.0, E2[l]));
    rec.mu_total = L.mu.total;
    rec.P_norm = rep.P_norm;
    rec.P_inv_norm = rep.P_inv_norm;

    D.projection_increment = kNaN;
    D.orthogonality_residual = kNaN;
    D.localized_ratio = kNaN;
    D.contraction.fill(kNaN);
    if (l > 0) {
      LevelDiagnostics& Dp = R.diagnostics[l - 1];
      const double inc = m1_frobenius2(M1, prev_proj - proj);
      Dp.projection_increment = inc;
      Dp.orthogonality_residual = std::abs(E2[l - 1] - E2[l] - inc) / E2[l - 1];
      Dp.localized_ratio = localized_ratio(inc, R.levels[l - 1].eta, *R.levels[l - 1].mesh, R.levels[l - 1].trace);
    }
    prev_proj = proj;
  }

  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const auto& a = R.records[l];
    const auto& b = R.records[l + 1];
    for (std::size_t g = 0; g < kGammas.size(); ++g) {
      const double gm = kGammas[g];
      R.diagnostics[l].contraction[g] =
          (b.E * b.E + gm * b.mu_total * b.mu_total) / (a.E * a.E + gm * a.mu_total * a.mu_total);
    }
    R.records[l].contraction_ratio =
        (b.E * b.E + cfg.gamma * b.mu_total * b.mu_total) / (a.E * a.E + cfg.gamma * a.mu_total * a.mu_total);
  }
}

void persist_level(const AfemConfig& cfg, const LevelData& L) {
  if (cfg.out_dir.empty()) return;
  write_mesh(cfg.out_dir / level_file("level_", L.level, ".mesh"), *L.mesh);
  write_basis_csv(cfg.out_dir / level_file("basis_", L.level, ".csv"), L.basis.Q);
}

}  // namespace

BasisMethod parse_basis_method(const std::string& name) {
  if (name == "kernel") return BasisMethod::kernel;
  if (name == "cut") return BasisMethod::cut;
  throw std::invalid_argument("unknown basis method '" + name + "' (expected kernel or cut)");
}

std::string to_string(BasisMethod m) { return m == BasisMethod::kernel ? "kernel" : "cut"; }
std::string to_string(RefinementMode m) { return m == RefinementMode::adaptive ? "adaptive" : "uniform"; }

void AfemConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  if (max_dofs <= 0) throw std::invalid_argument("max_dofs must be positive");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (reference_extra_refines < 1) throw std::invalid_argument("reference_extra_refines must be at least 1");
  if (max_levels < 1) throw std::invalid_argument("max_levels must be at least 1");
  if (domain.cells_per_unit < 1) throw std::invalid_argument("cells_per_unit must be positive");
}

RunResult run(const AfemConfig& cfg, RefinementMode mode) {
  cfg.validate();
  RunResult R;
  R.config = cfg;
  R.mode = mode;
  MeshPtr mesh = create_domain(cfg.domain);
  R.initial_checksum = mesh_checksum(*mesh);
  if (mesh->num_edges() >= cfg.max_dofs) {
    throw std::invalid_argument("max_dofs (" + std::to_string(cfg.max_dofs) + ") must exceed the initial edge count (" +
                                std::to_string(mesh->num_edges()) + ")");
  }
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  for (int level = 0;; ++level) {
    LevelData L;
    L.level = level;
    L.mesh = mesh;
    L.spaces = build_spaces(mesh);
    ConvergenceRecord rec;
    rec.level = level;
    rec.n_triangles = mesh->num_triangles();
    rec.n1 = mesh->num_edges();
    LevelDiagnostics diag;
    try {
      L.basis = solve_basis(L.spaces, cfg.basis_method);
    } catch (const SolverError& e) {
      R.failed = true;
      R.failure = "level " + std::to_string(level) + ": " + e.what();
      break;
    }
    rec.beta = L.basis.beta;
    L.eta = eta(L.spaces, L.basis);
    rec.eta_total = L.eta.total;
    for (Index j = 0; j < L.basis.Q.cols(); ++j) L.linf = std::max(L.linf, linf_norm(*mesh, L.basis.Q.col(j)));
    rec.linf_max = L.linf;
    rec.E = rec.beta == 0 ? 0.0 : kNaN;
    rec.mu_total = rec.beta == 0 ? 0.0 : kNaN;
    rec.contraction_ratio = kNaN;
    diag.sigma_gap = L.basis.sigma_gap;
    diag.harmonic = harmonic_residual(L.spaces, L.basis.Q);
    persist_level(cfg, L);

    bool stop = rec.n1 > cfg.max_dofs || rec.eta_total < cfg.tol || level + 1 >= cfg.max_levels;
    if (!stop) {
      if (mode == RefinementMode::adaptive) {
        L.marked = dorfler_mark(L.eta, cfg.theta);
      } else {
        L.marked.resize(mesh->num_triangles());
        std::iota(L.marked.begin(), L.marked.end(), 0);
      }
      stop = L.marked.empty();
    }
    if (!stop) {
      if (mode == RefinementMode::adaptive) {
        auto r = bisect(mesh, L.marked);
        L.trace = std::move(r.trace);
        mesh = r.mesh;
      } else {
        // Collapse the two bisection passes so the level's parent is the
        // previous level, as for adaptive steps.
        const MeshPtr fine = uniform_refine(mesh, 1);
        auto flat = std::make_shared<Mesh>(fine->vertices(), fine->triangles(), fine->boundary_segments());
        flat->set_lineage(mesh, ancestor_map(*mesh, *fine));
        L.trace.marked = L.marked;
        L.trace.refined = L.marked;
        L.trace.bisections = flat->num_triangles() - mesh->num_triangles();
        mesh = flat;
      }
      rec.marked_count = static_cast<Index>(L.marked.size());
      rec.refined_count = static_cast<Index>(L.trace.refined.size());
    }
    R.records.push_back(rec);
    R.diagnostics.push_back(diag);
    R.levels.push_back(std::move(L));
    if (stop) break;
  }

  Index marked_total = 0;
  for (const auto& rec : R.records) marked_total += rec.marked_count;
  if (marked_total > 0) {
    R.complexity_constant = static_cast<double>(R.records.back().n_triangles - R.records.front().n_triangles) /
                            static_cast<double>(marked_total);
  }

  if (!R.failed && !R.levels.empty() && R.levels.back().basis.beta > 0) {
    try {
      backfill(R);
    } catch (const SolverError& e) {
      R.failed = true;
      R.failure = std::string("reference pass: ") + e.what();
    }
  }
  if (!cfg.out_dir.empty()) write_run_outputs(R);
  return R;
}

RunResult run_adaptive(const AfemConfig& config) { return run(config, RefinementMode::adaptive); }
RunResult run_uniform(const AfemConfig& config) { return run(config, RefinementMode::uniform); }

RateFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("rate fit needs at least 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("fit_loglog: nonpositive data");
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog: all abscissae coincide");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = static_cast<int>(x.size());
  return f;
}

namespace {

RateFit fit_tail(const std::vector<ConvergenceRecord>& records, int window, bool work) {
  std::vector<double> x, y;
  for (auto it = records.rbegin(); it != records.rend() && static_cast<int>(x.size()) < window; ++it) {
    if (!(it->E > 0.0)) continue;
    const double abscissa = work ? static_cast<double>(it->n_triangles - records.front().n_triangles)
                                 : static_cast<double>(it->n1);
    if (!(abscissa > 0.0)) continue;
    x.push_back(abscissa);
    y.push_back(it->E);
  }
  if (x.size() < 3) throw std::invalid_argument("rate fit needs at least 3 levels with E > 0");
  return fit_loglog(x, y);
}

}  // namespace

RateFit rate_fit(const std::vector<ConvergenceRecord>& records, int window) { return fit_tail(records, window, false); }

RateFit rate_fit_work(const std::vector<ConvergenceRecord>& records, int window) {
  return fit_tail(records, window, true);
}

int decade_window(const std::vector<ConvergenceRecord>& records) {
  if (records.empty()) return 0;
  const double last = static_cast<double>(records.back().n1);
  int n = 0;
  for (auto it = records.rbegin(); it != records.rend() && 10.0 * static_cast<double>(it->n1) >= last; ++it) ++n;
  return std::max(n, 3);
}

double error_at_dofs(const std::vector<ConvergenceRecord>& records, double dofs) {
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const double x0 = static_cast<double>(records[i].n1), x1 = static_cast<double>(records[i + 1].n1);
    if (dofs < x0 || dofs > x1) continue;
    const double y0 = records[i].E, y1 = records[i + 1].E;
    if (!(y0 > 0.0 && y1 > 0.0)) return kNaN;
    const double s = (std::log(dofs) - std::log(x0)) / (std::log(x1) - std::log(x0));
    return std::exp((1.0 - s) * std::log(y0) + s * std::log(y1));
  }
  return kNaN;
}

std::vector<ThresholdRow> threshold_study(const AfemConfig& base, std::span<const double> thetas) {
  std::vector<ThresholdRow> rows(thetas.size());
  std::vector<std::string> errors(thetas.size());
  // One worker per run: parallel_for would keep a short list on one thread.
  std::atomic<std::size_t> next{0};
  auto one = [&](std::size_t i) {
    AfemConfig cfg = base;
    cfg.theta = thetas[i];
    if (!base.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "theta_%.3f", thetas[i]);
      cfg.out_dir = base.out_dir / name;
    }
    const RunResult r = run_adaptive(cfg);
    if (r.failed) {
      errors[i] = r.failure;
      return;
    }
    ThresholdRow& row = rows[i];
    row.theta = thetas[i];
    row.levels = static_cast<int>(r.records.size());
    row.final_n1 = r.records.back().n1;
    row.final_E = r.records.back().E;
    row.complexity = r.complexity_constant;
    for (const auto& rec : r.records) row.total_marked += rec.marked_count;
    try {
      row.slope = rate_fit(r.records, decade_window(r.records)).slope;
    } catch (const std::invalid_argument&) {
      row.slope = kNaN;
    }
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < thetas.size(); i = next++) {
      try {
        one(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), thetas.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw SolverError("threshold study, theta " + std::to_string(thetas[i]) + ": " + errors[i]);
  }
  return rows;
}

}  // namespace hafem
