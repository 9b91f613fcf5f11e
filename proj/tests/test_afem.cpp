#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <Eigen/Dense>

#include "hafem/afem.hpp"
#include "hafem/marking.hpp"
#include "hafem/run_io.hpp"

using namespace hafem;
namespace fs = std::filesystem;

namespace {

std::vector<ConvergenceRecord> power_law(double c, double rate, std::initializer_list<Index> dofs) {
  std::vector<ConvergenceRecord> out;
  int l = 0;
  for (Index n : dofs) {
    ConvergenceRecord r;
    r.level = l++;
    r.n1 = n;
    r.n_triangles = n / 2 + 10;
    r.E = c * std::pow(static_cast<double>(n), rate);
    out.push_back(r);
  }
  return out;
}

AfemConfig small_annulus(Index max_dofs) {
  AfemConfig c;
  c.domain.kind = DomainKind::square_annulus;
  c.max_dofs = max_dofs;
  return c;
}

// Best M1 approximation of each reference column from span(W), from the
// normal equations; no orthonormality of W is assumed.
double defect_by_normal_equations(const Eigen::MatrixXd& Qref, const Eigen::MatrixXd& W, const SparseMatrix& M1) {
  const Eigen::MatrixXd MW = M1 * W;
  const Eigen::MatrixXd c = (W.transpose() * MW).ldlt().solve(MW.transpose() * Qref);
  const Eigen::MatrixXd R = Qref - W * c;
  double s = 0.0;
  for (Index j = 0; j < R.cols(); ++j) s += R.col(j).dot(M1 * R.col(j));
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("log-log fit recovers synthetic rates") {
  for (double rate : {-0.5, -1.0 / 3.0, -1.0}) {
    const auto recs = power_law(2.5, rate, {100, 180, 400, 950, 2000, 5100});
    const RateFit f = rate_fit(recs, 6);
    CHECK(f.slope == doctest::Approx(rate).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(f.points == 6);
  }
  auto recs = power_law(1.0, -0.5, {100, 200, 400, 800});
  recs[0].E = 1.0;  // outside the window of the last 3 levels
  CHECK(rate_fit(recs, 3).slope == doctest::Approx(-0.5).epsilon(1e-12));
  recs[2].E = std::nan("");  // skipped, so level 0 enters the window
  CHECK(rate_fit(recs, 3).points == 3);
  CHECK(rate_fit(recs, 3).slope != doctest::Approx(-0.5));
  recs[1].E = 0.0;
  CHECK_THROWS_AS(rate_fit(recs, 3), std::invalid_argument);
}

TEST_CASE("rate against work uses the triangle increments") {
  std::vector<ConvergenceRecord> recs(5);
  for (int l = 0; l < 5; ++l) {
    recs[l].n_triangles = 64 + 100 * (1 << l);
    recs[l].n1 = 1000 * (l + 1);
    recs[l].E = 7.0 / std::sqrt(100.0 * (1 << l));
  }
  recs[0].n_triangles = 64;  // level 0 has zero work and is skipped
  CHECK(rate_fit_work(recs, 4).slope == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("decade window and matched-budget interpolation") {
  const auto recs = power_law(1.0, -0.5, {100, 300, 900, 2000, 5000, 9000, 20000});
  CHECK(decade_window(recs) == 4);  // 2000, 5000, 9000, 20000
  CHECK(decade_window(power_law(1.0, -0.5, {100, 120})) == 3);
  CHECK(error_at_dofs(recs, 1000.0) == doctest::Approx(std::pow(1000.0, -0.5)).epsilon(1e-12));
  CHECK(error_at_dofs(recs, 300.0) == doctest::Approx(std::pow(300.0, -0.5)).epsilon(1e-12));
  CHECK(std::isnan(error_at_dofs(recs, 50.0)));
  CHECK(std::isnan(error_at_dofs(recs, 30000.0)));
}

TEST_CASE("configuration validation") {
  AfemConfig c;
  CHECK_NOTHROW(c.validate());
  c.theta = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.theta = 1.0;
  CHECK_NOTHROW(c.validate());
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = AfemConfig{};
  c.max_dofs = 50;  // below the initial annulus edge count
  CHECK_THROWS_AS(run_adaptive(c), std::invalid_argument);
}

TEST_CASE("a tolerance above the initial estimator stops after one level") {
  AfemConfig c = small_annulus(5000);
  c.tol = 10.0;
  const RunResult r = run_adaptive(c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].marked_count == 0);
  CHECK(r.records[0].E > 0.0);
  CHECK(r.complexity_constant == 0.0);
}

TEST_CASE("square domain: empty harmonic space, single level") {
  AfemConfig c;
  c.domain.kind = DomainKind::unit_square;
  c.max_dofs = 1000;
  const RunResult r = run_adaptive(c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].beta == 0);
  CHECK(r.records[0].E == 0.0);
  CHECK(r.records[0].eta_total == 0.0);
  CHECK_FALSE(r.failed);
}

TEST_CASE("adaptive run: records are consistent with independent recomputation") {
  const AfemConfig cfg = small_annulus(1500);
  const RunResult r = run_adaptive(cfg);
  REQUIRE_FALSE(r.failed);
  const std::size_t nl = r.records.size();
  REQUIRE(nl >= 5);

  const DeRhamSpaces ref_spaces = build_spaces(r.reference_mesh);
  const HarmonicBasis ref = compute_basis(ref_spaces);  // reference by the other method
  Index marked_total = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& rec = r.records[l];
    const auto& L = r.levels[l];
    CAPTURE(l);
    CHECK(rec.level == static_cast<int>(l));
    CHECK(rec.beta == 1);
    CHECK(rec.n1 == L.mesh->num_edges());
    CHECK(rec.n_triangles == L.mesh->num_triangles());
    if (l > 0) CHECK(rec.n1 > r.records[l - 1].n1);
    if (l > 0) CHECK(L.mesh->parent().get() == r.levels[l - 1].mesh.get());

    const Prolongation P(L.mesh, r.reference_mesh);
    const double E = defect_by_normal_equations(ref.Q, P.apply(L.basis.Q), ref_spaces.M1);
    CHECK(rec.E == doctest::Approx(E).epsilon(1e-7));
    CHECK(rec.E == doctest::Approx(r.diagnostics[l].defect_E).epsilon(1e-9));
    CHECK(rec.P_norm <= 1.0 + 1e-12);
    CHECK(rec.P_inv_norm >= 1.0);
    CHECK(rec.mu_total <= rec.P_norm * rec.eta_total * (1 + 1e-12));
    CHECK(rec.eta_total <= rec.P_inv_norm * rec.mu_total * (1 + 1e-12));

    if (l + 1 < nl) {
      CHECK(L.marked == dorfler_mark(L.eta, cfg.theta));
      CHECK(rec.marked_count == static_cast<Index>(L.marked.size()));
      CHECK(rec.refined_count >= rec.marked_count);
      const auto& nx = r.records[l + 1];
      const double rho = (nx.E * nx.E + 0.1 * nx.mu_total * nx.mu_total) /
                         (rec.E * rec.E + 0.1 * rec.mu_total * rec.mu_total);
      CHECK(rec.contraction_ratio == doctest::Approx(rho).epsilon(1e-12));
      CHECK(r.diagnostics[l].contraction[1] == doctest::Approx(rho).epsilon(1e-12));
      CHECK(r.diagnostics[l].orthogonality_residual < 1e-9);
    } else {
      CHECK(std::isnan(rec.contraction_ratio));
      CHECK(rec.marked_count == 0);
    }
    marked_total += rec.marked_count;
  }
  CHECK(r.records.back().n1 > cfg.max_dofs);
  CHECK(r.records[nl - 2].n1 <= cfg.max_dofs);
  const double C = static_cast<double>(r.records.back().n_triangles - r.records.front().n_triangles) / marked_total;
  CHECK(r.complexity_constant == doctest::Approx(C).epsilon(1e-15));
}

TEST_CASE("uniform run: each level is the uniform refinement of the previous one") {
  AfemConfig cfg = small_annulus(2000);
  const RunResult r = run_uniform(cfg);
  REQUIRE_FALSE(r.failed);
  REQUIRE(r.records.size() == 4);  // 112, 416, 1600, 6272 edges
  for (std::size_t l = 1; l < r.records.size(); ++l) {
    CHECK(r.records[l].n_triangles == 4 * r.records[l - 1].n_triangles);
    CHECK(r.levels[l].mesh->parent().get() == r.levels[l - 1].mesh.get());
    CHECK(r.levels[l].mesh->generation() == static_cast<int>(l));
    CHECK(r.records[l].E < r.records[l - 1].E);
    CHECK(r.records[l - 1].marked_count == r.records[l - 1].n_triangles);
  }
  CHECK(r.complexity_constant == doctest::Approx(3.0));
}

TEST_CASE("runs are deterministic") {
  AfemConfig cfg = small_annulus(800);
  std::ostringstream a, b;
  write_records_csv(a, run_adaptive(cfg).records);
  write_records_csv(b, run_adaptive(cfg).records);
  CHECK(a.str() == b.str());
}

TEST_CASE("the basis method does not change the estimator on a given mesh") {
  // Whole runs may diverge: indicators tied in exact arithmetic are ordered
  // by rounding, so the marked sets can differ between methods.
  const RunResult k = run_adaptive(small_annulus(800));
  for (const auto& L : k.levels) {
    const HarmonicBasis cut = cutting_basis(L.spaces);
    const ErrorIndicators e = eta(L.spaces, cut);
    CHECK(e.total == doctest::Approx(L.eta.total).epsilon(1e-8));
    double worst = 0.0;
    for (std::size_t t = 0; t < e.per_element.size(); ++t) {
      worst = std::max(worst, std::abs(e.per_element[t] - L.eta.per_element[t]));
    }
    CHECK(worst < 1e-8 * L.eta.total);
  }
}

TEST_CASE("persisted run reloads with identical meshes, bases and records") {
  const fs::path dir = fs::temp_directory_path() / "hafem_test_afem_run";
  fs::remove_all(dir);
  AfemConfig cfg = small_annulus(600);
  cfg.domain.kind = DomainKind::three_hole;
  cfg.max_dofs = 1200;
  cfg.out_dir = dir;
  const RunResult r = run_adaptive(cfg);
  REQUIRE_FALSE(r.failed);
  const StoredRun s = load_run(dir);
  REQUIRE(s.meshes.size() == r.levels.size());
  for (std::size_t l = 0; l < s.meshes.size(); ++l) {
    CHECK(mesh_checksum(*s.meshes[l]) == mesh_checksum(*r.levels[l].mesh));
    CHECK(s.meshes[l]->generation() == r.levels[l].mesh->generation());
    CHECK(s.bases[l] == r.levels[l].basis.Q);
    CHECK(s.records[l].E == r.records[l].E);
  }
  for (const char* f : {"config.txt", "records.csv", "diagnostics.csv", "summary.txt", "final_mesh.vtk",
                        "final_field_q1.vtk", "final_field_q3.vtk", "indicators_000.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  fs::remove_all(dir);
}

TEST_CASE("threshold study returns one row per theta") {
  const AfemConfig cfg = small_annulus(700);
  const std::vector<double> thetas{0.3, 0.6, 1.0};
  const auto rows = threshold_study(cfg, thetas);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].theta == thetas[i]);
    CHECK(rows[i].final_n1 > cfg.max_dofs);
    CHECK(rows[i].total_marked > 0);
  }
  CHECK(rows[0].levels > rows[2].levels);
}
