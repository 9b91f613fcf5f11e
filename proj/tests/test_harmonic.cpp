#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "hafem/domain.hpp"
#include "hafem/harmonic.hpp"

using namespace hafem;

namespace {

MeshPtr graded(DomainKind kind, int rounds) {
  MeshPtr m = create_domain({kind, 1, {}, {}});
  const auto corners = reentrant_corners(*m);
  for (int r = 0; r < rounds; ++r) {
    std::vector<Index> marked;
    for (Index t = 0; t < m->num_triangles(); ++t) {
      for (const auto& c : corners) {
        if ((m->barycenter(t) - c).norm() < 1.5 * m->size(t)) {
          marked.push_back(t);
          break;
        }
      }
    }
    m = bisect(m, marked).mesh;
  }
  return m;
}

// Circulation of an edge field along a closed vertex loop.
double circulation(const Mesh& m, const Eigen::VectorXd& c, const std::vector<Index>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Index a = loop[i], b = loop[(i + 1) % loop.size()];
    for (const auto& e : m.edges()) {
      if (e.a == std::min(a, b) && e.b == std::max(a, b)) {
        s += (a < b ? 1.0 : -1.0) * c[&e - &m.edges()[0]];
        break;
      }
    }
  }
  return s;
}

}  // namespace

TEST_CASE("simply connected domain has an empty basis") {
  const auto s = build_spaces(create_domain({DomainKind::unit_square, 2, {}, {}}));
  const auto b = compute_basis(s);
  CHECK(b.beta == 0);
  CHECK(b.Q.cols() == 0);
  CHECK(std::isinf(b.sigma_gap));
  CHECK(cutting_basis(s).Q.cols() == 0);
}

TEST_CASE("kernel basis on the annulus and three-hole domains") {
  for (auto [kind, beta] : {std::pair{DomainKind::square_annulus, 1}, std::pair{DomainKind::three_hole, 3}}) {
    for (int rounds : {0, 4, 12}) {
      const auto s = build_spaces(graded(kind, rounds));
      const auto b = compute_basis(s);
      CHECK(b.beta == beta);
      CHECK(b.Q.cols() == beta);
      CHECK(b.sigma_gap >= 1e6);
      const auto r = harmonic_residual(s, b.Q);
      CHECK(r.orthonormality < 1e-10);
      CHECK(r.gradient < 1e-9);
      CHECK(r.rot < 1e-9);
    }
  }
}

TEST_CASE("kernel basis is deterministic") {
  const auto s = build_spaces(graded(DomainKind::three_hole, 3));
  const auto a = compute_basis(s), b = compute_basis(s);
  CHECK((a.Q - b.Q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cuts are disjoint edge paths from each hole to the outer boundary") {
  const auto mesh = graded(DomainKind::three_hole, 3);
  const auto loops = mesh->boundary_loops();
  const auto cuts = build_cuts(*mesh);
  REQUIRE(cuts.size() == 3);
  std::vector<int> seen(mesh->num_vertices(), 0);
  for (const auto& cut : cuts) {
    const auto& hole = loops[cut.hole];
    CHECK(std::find(hole.begin(), hole.end(), cut.path.front()) != hole.end());
    CHECK(std::find(loops[0].begin(), loops[0].end(), cut.path.back()) != loops[0].end());
    for (std::size_t i = 0; i + 1 < cut.path.size(); ++i) {
      const Index a = std::min(cut.path[i], cut.path[i + 1]), b = std::max(cut.path[i], cut.path[i + 1]);
      bool found = false;
      for (const auto& e : mesh->edges()) found = found || (e.a == a && e.b == b);
      CHECK(found);
    }
    for (Index v : cut.path) ++seen[v];
  }
  CHECK(*std::max_element(seen.begin(), seen.end()) == 1);
}

TEST_CASE("jump fields are closed with unit period around their own hole") {
  const auto mesh = graded(DomainKind::three_hole, 2);
  const auto s = build_spaces(mesh);
  const auto loops = mesh->boundary_loops();
  const auto cuts = build_cuts(*mesh);
  for (const auto& cut : cuts) {
    const Eigen::VectorXd z = cut_jump_field(*mesh, cut);
    CHECK((s.Rt * z).cwiseAbs().maxCoeff() <= 1e-9);
    for (std::size_t l = 1; l < loops.size(); ++l) {
      const double c = circulation(*mesh, z, loops[l]);
      CHECK(std::abs(c) == doctest::Approx(static_cast<int>(l) == cut.hole ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("harmonic fields have matching periods on the two annulus boundaries") {
  const auto mesh = graded(DomainKind::square_annulus, 5);
  const auto s = build_spaces(mesh);
  const auto b = compute_basis(s);
  const auto loops = mesh->boundary_loops();
  const double outer = circulation(*mesh, b.Q.col(0), loops[0]);
  const double inner = circulation(*mesh, b.Q.col(0), loops[1]);
  CHECK(std::abs(outer) > 0.1);
  // Loops run with the domain on the left, so the hole loop is reversed.
  CHECK(outer == doctest::Approx(-inner).epsilon(1e-9));
}

TEST_CASE("cutting basis spans the kernel basis") {
  for (auto kind : {DomainKind::square_annulus, DomainKind::three_hole}) {
    for (int rounds : {0, 3, 8, 14}) {
      const auto s = build_spaces(graded(kind, rounds));
      const auto a = compute_basis(s);
      const auto c = cutting_basis(s);
      CHECK(std::isnan(c.sigma_gap));
      CHECK(harmonic_residual(s, c.Q).orthonormality < 1e-10);
      const double g1 = span_gap(a.Q, c.Q, s.M1), g2 = span_gap(c.Q, a.Q, s.M1);
      CHECK(g1 < 1e-8);
      CHECK(std::abs(g1 - g2) < 1e-10);
    }
  }
}

TEST_CASE("project_field") {
  const auto mesh = graded(DomainKind::three_hole, 2);
  const auto s = build_spaces(mesh);
  const auto b = compute_basis(s);
  for (int j = 0; j < 3; ++j) {
    const auto p = project_field(EdgeField{mesh, b.Q.col(j)}, b, s);
    CHECK((p.coefficients - Eigen::Vector3d::Unit(j)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.residual.coeffs.cwiseAbs().maxCoeff() < 1e-12);
  }
  std::mt19937 rng(5);
  std::normal_distribution<double> N;
  Eigen::VectorXd tau(s.n0);
  for (auto& x : tau) x = N(rng);
  const auto pg = project_field(EdgeField{mesh, s.G * tau}, b, s);
  CHECK(pg.coefficients.cwiseAbs().maxCoeff() < 1e-9 * (s.G * tau).cwiseAbs().maxCoeff());

  Eigen::VectorXd f(s.n1);
  for (auto& x : f) x = N(rng);
  const auto pf = project_field(EdgeField{mesh, f}, b, s);
  const Eigen::VectorXd qc = b.Q * pf.coefficients;
  const double total = f.dot(s.M1 * f);
  const double parts = qc.dot(s.M1 * qc) + pf.residual.coeffs.dot(s.M1 * pf.residual.coeffs);
  CHECK(std::abs(total - parts) <= 1e-10 * total);
  CHECK((b.Q.transpose() * (s.M1 * pf.residual.coeffs)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cross_gram") {
  const auto mesh = graded(DomainKind::three_hole, 2);
  const auto s = build_spaces(mesh);
  const auto b = compute_basis(s);
  const Prolongation same(mesh, mesh);
  CHECK((cross_gram(b, s, b, same) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);

  HarmonicBasis permuted = b;
  permuted.Q.col(0) = b.Q.col(2);
  permuted.Q.col(1) = -b.Q.col(0);
  permuted.Q.col(2) = b.Q.col(1);
  Eigen::Matrix3d want;
  want << 0, -1, 0, 0, 0, 1, 1, 0, 0;
  CHECK((cross_gram(b, s, permuted, same) - want).cwiseAbs().maxCoeff() < 1e-12);

  const auto coarse = create_domain({DomainKind::square_annulus, 1, {}, {}});
  const auto fine = uniform_refine(coarse, 2);
  const auto sc = build_spaces(coarse), sf = build_spaces(fine);
  const auto bc = compute_basis(sc), bf = compute_basis(sf);
  const Eigen::MatrixXd M = cross_gram(bf, sf, bc, Prolongation(coarse, fine));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  CHECK(svd.singularValues().minCoeff() > 0.0);
  CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-12);

  CHECK_THROWS_AS(cross_gram(bf, sf, b, Prolongation(mesh, mesh)), SolverError);
}
