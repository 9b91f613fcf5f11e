#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hafem/config.hpp"
#include "hafem/domain.hpp"
#include "hafem/mesh_io.hpp"
#include "hafem/run_io.hpp"
#include "hafem/vtk.hpp"
#include "hafem/whitney.hpp"

using namespace hafem;
namespace fs = std::filesystem;

namespace {

Settings parse(const std::string& text) {
  std::istringstream is(text);
  return parse_settings(is, "test.cfg");
}

std::string error_of(const std::string& text) {
  try {
    make_afem_config(parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hafem_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config: sections, comments and defaults") {
  const Settings s = parse(
      "# experiment\n"
      "[domain]\n"
      "kind = three_hole   # three holes\n"
      "cells_per_unit = 2\n"
      "\n"
      "[afem]\n"
      "theta = 0.3\n"
      "max_dofs = 3e4\n"
      "basis_method = cut\n"
      "[output]\n"
      "dir = runs/a\n");
  const AfemConfig c = make_afem_config(s);
  CHECK(c.domain.kind == DomainKind::three_hole);
  CHECK(c.domain.cells_per_unit == 2);
  CHECK(c.theta == 0.3);
  CHECK(c.max_dofs == 30000);
  CHECK(c.basis_method == BasisMethod::cut);
  CHECK(c.reference_method == BasisMethod::cut);
  CHECK(c.gamma == 0.1);
  CHECK(c.out_dir == "runs/a");

  const AfemConfig d = make_afem_config({});
  CHECK(d.domain.kind == DomainKind::square_annulus);
  CHECK(d.theta == 0.5);
  CHECK(d.max_dofs == 30000);
  CHECK(d.tol == 0.0);
}

TEST_CASE("config: malformed input names the line") {
  CHECK(error_of("[afem]\ntheta = 0.5\nmax_dofs\n").find("test.cfg:3") != std::string::npos);
  CHECK(error_of("[afem]\nthetta = 0.5\n").find("unknown key 'afem.thetta'") != std::string::npos);
  CHECK(error_of("[solver]\n").find("unknown section") != std::string::npos);
  CHECK(error_of("[afem\n").find("test.cfg:1") != std::string::npos);
  CHECK(error_of("[afem]\ntheta = half\n").find("expected a number") != std::string::npos);
  CHECK(error_of("[afem]\nmax_dofs = 12.5\n").find("integer") != std::string::npos);
  CHECK(error_of("[afem]\ntheta = 1.5\n").find("theta") != std::string::npos);
  CHECK(error_of("[domain]\nkind = torus\n").find("torus") != std::string::npos);
  CHECK(error_of("[domain]\nkind = polygon\n").find("domain.outer") != std::string::npos);
  CHECK(error_of("[domain]\nkind = polygon\nouter = 0 0, 1\n").find("bad point") != std::string::npos);
  CHECK(error_of("[afem]\nbasis_method = svd\n").find("svd") != std::string::npos);
}

TEST_CASE("config: overrides") {
  Settings s = parse("[afem]\ntheta = 0.5\n");
  apply_override(s, "afem.theta=0.25");
  apply_override(s, " domain.kind = square ");
  const AfemConfig c = make_afem_config(s);
  CHECK(c.theta == 0.25);
  CHECK(c.domain.kind == DomainKind::unit_square);
  CHECK_THROWS_AS(apply_override(s, "afem.theta"), ConfigError);
  CHECK_THROWS_AS(apply_override(s, "theta=0.1"), ConfigError);
}

TEST_CASE("config: formatted configuration parses back to the same values") {
  const Settings s = parse(
      "[domain]\nkind = polygon\ncells_per_unit = 2\n"
      "outer = 0 0, 4 0, 4 3, 0 3\nholes = 1 1, 2 1, 2 2, 1 2; 2.5 0.5, 3.5 0.5, 3.5 1.5, 2.5 1.5\n"
      "[afem]\ntheta = 0.35\ntol = 1e-3\ngamma = 0.01\nmax_levels = 17\nreference_extra_refines = 3\n"
      "[output]\ndir = /tmp/x\n");
  const AfemConfig a = make_afem_config(s);
  REQUIRE(a.domain.polygon.holes.size() == 2);
  const AfemConfig b = make_afem_config(parse(format_config(a)));
  CHECK(format_config(b) == format_config(a));
  CHECK(b.domain.polygon.outer == a.domain.polygon.outer);
  CHECK(b.domain.polygon.holes == a.domain.polygon.holes);
  CHECK(b.theta == a.theta);
  CHECK(b.tol == a.tol);
  CHECK(b.gamma == a.gamma);
  CHECK(b.max_levels == 17);
  CHECK(b.reference_extra_refines == 3);
  CHECK(b.out_dir == a.out_dir);
  CHECK(betti_number(*create_domain(b.domain)) == 2);
}

TEST_CASE("basis and records CSV round trips are exact") {
  const fs::path dir = scratch("csv");
  Eigen::MatrixXd Q(5, 2);
  Q << 1.0 / 3, -2e-17, 0.1, 1e300, -7.25, 0, 3.14159265358979, 2.0 / 7, -1e-310, 42;
  write_basis_csv(dir / "b.csv", Q);
  CHECK(read_basis_csv(dir / "b.csv") == Q);
  std::ifstream header(dir / "b.csv");
  std::string first;
  std::getline(header, first);
  CHECK(first == "edge,q1,q2");

  std::vector<ConvergenceRecord> recs(2);
  recs[0] = {0, 64, 112, 1, 0.28, 0.87, 0.83, 0.95, 1.04, 0.79, 6, 12, 0.59};
  recs[1] = {1, 76, 130, 1, 1.0 / 3, 0.78, 0.75, 0.96, 1.03, std::nan(""), 0, 0, 0.64};
  write_records_csv(dir / "r.csv", recs);
  const auto back = read_records_csv(dir / "r.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].E == recs[1].E);
  CHECK(std::isnan(back[1].contraction_ratio));
  CHECK(back[0].refined_count == 12);
  CHECK(back[0].linf_max == 0.59);

  std::ofstream(dir / "bad.csv") << "edge,q1\n0,1\n2,1\n";
  CHECK_THROWS_AS(read_basis_csv(dir / "bad.csv"), RunIoError);
  std::ofstream(dir / "bad2.csv") << "level,E\n";
  CHECK_THROWS_AS(read_records_csv(dir / "bad2.csv"), RunIoError);
  fs::remove_all(dir);
}

TEST_CASE("records header has the documented column order") {
  std::ostringstream os;
  write_records_csv(os, {});
  CHECK(os.str() ==
        "level,n_triangles,n1,beta,E,eta_total,mu_total,P_norm,P_inv_norm,contraction_ratio,marked_count,"
        "refined_count,linf_max\n");
}

TEST_CASE("indicators CSV: one row per triangle, mu NaN when absent") {
  ErrorIndicators e, m;
  e.per_element = {0.5, 0.25, 0.125};
  std::ostringstream os;
  write_indicators_csv(os, 4, e, m);
  const auto lines = lines_of(os.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "level,triangle_id,eta,mu");
  CHECK(lines[2] == "4,1,0.25,nan");
  m.per_element = {0.4, 0.2, 0.1};
  std::ostringstream os2;
  write_indicators_csv(os2, 4, e, m);
  CHECK(lines_of(os2.str())[3] == "4,2,0.125,0.10000000000000001");
}

TEST_CASE("legacy VTK output") {
  const MeshPtr mesh = create_domain(DomainSpec{});
  const Index nt = mesh->num_triangles(), nv = mesh->num_vertices();
  const EdgeField f = interpolate(mesh, [](const Vec2& p) { return Vec2(1.0 - p.y(), 2.0 + p.x()); });
  VtkCellData data;
  data.vectors.emplace_back("q1", barycenter_values(*mesh, f.coeffs));
  data.scalars.emplace_back("eta", std::vector<double>(nt, 0.5));
  std::ostringstream os;
  write_vtk(os, *mesh, "test", data);
  const auto lines = lines_of(os.str());
  CHECK(lines[0] == "# vtk DataFile Version 3.0");
  CHECK(lines[1] == "test");
  CHECK(lines[2] == "ASCII");
  CHECK(lines[3] == "DATASET UNSTRUCTURED_GRID");
  CHECK(lines[4] == "POINTS " + std::to_string(nv) + " double");
  std::size_t i = 5 + nv;
  CHECK(lines[i] == "CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt));
  for (Index t = 0; t < nt; ++t) {
    std::istringstream cell(lines[i + 1 + t]);
    int n;
    Index a, b, c;
    cell >> n >> a >> b >> c;
    CHECK(n == 3);
    const auto& tri = mesh->triangle(t);
    CHECK((a == tri.v[0] && b == tri.v[1] && c == tri.v[2]));
  }
  i += 1 + nt;
  CHECK(lines[i] == "CELL_TYPES " + std::to_string(nt));
  for (Index t = 0; t < nt; ++t) CHECK(lines[i + 1 + t] == "5");
  i += 1 + nt;
  CHECK(lines[i] == "CELL_DATA " + std::to_string(nt));
  CHECK(lines[i + 1] == "VECTORS q1 double");
  for (Index t = 0; t < nt; ++t) {
    const auto& tri = mesh->triangle(t);
    const Vec2 c = (mesh->vertex(tri.v[0]) + mesh->vertex(tri.v[1]) + mesh->vertex(tri.v[2])) / 3.0;
    std::istringstream row(lines[i + 2 + t]);
    double x, y, z;
    row >> x >> y >> z;
    CHECK(x == doctest::Approx(1.0 - c.y()).epsilon(1e-12));
    CHECK(y == doctest::Approx(2.0 + c.x()).epsilon(1e-12));
    CHECK(z == 0.0);
  }
  i += 2 + nt;
  CHECK(lines[i] == "SCALARS eta double 1");
  CHECK(lines[i + 1] == "LOOKUP_TABLE default");
  CHECK(lines.size() == i + 2 + nt);

  data.vectors[0].second.pop_back();
  std::ostringstream bad;
  CHECK_THROWS_AS(write_vtk(bad, *mesh, "x", data), MeshError);
}

TEST_CASE("mesh checksum") {
  const MeshPtr a = create_domain(DomainSpec{});
  const MeshPtr b = create_domain(DomainSpec{});
  CHECK(mesh_checksum(*a) == mesh_checksum(*b));
  CHECK(mesh_checksum(*a).size() == 16);
  CHECK(mesh_checksum(*a) != mesh_checksum(*bisect(a, std::vector<Index>{0}).mesh));
}

TEST_CASE("loading a run lists the missing artifacts") {
  const fs::path dir = scratch("load");
  CHECK_THROWS_WITH_AS(load_run(dir / "nope"), doctest::Contains("does not exist"), RunIoError);
  CHECK_THROWS_WITH_AS(load_run(dir), doctest::Contains("level_000.mesh"), RunIoError);

  const MeshPtr m0 = create_domain(DomainSpec{});
  const MeshPtr m1 = bisect(m0, std::vector<Index>{0, 5}).mesh;
  write_mesh(dir / "level_000.mesh", *m0);
  write_mesh(dir / "level_001.mesh", *m1);
  write_basis_csv(dir / "basis_000.csv", Eigen::MatrixXd::Ones(m0->num_edges(), 1));
  CHECK_THROWS_WITH_AS(load_run(dir), doctest::Contains("basis_001.csv"), RunIoError);
  write_basis_csv(dir / "basis_001.csv", Eigen::MatrixXd::Ones(m0->num_edges(), 1));
  CHECK_THROWS_WITH_AS(load_run(dir), doctest::Contains("row count"), RunIoError);
  write_basis_csv(dir / "basis_001.csv", Eigen::MatrixXd::Ones(m1->num_edges(), 1));
  const StoredRun s = load_run(dir);
  REQUIRE(s.meshes.size() == 2);
  CHECK(s.meshes[1]->parent() == s.meshes[0]);
  CHECK(ancestor_map(*s.meshes[0], *s.meshes[1]).size() == static_cast<std::size_t>(m1->num_triangles()));
  CHECK(level_file("level_", 7, ".mesh") == "level_007.mesh");
  fs::remove_all(dir);
}
