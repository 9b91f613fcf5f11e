#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hafem/domain.hpp"
#include "hafem/mesh.hpp"
#include "hafem/mesh_io.hpp"

using namespace hafem;

namespace {

struct Counts {
  int v, e, f;
};

// One uniform refinement adds a midpoint on every edge, splits each edge in
// two and adds three interior edges per triangle.
Counts refine_counts(Counts c) { return {c.v + c.e, 2 * c.e + 3 * c.f, 4 * c.f}; }

Counts counts(const Mesh& m) { return {m.num_vertices(), m.num_edges(), m.num_triangles()}; }

bool inside(const Mesh& m, Index t, const Vec2& p) {
  const auto b = barycentric(m, t, p);
  return b[0] > -1e-12 && b[1] > -1e-12 && b[2] > -1e-12;
}

}  // namespace

TEST_CASE("structured domains have the hand-counted Euler characteristic") {
  // Raw grids: unit square 4 vertices, 4 grid edges + 1 diagonal, 2 triangles.
  // Annulus: 4x4 grid points, 24 grid edges + 8 diagonals, 16 triangles.
  // Three holes: 8x4 grid points, 52 grid edges + 18 diagonals, 36 triangles.
  struct Case {
    DomainKind kind;
    Counts raw;
    int chi;
  };
  for (const Case& c : {Case{DomainKind::unit_square, {4, 5, 2}, 1},
                        Case{DomainKind::square_annulus, {16, 32, 16}, 0},
                        Case{DomainKind::three_hole, {32, 70, 36}, -2}}) {
    const auto mesh = create_domain({c.kind, 1, {}, {}});
    const Counts want = refine_counts(c.raw);
    const Counts got = counts(*mesh);
    CHECK(got.v == want.v);
    CHECK(got.e == want.e);
    CHECK(got.f == want.f);
    CHECK(mesh->euler_characteristic() == c.chi);
    CHECK(betti_number(*mesh) == 1 - c.chi);
    CHECK(mesh->is_conforming());
    CHECK(mesh->generation() == 0);
  }
}

TEST_CASE("betti number of the built-in domains and invariance under refinement") {
  CHECK(betti_number(*create_domain({DomainKind::unit_square, 2, {}, {}})) == 0);
  const auto annulus = create_domain({DomainKind::square_annulus, 1, {}, {}});
  CHECK(betti_number(*annulus) == 1);
  const auto three = create_domain({DomainKind::three_hole, 1, {}, {}});
  CHECK(betti_number(*three) == 3);
  CHECK(betti_number(*uniform_refine(three, 1)) == 3);
  std::vector<Index> some{0, 5, 17};
  CHECK(betti_number(*bisect(annulus, some).mesh) == 1);
}

TEST_CASE("degenerate polygons are rejected") {
  PolygonWithHoles flat;
  flat.outer = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  CHECK_THROWS_AS(structured_polygon_mesh(flat, 1), MeshError);

  PolygonWithHoles bowtie;
  bowtie.outer = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, -1}, {0, -1}};
  CHECK_THROWS_AS(structured_polygon_mesh(bowtie, 1), MeshError);

  PolygonWithHoles slanted;
  slanted.outer = {{0, 0}, {2, 0}, {2, 2}, {1, 1}};
  CHECK_THROWS_AS(structured_polygon_mesh(slanted, 1), MeshError);

  PolygonWithHoles outside;
  outside.outer = unit_square().outer;
  outside.holes = {{{3, 3}, {4, 3}, {4, 4}, {3, 4}}};
  CHECK_THROWS_AS(structured_polygon_mesh(outside, 1), MeshError);
}

TEST_CASE("explicit L-shaped polygon with a hole") {
  PolygonWithHoles p;
  p.outer = {{0, 0}, {4, 0}, {4, 2}, {2, 2}, {2, 4}, {0, 4}};
  p.holes = {{{0.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}, {1.5, 0.5}}};
  const auto mesh = structured_polygon_mesh(p, 2);
  CHECK(betti_number(*mesh) == 1);
  CHECK(mesh->total_area() == doctest::Approx(12.0 - 1.0));
}

TEST_CASE("reentrant corners of the annulus are the hole corners") {
  const auto mesh = create_domain({DomainKind::square_annulus, 1, {}, {}});
  auto corners = reentrant_corners(*mesh);
  REQUIRE(corners.size() == 4);
  for (const auto& c : corners) {
    CHECK((c.x() == 1.0 || c.x() == 2.0));
    CHECK((c.y() == 1.0 || c.y() == 2.0));
  }
  CHECK(reentrant_corners(*create_domain({DomainKind::three_hole, 1, {}, {}})).size() == 12);
}

TEST_CASE("bisect with an empty marked set is the identity") {
  const auto mesh = create_domain({DomainKind::square_annulus, 1, {}, {}});
  const auto r = bisect(mesh, {});
  CHECK(r.mesh->num_triangles() == mesh->num_triangles());
  CHECK(r.mesh->vertices() == mesh->vertices());
  CHECK(r.trace.refined.empty());
  CHECK(r.trace.bisections == 0);
}

TEST_CASE("bisecting everything at least doubles the triangle count") {
  const auto mesh = create_domain({DomainKind::three_hole, 1, {}, {}});
  std::vector<Index> all(mesh->num_triangles());
  std::iota(all.begin(), all.end(), 0);
  const auto r = bisect(mesh, all);
  CHECK(r.mesh->num_triangles() == 2 * mesh->num_triangles());
  CHECK(r.trace.refined.size() == all.size());
  CHECK(uniform_refine(mesh, 0) == mesh);
  CHECK(uniform_refine(mesh, 1)->num_triangles() == 4 * mesh->num_triangles());
  CHECK(uniform_refine(mesh, 2)->num_triangles() == 16 * mesh->num_triangles());
}

TEST_CASE("single interior triangle triggers closure") {
  const auto mesh = create_domain({DomainKind::square_annulus, 1, {}, {}});
  Index interior = -1;
  for (Index t = 0; t < mesh->num_triangles() && interior < 0; ++t) {
    const auto nb = mesh->neighbors(t);
    if (nb[0] >= 0 && nb[1] >= 0 && nb[2] >= 0) interior = t;
  }
  REQUIRE(interior >= 0);
  std::vector<Index> marked{interior};
  const auto r = bisect(mesh, marked);
  CHECK(r.trace.refined.size() >= 2);
  CHECK(std::binary_search(r.trace.refined.begin(), r.trace.refined.end(), interior));
  CHECK(r.mesh->is_conforming());
  CHECK(r.trace.bisections == r.mesh->num_triangles() - mesh->num_triangles());
}

TEST_CASE("random adaptive refinement keeps conformity, nestedness and shape") {
  MeshPtr mesh = create_domain({DomainKind::three_hole, 1, {}, {}});
  const MeshPtr root = mesh;
  const double angle0 = root->min_angle();
  std::mt19937 rng(7);
  for (int round = 0; round < 20; ++round) {
    // Concentrate refinement near (1,1) and sprinkle random marks.
    std::vector<Index> marked;
    for (Index t = 0; t < mesh->num_triangles(); ++t) {
      if ((mesh->barycenter(t) - Vec2(1, 1)).norm() < 2.0 * mesh->size(t) || rng() % 50 == 0) marked.push_back(t);
    }
    const auto r = bisect(mesh, marked);
    for (Index t : r.trace.marked) CHECK(std::binary_search(r.trace.refined.begin(), r.trace.refined.end(), t));
    CHECK(r.trace.bisections == r.mesh->num_triangles() - mesh->num_triangles());
    Index children = 0;
    for (const auto& c : r.trace.child_map) children += static_cast<Index>(c.size());
    CHECK(children == r.mesh->num_triangles());
    mesh = r.mesh;
    REQUIRE(mesh->is_conforming());
  }
  CHECK(mesh->generation() == 20);
  CHECK(mesh->min_angle() >= 0.5 * angle0);
  CHECK(betti_number(*mesh) == 3);
  const auto anc = ancestor_map(*root, *mesh);
  for (Index t = 0; t < mesh->num_triangles(); ++t) {
    for (Index v : mesh->triangle(t).v) CHECK(inside(*root, anc[t], mesh->vertex(v)));
  }
  CHECK(mesh->total_area() == doctest::Approx(root->total_area()).epsilon(1e-13));
}

TEST_CASE("ancestor_map rejects unrelated meshes") {
  const auto a = create_domain({DomainKind::square_annulus, 1, {}, {}});
  const auto b = create_domain({DomainKind::square_annulus, 1, {}, {}});
  CHECK_THROWS_AS(ancestor_map(*a, *uniform_refine(b, 1)), MeshError);
}

TEST_CASE("disconnected meshes are rejected by betti_number") {
  std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}};
  std::vector<Triangle> t{{{0, 1, 2}}, {{3, 4, 5}}};
  const Mesh m(v, t);
  CHECK_FALSE(m.is_connected());
  CHECK_THROWS_AS(betti_number(m), MeshError);
}

TEST_CASE("mesh file round trip with lineage") {
  const auto root = create_domain({DomainKind::square_annulus, 1, {}, {}});
  std::vector<Index> marked{3, 10};
  const auto fine = bisect(root, marked).mesh;
  std::stringstream ss;
  write_mesh(ss, *fine);
  const MeshFile f = read_mesh(ss);
  REQUIRE(f.has_lineage);
  CHECK(f.generation == 1);
  CHECK(f.mesh->num_triangles() == fine->num_triangles());
  for (Index t = 0; t < fine->num_triangles(); ++t) {
    CHECK(f.mesh->triangle(t).v == fine->triangle(t).v);
  }
  const auto reattached = attach_lineage(f, root);
  CHECK(ancestor_map(*root, *reattached) == fine->parent_map());
}

TEST_CASE("mesh reader honours the refinement-edge index and reports bad lines") {
  std::istringstream in(
      "VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 1 2 2\nBOUNDARY 3\n0 1 0\n1 2 0\n2 0 0\n");
  const MeshFile f = read_mesh(in);
  CHECK(f.mesh->triangle(0).v == std::array<Index, 3>{2, 0, 1});
  CHECK_FALSE(f.has_lineage);

  std::istringstream bad("VERTICES 3\n0 0\n1 0\nTRIANGLES 1\n");
  try {
    read_mesh(bad);
    FAIL("expected an exception");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}
