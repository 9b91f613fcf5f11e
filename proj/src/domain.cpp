#include "hafem/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hafem/mesh_io.hpp"

namespace hafem {

namespace {

double ring_area(const std::vector<Vec2>& ring) {
  double s = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % ring.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

bool point_in_ring(const std::vector<Vec2>& ring, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

void validate_polygon(const PolygonWithHoles& poly, double h) {
  std::vector<const std::vector<Vec2>*> rings{&poly.outer};
  for (const auto& hole : poly.holes) rings.push_back(&hole);
  for (const auto* ring : rings) {
    if (ring->size() < 4) throw MeshError("polygon ring needs at least 4 vertices");
    if (std::abs(ring_area(*ring)) <= 0.0) throw MeshError("polygon ring has zero area");
    for (std::size_t i = 0; i < ring->size(); ++i) {
      const Vec2& p = (*ring)[i];
      const Vec2& q = (*ring)[(i + 1) % ring->size()];
      if (p == q) throw MeshError("polygon ring has a repeated vertex");
      if (p.x() != q.x() && p.y() != q.y()) throw MeshError("polygon edge is not axis-aligned");
      for (double c : {p.x(), p.y()}) {
        if (std::abs(c / h - std::round(c / h)) > 1e-9) {
          throw MeshError("polygon vertex is not on the structured grid");
        }
      }
    }
  }
  // Pairwise segment intersections, ignoring the shared endpoint of
  // consecutive edges of the same ring.
  for (std::size_t r = 0; r < rings.size(); ++r) {
    for (std::size_t s = r; s < rings.size(); ++s) {
      const auto& R = *rings[r];
      const auto& S = *rings[s];
      for (std::size_t i = 0; i < R.size(); ++i) {
        for (std::size_t j = (r == s ? i + 1 : 0); j < S.size(); ++j) {
          if (r == s && (j == i + 1 || (i == 0 && j == R.size() - 1))) continue;
          if (segments_intersect(R[i], R[(i + 1) % R.size()], S[j], S[(j + 1) % S.size()])) {
            throw MeshError("polygon is self-intersecting");
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < poly.holes.size(); ++k) {
    if (!point_in_ring(poly.outer, poly.holes[k].front())) throw MeshError("hole lies outside the outer boundary");
    for (std::size_t l = 0; l < poly.holes.size(); ++l) {
      if (k != l && point_in_ring(poly.holes[l], poly.holes[k].front())) throw MeshError("nested holes");
    }
  }
}

std::vector<Vec2> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace

DomainKind parse_domain_kind(const std::string& name) {
  if (name == "square" || name == "unit_square") return DomainKind::unit_square;
  if (name == "annulus" || name == "square_annulus") return DomainKind::square_annulus;
  if (name == "three_hole" || name == "three-hole") return DomainKind::three_hole;
  if (name == "polygon") return DomainKind::polygon;
  if (name == "file") return DomainKind::file;
  throw MeshError("unknown domain kind '" + name + "'");
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::unit_square: return "square";
    case DomainKind::square_annulus: return "annulus";
    case DomainKind::three_hole: return "three_hole";
    case DomainKind::polygon: return "polygon";
    case DomainKind::file: return "file";
  }
  return "unknown";
}

PolygonWithHoles unit_square() { return {rect(0, 0, 1, 1), {}}; }

PolygonWithHoles square_annulus() { return {rect(0, 0, 3, 3), {rect(1, 1, 2, 2)}}; }

PolygonWithHoles three_hole_rectangle() {
  return {rect(0, 0, 7, 3), {rect(1, 1, 2, 2), rect(3, 1, 4, 2), rect(5, 1, 6, 2)}};
}

MeshPtr structured_polygon_mesh(const PolygonWithHoles& poly, int cells_per_unit) {
  if (cells_per_unit < 1) throw MeshError("cells_per_unit must be positive");
  const double h = 1.0 / cells_per_unit;
  validate_polygon(poly, h);

  double xmin = poly.outer[0].x(), xmax = xmin, ymin = poly.outer[0].y(), ymax = ymin;
  for (const auto& p : poly.outer) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const long i0 = std::lround(xmin / h), i1 = std::lround(xmax / h);
  const long j0 = std::lround(ymin / h), j1 = std::lround(ymax / h);

  std::vector<Vec2> verts;
  std::map<std::pair<long, long>, Index> node;
  auto vid = [&](long i, long j) {
    auto [it, inserted] = node.try_emplace({i, j}, static_cast<Index>(verts.size()));
    if (inserted) verts.emplace_back(i * h, j * h);
    return it->second;
  };

  std::vector<Triangle> tris;
  for (long j = j0; j < j1; ++j) {
    for (long i = i0; i < i1; ++i) {
      const Vec2 c((i + 0.5) * h, (j + 0.5) * h);
      if (!point_in_ring(poly.outer, c)) continue;
      bool in_hole = false;
      for (const auto& hole : poly.holes) in_hole = in_hole || point_in_ring(hole, c);
      if (in_hole) continue;
      const Index p00 = vid(i, j), p10 = vid(i + 1, j), p11 = vid(i + 1, j + 1), p01 = vid(i, j + 1);
      tris.push_back({{p10, p11, p00}});
      tris.push_back({{p01, p00, p11}});
    }
  }
  if (tris.empty()) throw MeshError("polygon contains no grid cells");

  auto raw = std::make_shared<Mesh>(std::move(verts), std::move(tris));
  if (!raw->is_connected()) throw MeshError("polygon interior is not connected at this resolution");
  const auto refined = uniform_refine(raw, 1);
  const auto segments = refined->boundary_segments();
  return std::make_shared<Mesh>(refined->vertices(), refined->triangles(), segments);
}

MeshPtr create_domain(const DomainSpec& spec) {
  switch (spec.kind) {
    case DomainKind::unit_square: return structured_polygon_mesh(unit_square(), spec.cells_per_unit);
    case DomainKind::square_annulus: return structured_polygon_mesh(square_annulus(), spec.cells_per_unit);
    case DomainKind::three_hole: return structured_polygon_mesh(three_hole_rectangle(), spec.cells_per_unit);
    case DomainKind::polygon: return structured_polygon_mesh(spec.polygon, spec.cells_per_unit);
    case DomainKind::file: {
      auto file = read_mesh(spec.mesh_file);
      return file.mesh;
    }
  }
  throw MeshError("unhandled domain kind");
}

std::vector<Vec2> reentrant_corners(const Mesh& mesh) {
  std::vector<Vec2> out;
  for (const auto& loop : mesh.boundary_loops()) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& p = mesh.vertex(loop[(i + n - 1) % n]);
      const Vec2& v = mesh.vertex(loop[i]);
      const Vec2& q = mesh.vertex(loop[(i + 1) % n]);
      const Vec2 d1 = v - p, d2 = q - v;
      const double cross = d1.x() * d2.y() - d1.y() * d2.x();
      if (cross < -1e-12 * d1.norm() * d2.norm()) out.push_back(v);
    }
  }
  return out;
}

}  // namespace hafem
