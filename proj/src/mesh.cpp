#include "hafem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <tuple>

namespace hafem {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

double signed_area(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

double loop_signed_area(const std::vector<Vec2>& pts, const std::vector<Index>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = pts[loop[i]];
    const Vec2& q = pts[loop[(i + 1) % loop.size()]];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
           std::span<const BoundarySegment> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), id_(next_mesh_id++) {
  if (triangles_.empty()) throw MeshError("mesh has no triangles");
  const Index nv = num_vertices();
  for (const auto& t : triangles_) {
    for (Index v : t.v) {
      if (v < 0 || v >= nv) throw MeshError("triangle references a missing vertex");
    }
    if (t.v[0] == t.v[1] || t.v[1] == t.v[2] || t.v[0] == t.v[2]) {
      throw MeshError("triangle with repeated vertex");
    }
    if (!(signed_area(vertices_[t.v[0]], vertices_[t.v[1]], vertices_[t.v[2]]) > 0.0)) {
      throw MeshError("triangle is not positively oriented (area <= 0)");
    }
  }
  build_edges(boundary);
}

void Mesh::build_edges(std::span<const BoundarySegment> boundary) {
  // (key, triangle, local edge), sorted so that edge ids follow (a, b) order.
  std::vector<std::tuple<std::uint64_t, Index, int>> half;
  half.reserve(3 * triangles_.size());
  for (Index t = 0; t < num_triangles(); ++t) {
    const auto& v = triangles_[t].v;
    for (int i = 0; i < 3; ++i) {
      half.emplace_back(edge_key(v[(i + 1) % 3], v[(i + 2) % 3]), t, i);
    }
  }
  std::sort(half.begin(), half.end());

  edges_.clear();
  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && std::get<0>(half[j]) == std::get<0>(half[i])) ++j;
    if (j - i > 2) throw MeshError("edge shared by more than two triangles");
    const std::uint64_t key = std::get<0>(half[i]);
    Edge e;
    e.a = static_cast<Index>(key >> 32);
    e.b = static_cast<Index>(key & 0xffffffffu);
    const auto id = static_cast<Index>(edges_.size());
    for (std::size_t k = i; k < j; ++k) {
      e.tri[k - i] = std::get<1>(half[k]);
      tri_edges_[std::get<1>(half[k])][std::get<2>(half[k])] = id;
    }
    if (j - i == 2) {
      // The two triangles must traverse a shared edge in opposite directions.
      auto dir = [&](Index t) {
        const auto& v = triangles_[t].v;
        for (int l = 0; l < 3; ++l) {
          if (v[l] == e.a && v[(l + 1) % 3] == e.b) return 1;
        }
        return -1;
      };
      if (dir(e.tri[0]) == dir(e.tri[1])) throw MeshError("inconsistent triangle orientation");
    }
    edges_.push_back(e);
    i = j;
  }

  bool all_listed = !boundary.empty();
  if (!boundary.empty()) {
    std::vector<std::pair<std::uint64_t, int>> listed;
    listed.reserve(boundary.size());
    for (const auto& s : boundary) listed.emplace_back(edge_key(s.a, s.b), s.marker);
    std::sort(listed.begin(), listed.end());
    for (auto& e : edges_) {
      if (!e.is_boundary()) continue;
      auto it = std::lower_bound(listed.begin(), listed.end(), std::make_pair(edge_key(e.a, e.b), -1 << 30));
      if (it != listed.end() && it->first == edge_key(e.a, e.b)) {
        e.marker = it->second;
      } else {
        all_listed = false;
      }
    }
    // Listed segments must be boundary edges of the triangulation.
    for (const auto& entry : listed) {
      const Index a = static_cast<Index>(entry.first >> 32);
      const Index b = static_cast<Index>(entry.first & 0xffffffffu);
      auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(a, b),
                                 [](const Edge& e, const std::pair<Index, Index>& k) {
                                   return std::tie(e.a, e.b) < std::tie(k.first, k.second);
                                 });
      if (it == edges_.end() || it->a != a || it->b != b || !it->is_boundary()) {
        throw MeshError("boundary segment is not a boundary edge of the mesh");
      }
    }
  }
  if (!all_listed) assign_loop_markers();
}

void Mesh::assign_loop_markers() {
  const auto loops = boundary_loops();
  std::vector<std::uint64_t> keys;
  std::vector<int> markers;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const auto& loop = loops[l];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      keys.push_back(edge_key(loop[i], loop[(i + 1) % loop.size()]));
      markers.push_back(static_cast<int>(l));
    }
  }
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return keys[x] < keys[y]; });
  for (auto& e : edges_) {
    if (!e.is_boundary() || e.marker >= 0) continue;
    const auto k = edge_key(e.a, e.b);
    auto it = std::lower_bound(order.begin(), order.end(), k,
                               [&](std::size_t x, std::uint64_t key) { return keys[x] < key; });
    if (it != order.end() && keys[*it] == k) e.marker = markers[*it];
  }
}

double Mesh::area(Index t) const {
  const auto& v = triangles_[t].v;
  return signed_area(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]);
}

double Mesh::size(Index t) const { return std::sqrt(area(t)); }

Vec2 Mesh::barycenter(Index t) const {
  const auto& v = triangles_[t].v;
  return (vertices_[v[0]] + vertices_[v[1]] + vertices_[v[2]]) / 3.0;
}

double Mesh::min_angle(Index t) const {
  const auto& v = triangles_[t].v;
  double m = std::numbers::pi;
  for (int i = 0; i < 3; ++i) {
    const Vec2 p = vertices_[v[i]];
    const Vec2 u = vertices_[v[(i + 1) % 3]] - p;
    const Vec2 w = vertices_[v[(i + 2) % 3]] - p;
    const double c = u.dot(w) / (u.norm() * w.norm());
    m = std::min(m, std::acos(std::clamp(c, -1.0, 1.0)));
  }
  return m;
}

double Mesh::min_angle() const {
  double m = std::numbers::pi;
  for (Index t = 0; t < num_triangles(); ++t) m = std::min(m, min_angle(t));
  return m;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (Index t = 0; t < num_triangles(); ++t) s += area(t);
  return s;
}

std::array<Index, 3> Mesh::neighbors(Index t) const {
  std::array<Index, 3> n{};
  for (int i = 0; i < 3; ++i) {
    const Edge& e = edges_[tri_edges_[t][i]];
    n[i] = e.tri[0] == t ? e.tri[1] : e.tri[0];
  }
  return n;
}

std::vector<bool> Mesh::boundary_vertices() const {
  std::vector<bool> b(vertices_.size(), false);
  for (const auto& e : edges_) {
    if (e.is_boundary()) b[e.a] = b[e.b] = true;
  }
  return b;
}

std::vector<std::vector<Index>> Mesh::boundary_loops() const {
  // Directed boundary edges with the domain on the left.
  std::vector<Index> next(vertices_.size(), -1);
  std::vector<Index> starts;
  for (const auto& e : edges_) {
    if (!e.is_boundary()) continue;
    const auto& v = triangles_[e.tri[0]].v;
    Index from = e.a, to = e.b;
    for (int l = 0; l < 3; ++l) {
      if (v[l] == e.b && v[(l + 1) % 3] == e.a) std::swap(from, to);
    }
    if (next[from] >= 0) throw MeshError("non-manifold boundary vertex");
    next[from] = to;
    starts.push_back(from);
  }
  std::sort(starts.begin(), starts.end());
  std::vector<bool> seen(vertices_.size(), false);
  std::vector<std::vector<Index>> loops;
  for (Index s : starts) {
    if (seen[s]) continue;
    std::vector<Index> loop;
    Index v = s;
    while (!seen[v]) {
      seen[v] = true;
      loop.push_back(v);
      v = next[v];
      if (v < 0) throw MeshError("open boundary chain");
    }
    if (v != s) throw MeshError("boundary chain does not close");
    loops.push_back(std::move(loop));
  }
  if (loops.empty()) return loops;
  // Outer loop: counter-clockwise with largest area.
  std::size_t outer = 0;
  double best = -1.0;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const double a = loop_signed_area(vertices_, loops[l]);
    if (a > best) {
      best = a;
      outer = l;
    }
  }
  std::rotate(loops.begin(), loops.begin() + static_cast<std::ptrdiff_t>(outer),
              loops.begin() + static_cast<std::ptrdiff_t>(outer) + 1);
  std::sort(loops.begin() + 1, loops.end(), [](const auto& x, const auto& y) {
    return *std::min_element(x.begin(), x.end()) < *std::min_element(y.begin(), y.end());
  });
  return loops;
}

bool Mesh::is_connected() const {
  std::vector<bool> seen(triangles_.size(), false);
  std::vector<Index> stack{0};
  seen[0] = true;
  Index count = 1;
  while (!stack.empty()) {
    const Index t = stack.back();
    stack.pop_back();
    for (Index n : neighbors(t)) {
      if (n >= 0 && !seen[n]) {
        seen[n] = true;
        ++count;
        stack.push_back(n);
      }
    }
  }
  return count == num_triangles();
}

bool Mesh::is_conforming() const {
  std::vector<int> degree(vertices_.size(), 0);
  for (const auto& e : edges_) {
    if (e.is_boundary()) {
      ++degree[e.a];
      ++degree[e.b];
    }
  }
  std::vector<Index> bverts;
  for (Index v = 0; v < num_vertices(); ++v) {
    if (degree[v] != 0 && degree[v] != 2) return false;
    if (degree[v] == 2) bverts.push_back(v);
  }
  for (const auto& e : edges_) {
    if (!e.is_boundary()) continue;
    const Vec2 p = vertices_[e.a], q = vertices_[e.b];
    const Vec2 d = q - p;
    const double len2 = d.squaredNorm();
    for (Index v : bverts) {
      if (v == e.a || v == e.b) continue;
      const Vec2 r = vertices_[v] - p;
      const double cross = d.x() * r.y() - d.y() * r.x();
      const double s = d.dot(r) / len2;
      if (std::abs(cross) <= 1e-12 * len2 && s > 1e-12 && s < 1.0 - 1e-12) return false;
    }
  }
  return true;
}

int Mesh::euler_characteristic() const {
  std::vector<bool> used(vertices_.size(), false);
  for (const auto& t : triangles_) {
    for (Index v : t.v) used[v] = true;
  }
  const auto nv = std::count(used.begin(), used.end(), true);
  return static_cast<int>(nv) - num_edges() + num_triangles();
}

void Mesh::set_lineage(std::shared_ptr<const Mesh> parent, std::vector<Index> parent_map) {
  if (parent && parent_map.size() != triangles_.size()) {
    throw MeshError("parent map size does not match triangle count");
  }
  if (parent) {
    for (Index p : parent_map) {
      if (p < 0 || p >= parent->num_triangles()) throw MeshError("parent map index out of range");
    }
    generation_ = parent->generation() + 1;
  }
  parent_ = std::move(parent);
  parent_map_ = std::move(parent_map);
}

std::vector<BoundarySegment> Mesh::boundary_segments() const {
  std::vector<BoundarySegment> out;
  for (const auto& e : edges_) {
    if (e.is_boundary()) out.push_back({e.a, e.b, e.marker});
  }
  return out;
}

BisectionResult bisect(const MeshPtr& mesh, std::span<const Index> marked) {
  const Mesh& m = *mesh;
  const Index nt = m.num_triangles();
  RefinementTrace trace;
  trace.marked.assign(marked.begin(), marked.end());
  std::sort(trace.marked.begin(), trace.marked.end());
  trace.marked.erase(std::unique(trace.marked.begin(), trace.marked.end()), trace.marked.end());
  for (Index t : trace.marked) {
    if (t < 0 || t >= nt) throw MeshError("marked triangle id out of range");
  }

  // Closure: any triangle with a marked edge must have its refinement edge marked.
  std::vector<char> edge_marked(m.num_edges(), 0);
  std::vector<Index> work;
  auto mark_edge = [&](Index e) {
    if (edge_marked[e]) return;
    edge_marked[e] = 1;
    for (Index t : m.edge(e).tri) {
      if (t >= 0) work.push_back(t);
    }
  };
  for (Index t : trace.marked) mark_edge(m.refinement_edge(t));
  while (!work.empty()) {
    const Index t = work.back();
    work.pop_back();
    const auto& te = m.triangle_edges(t);
    if (!edge_marked[te[0]] && (edge_marked[te[1]] || edge_marked[te[2]])) mark_edge(te[0]);
  }

  std::vector<Vec2> verts = m.vertices();
  std::vector<Index> midpoint(m.num_edges(), -1);
  for (Index e = 0; e < m.num_edges(); ++e) {
    if (!edge_marked[e]) continue;
    midpoint[e] = static_cast<Index>(verts.size());
    verts.push_back(0.5 * (m.vertex(m.edge(e).a) + m.vertex(m.edge(e).b)));
  }

  std::vector<Triangle> tris;
  std::vector<Index> parent;
  tris.reserve(static_cast<std::size_t>(nt) * 2);
  trace.child_map.resize(nt);
  auto emit = [&](Index owner, Index p, Index a, Index b) {
    trace.child_map[owner].push_back(static_cast<Index>(tris.size()));
    tris.push_back({{p, a, b}});
    parent.push_back(owner);
  };
  for (Index t = 0; t < nt; ++t) {
    const auto& v = m.triangle(t).v;
    const auto& te = m.triangle_edges(t);
    if (!edge_marked[te[0]]) {
      emit(t, v[0], v[1], v[2]);
      continue;
    }
    trace.refined.push_back(t);
    const Index mid = midpoint[te[0]];
    // Children (mid, v0, v1) and (mid, v2, v0); their refinement edges are the
    // old local edges 2 and 1.
    if (edge_marked[te[2]]) {
      const Index m2 = midpoint[te[2]];
      emit(t, m2, mid, v[0]);
      emit(t, m2, v[1], mid);
    } else {
      emit(t, mid, v[0], v[1]);
    }
    if (edge_marked[te[1]]) {
      const Index m1 = midpoint[te[1]];
      emit(t, m1, mid, v[2]);
      emit(t, m1, v[0], mid);
    } else {
      emit(t, mid, v[2], v[0]);
    }
  }

  std::vector<BoundarySegment> boundary;
  for (Index e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edge(e);
    if (!ed.is_boundary()) continue;
    if (edge_marked[e]) {
      boundary.push_back({ed.a, midpoint[e], ed.marker});
      boundary.push_back({midpoint[e], ed.b, ed.marker});
    } else {
      boundary.push_back({ed.a, ed.b, ed.marker});
    }
  }

  trace.bisections = static_cast<Index>(tris.size()) - nt;
  auto fine = std::make_shared<Mesh>(std::move(verts), std::move(tris), boundary);
  fine->set_lineage(mesh, std::move(parent));
  return {std::move(fine), std::move(trace)};
}

MeshPtr uniform_refine(const MeshPtr& mesh, int n) {
  if (n < 0) throw MeshError("uniform_refine: negative refinement count");
  MeshPtr cur = mesh;
  for (int r = 0; r < 2 * n; ++r) {
    std::vector<Index> all(cur->num_triangles());
    std::iota(all.begin(), all.end(), 0);
    cur = bisect(cur, all).mesh;
  }
  return cur;
}

int betti_number(const Mesh& mesh) {
  if (!mesh.is_connected()) throw MeshError("betti_number: mesh is not connected");
  return 1 - mesh.euler_characteristic();
}

std::vector<Index> ancestor_map(const Mesh& coarse, const Mesh& fine) {
  std::vector<Index> map(fine.num_triangles());
  std::iota(map.begin(), map.end(), 0);
  const Mesh* cur = &fine;
  while (cur->id() != coarse.id()) {
    if (!cur->parent()) throw MeshError("mesh is not a refinement descendant of the given coarse mesh");
    const auto& pm = cur->parent_map();
    for (auto& t : map) t = pm[t];
    cur = cur->parent().get();
  }
  return map;
}

std::array<double, 3> barycentric(const Mesh& mesh, Index t, const Vec2& p) {
  const auto& v = mesh.triangle(t).v;
  const Vec2& a = mesh.vertex(v[0]);
  const Vec2& b = mesh.vertex(v[1]);
  const Vec2& c = mesh.vertex(v[2]);
  const double area2 = 2.0 * mesh.area(t);
  const double l1 = 2.0 * signed_area(a, p, c) / area2;
  const double l2 = 2.0 * signed_area(a, b, p) / area2;
  return {1.0 - l1 - l2, l1, l2};
}

}  // namespace hafem
