#include <algorithm>
#include <deque>
#include <limits>

#include <Eigen/SparseCholesky>

#include "hafem/harmonic.hpp"

namespace hafem {

namespace {

std::vector<std::vector<Index>> vertex_adjacency(const Mesh& mesh) {
  std::vector<std::vector<Index>> adj(mesh.num_vertices());
  for (const auto& e : mesh.edges()) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

}  // namespace

std::vector<Cut> build_cuts(const Mesh& mesh) {
  const auto loops = mesh.boundary_loops();
  if (loops.empty()) throw SolverError("build_cuts: mesh has no boundary");
  const auto adj = vertex_adjacency(mesh);

  // -1 interior, otherwise the loop index.
  std::vector<int> loop_of(mesh.num_vertices(), -1);
  for (std::size_t l = 0; l < loops.size(); ++l) {
    for (Index v : loops[l]) loop_of[v] = static_cast<int>(l);
  }
  std::vector<char> used(mesh.num_vertices(), 0);

  std::vector<Cut> cuts;
  for (std::size_t h = 1; h < loops.size(); ++h) {
    std::vector<Index> prev(mesh.num_vertices(), -2);
    std::deque<Index> queue;
    for (Index v : loops[h]) {
      if (used[v]) continue;
      prev[v] = -1;
      queue.push_back(v);
    }
    Index target = -1;
    while (!queue.empty() && target < 0) {
      const Index v = queue.front();
      queue.pop_front();
      for (Index u : adj[v]) {
        if (used[u] || prev[u] != -2) continue;
        if (loop_of[u] == 0) {
          prev[u] = v;
          target = u;
          break;
        }
        if (loop_of[u] >= 0) continue;  // other holes, or this hole (already seeded)
        prev[u] = v;
        queue.push_back(u);
      }
    }
    if (target < 0) {
      throw SolverError("build_cuts: no path from hole " + std::to_string(h) + " to the outer boundary");
    }
    Cut cut;
    cut.hole = static_cast<int>(h);
    for (Index v = target; v >= 0; v = prev[v]) cut.path.push_back(v);
    std::reverse(cut.path.begin(), cut.path.end());
    for (Index v : cut.path) used[v] = 1;
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

Eigen::VectorXd cut_jump_field(const Mesh& mesh, const Cut& cut) {
  if (cut.path.size() < 2) throw SolverError("cut_jump_field: cut needs at least one edge");
  std::vector<char> on_cut(mesh.num_vertices(), 0);
  for (Index v : cut.path) on_cut[v] = 1;
  auto key = [](Index a, Index b) { return std::pair(std::min(a, b), std::max(a, b)); };
  std::vector<std::pair<Index, Index>> cut_edges;
  for (std::size_t i = 0; i + 1 < cut.path.size(); ++i) cut_edges.push_back(key(cut.path[i], cut.path[i + 1]));
  std::sort(cut_edges.begin(), cut_edges.end());
  auto is_cut_edge = [&](const Edge& e) {
    return std::binary_search(cut_edges.begin(), cut_edges.end(), key(e.a, e.b));
  };
  auto touches_cut = [&](Index t) {
    for (Index v : mesh.triangle(t).v) {
      if (on_cut[v]) return true;
    }
    return false;
  };

  // Split the triangles around the cut into its two sides: connect across
  // edges incident to a cut vertex, never across the cut itself.
  std::vector<int> side(mesh.num_triangles(), -1);
  int components = 0;
  for (Index t0 = 0; t0 < mesh.num_triangles(); ++t0) {
    if (side[t0] >= 0 || !touches_cut(t0)) continue;
    std::vector<Index> stack{t0};
    side[t0] = components;
    while (!stack.empty()) {
      const Index t = stack.back();
      stack.pop_back();
      for (Index e : mesh.triangle_edges(t)) {
        const Edge& ed = mesh.edge(e);
        if (ed.is_boundary() || is_cut_edge(ed) || !(on_cut[ed.a] || on_cut[ed.b])) continue;
        const Index u = ed.tri[0] == t ? ed.tri[1] : ed.tri[0];
        if (side[u] < 0) {
          side[u] = components;
          stack.push_back(u);
        }
      }
    }
    ++components;
  }
  if (components != 2) {
    throw SolverError("cut_jump_field: cut splits its neighbourhood into " + std::to_string(components) +
                      " pieces instead of 2");
  }

  // The side left of the first cut edge carries the unit jump.
  const Index a0 = cut.path[0], a1 = cut.path[1];
  int plus = -1;
  for (const auto& e : mesh.edges()) {
    if (key(e.a, e.b) != key(a0, a1)) continue;
    for (Index t : e.tri) {
      if (t < 0) continue;
      const auto& v = mesh.triangle(t).v;
      for (int i = 0; i < 3; ++i) {
        if (v[i] == a0 && v[(i + 1) % 3] == a1) plus = side[t];
      }
    }
  }
  if (plus < 0) throw SolverError("cut_jump_field: first cut edge has no left triangle");

  Eigen::VectorXd z = Eigen::VectorXd::Zero(mesh.num_edges());
  auto jump = [&](Index t, Index v) { return on_cut[v] && side[t] == plus ? 1.0 : 0.0; };
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const Edge& ed = mesh.edge(e);
    const double z0 = jump(ed.tri[0], ed.b) - jump(ed.tri[0], ed.a);
    if (!ed.is_boundary()) {
      const double z1 = jump(ed.tri[1], ed.b) - jump(ed.tri[1], ed.a);
      if (z0 != z1) throw SolverError("cut_jump_field: inconsistent jump across edge " + std::to_string(e));
    }
    z[e] = z0;
  }
  return z;
}

HarmonicBasis cutting_basis(const DeRhamSpaces& s) {
  HarmonicBasis out;
  out.mesh = s.mesh;
  out.beta = betti_number(*s.mesh);
  out.sigma_gap = std::numeric_limits<double>::quiet_NaN();
  out.Q = Eigen::MatrixXd(s.n1, 0);
  if (out.beta == 0) return out;

  const auto cuts = build_cuts(*s.mesh);
  if (static_cast<int>(cuts.size()) != out.beta) throw SolverError("cutting_basis: cut count differs from beta");
  Eigen::MatrixXd Z(s.n1, out.beta);
  for (int j = 0; j < out.beta; ++j) Z.col(j) = cut_jump_field(*s.mesh, cuts[j]);

  // Neumann problem with vertex 0 pinned.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(s.K0.nonZeros()));
  for (int k = 0; k < s.K0.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s.K0, k); it; ++it) {
      if (it.row() == 0 || it.col() == 0) continue;
      trip.emplace_back(static_cast<Index>(it.row()), static_cast<Index>(it.col()), it.value());
    }
  }
  trip.emplace_back(0, 0, 1.0);
  SparseMatrix K(s.n0, s.n0);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> solver(K);
  if (solver.info() != Eigen::Success || (solver.vectorD().array() <= 0.0).any()) {
    throw SolverError("cutting_basis: Neumann matrix is singular beyond the constants");
  }
  Eigen::MatrixXd rhs = SparseMatrix(s.G.transpose()) * (s.M1 * Z);
  rhs.row(0).setZero();
  const Eigen::MatrixXd phi = solver.solve(rhs);
  Eigen::MatrixXd Q = Z - s.G * phi;
  m1_orthonormalize(Q, s.M1);
  normalize_signs(Q);
  out.Q = std::move(Q);
  return out;
}

}  // namespace hafem
