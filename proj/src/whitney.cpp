#include "hafem/whitney.hpp"

#include <algorithm>
#include <cmath>

#include "hafem/parallel.hpp"

namespace hafem {

ElementFrame element_frame(const Mesh& mesh, Index t) {
  ElementFrame f;
  const auto& v = mesh.triangle(t).v;
  for (int i = 0; i < 3; ++i) f.p[i] = mesh.vertex(v[i]);
  f.area = mesh.area(t);
  if (!(f.area > 0.0)) throw MeshError("degenerate triangle (area <= 0)");
  const double inv2a = 1.0 / (2.0 * f.area);
  for (int i = 0; i < 3; ++i) {
    const Vec2 d = f.p[(i + 2) % 3] - f.p[(i + 1) % 3];
    f.grad[i] = Vec2(-d.y(), d.x()) * inv2a;
  }
  for (int k = 0; k < 3; ++k) {
    int a = (k + 1) % 3, b = (k + 2) % 3;
    if (v[a] > v[b]) std::swap(a, b);
    f.edge_ends[k] = {a, b};
  }
  return f;
}

Vec2 whitney_value(const ElementFrame& f, int k, const std::array<double, 3>& bary) {
  const auto [a, b] = f.edge_ends[k];
  return bary[a] * f.grad[b] - bary[b] * f.grad[a];
}

double whitney_rot(const ElementFrame& f, int k) {
  // rot(lambda_a grad lambda_b - lambda_b grad lambda_a) = -2 grad_a x grad_b,
  // which is -1/|T| when a -> b runs counter-clockwise.
  const auto [a, b] = f.edge_ends[k];
  const double inv = 1.0 / f.area;
  return b == (a + 1) % 3 ? -inv : inv;
}

namespace {

struct LocalMatrices {
  Eigen::Matrix3d m0, k0, m1;
  std::array<double, 3> rot;
  double area;
};

LocalMatrices local_matrices(const Mesh& mesh, Index t) {
  const ElementFrame f = element_frame(mesh, t);
  LocalMatrices L;
  L.area = f.area;
  auto m = [&](int p, int q) { return f.area * (p == q ? 2.0 : 1.0) / 12.0; };
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      L.m0(i, j) = m(i, j);
      L.k0(i, j) = f.area * f.grad[i].dot(f.grad[j]);
      const auto [ai, bi] = f.edge_ends[i];
      const auto [aj, bj] = f.edge_ends[j];
      L.m1(i, j) = m(ai, aj) * f.grad[bi].dot(f.grad[bj]) - m(ai, bj) * f.grad[bi].dot(f.grad[aj]) -
                   m(bi, aj) * f.grad[ai].dot(f.grad[bj]) + m(bi, bj) * f.grad[ai].dot(f.grad[aj]);
    }
    L.rot[i] = whitney_rot(f, i);
  }
  return L;
}

}  // namespace

DeRhamSpaces build_spaces(const MeshPtr& mesh_ptr) {
  const Mesh& mesh = *mesh_ptr;
  DeRhamSpaces s;
  s.mesh = mesh_ptr;
  s.n0 = mesh.num_vertices();
  s.n1 = mesh.num_edges();
  s.n2 = mesh.num_triangles();

  const auto nt = static_cast<std::size_t>(s.n2);
  std::vector<LocalMatrices> local(nt);
  parallel_for(nt, [&](std::size_t t) { local[t] = local_matrices(mesh, static_cast<Index>(t)); });

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> m0, k0, m1, m2, rt;
  m0.reserve(9 * nt);
  k0.reserve(9 * nt);
  m1.reserve(9 * nt);
  m2.reserve(nt);
  rt.reserve(3 * nt);
  for (Index t = 0; t < s.n2; ++t) {
    const auto& L = local[t];
    const auto& v = mesh.triangle(t).v;
    const auto& e = mesh.triangle_edges(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m0.emplace_back(v[i], v[j], L.m0(i, j));
        k0.emplace_back(v[i], v[j], L.k0(i, j));
        m1.emplace_back(e[i], e[j], L.m1(i, j));
      }
      rt.emplace_back(t, e[i], L.rot[i]);
    }
    m2.emplace_back(t, t, L.area);
  }
  std::vector<Triplet> g;
  g.reserve(2 * static_cast<std::size_t>(s.n1));
  for (Index e = 0; e < s.n1; ++e) {
    g.emplace_back(e, mesh.edge(e).a, -1.0);
    g.emplace_back(e, mesh.edge(e).b, 1.0);
  }

  auto build = [](Index rows, Index cols, const std::vector<Triplet>& trip) {
    SparseMatrix A(rows, cols);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
  };
  s.M0 = build(s.n0, s.n0, m0);
  s.K0 = build(s.n0, s.n0, k0);
  s.M1 = build(s.n1, s.n1, m1);
  s.M2 = build(s.n2, s.n2, m2);
  s.Rt = build(s.n2, s.n1, rt);
  s.G = build(s.n1, s.n0, g);
  return s;
}

EdgeField interpolate(const MeshPtr& mesh, const std::function<Vec2(const Vec2&)>& f) {
  EdgeField out{mesh, Eigen::VectorXd::Zero(mesh->num_edges())};
  // Gauss-Legendre on [0,1].
  const double r = std::sqrt(0.6);
  const std::array<double, 3> x{0.5 * (1 - r), 0.5, 0.5 * (1 + r)};
  const std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (Index e = 0; e < mesh->num_edges(); ++e) {
    const Vec2 a = mesh->vertex(mesh->edge(e).a), b = mesh->vertex(mesh->edge(e).b);
    const Vec2 d = b - a;
    double s = 0.0;
    for (int q = 0; q < 3; ++q) s += w[q] * f(a + x[q] * d).dot(d);
    out.coeffs[e] = s;
  }
  return out;
}

Vec2 evaluate_in_triangle(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t,
                          const std::array<double, 3>& bary) {
  const ElementFrame f = element_frame(mesh, t);
  const auto& e = mesh.triangle_edges(t);
  Vec2 v = Vec2::Zero();
  for (int k = 0; k < 3; ++k) v += coeffs[e[k]] * whitney_value(f, k, bary);
  return v;
}

double divergence_on(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t) {
  // Jacobian of lambda_a g_b - lambda_b g_a is g_b g_a^T - g_a g_b^T.
  const ElementFrame f = element_frame(mesh, t);
  const auto& e = mesh.triangle_edges(t);
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  for (int k = 0; k < 3; ++k) {
    const auto [a, b] = f.edge_ends[k];
    J += coeffs[e[k]] * (f.grad[b] * f.grad[a].transpose() - f.grad[a] * f.grad[b].transpose());
  }
  return J.trace();
}

double rot_on(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs, Index t) {
  const ElementFrame f = element_frame(mesh, t);
  const auto& e = mesh.triangle_edges(t);
  double r = 0.0;
  for (int k = 0; k < 3; ++k) r += coeffs[e[k]] * whitney_rot(f, k);
  return r;
}

std::vector<Vec2> evaluate_field(const EdgeField& f, const std::vector<Vec2>& points) {
  const PointLocator locator(f.mesh);
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const Index t = locator.locate(p);
    if (t < 0) throw MeshError("evaluate_field: point outside the mesh");
    out.push_back(evaluate_in_triangle(*f.mesh, f.coeffs, t, barycentric(*f.mesh, t, p)));
  }
  return out;
}

double linf_norm(const Mesh& mesh, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  static const std::array<std::array<double, 3>, 7> samples{{{1, 0, 0},
                                                              {0, 1, 0},
                                                              {0, 0, 1},
                                                              {0.5, 0.5, 0},
                                                              {0, 0.5, 0.5},
                                                              {0.5, 0, 0.5},
                                                              {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  const auto nt = static_cast<std::size_t>(mesh.num_triangles());
  std::vector<double> per(nt, 0.0);
  parallel_for(nt, [&](std::size_t t) {
    const ElementFrame f = element_frame(mesh, static_cast<Index>(t));
    const auto& e = mesh.triangle_edges(static_cast<Index>(t));
    double m = 0.0;
    for (const auto& bary : samples) {
      Vec2 v = Vec2::Zero();
      for (int k = 0; k < 3; ++k) v += coeffs[e[k]] * whitney_value(f, k, bary);
      m = std::max(m, v.norm());
    }
    per[t] = m;
  });
  return per.empty() ? 0.0 : *std::max_element(per.begin(), per.end());
}

double linf_norm(const EdgeField& f) { return linf_norm(*f.mesh, f.coeffs); }

PointLocator::PointLocator(const MeshPtr& mesh) : mesh_(mesh) {
  Vec2 lo = mesh->vertex(0), hi = lo;
  for (const auto& p : mesh->vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double side = std::sqrt(static_cast<double>(mesh->num_triangles()));
  nx_ = std::max(1, static_cast<int>(side));
  ny_ = nx_;
  lo_ = lo;
  cell_ = Vec2(std::max((hi.x() - lo.x()) / nx_, 1e-300), std::max((hi.y() - lo.y()) / ny_, 1e-300));
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (Index t = 0; t < mesh->num_triangles(); ++t) {
    const auto& v = mesh->triangle(t).v;
    Vec2 a = mesh->vertex(v[0]), b = a;
    for (Index i : v) {
      a = a.cwiseMin(mesh->vertex(i));
      b = b.cwiseMax(mesh->vertex(i));
    }
    const int i0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
  }
}

Index PointLocator::locate(const Vec2& p) const {
  const double fx = (p.x() - lo_.x()) / cell_.x(), fy = (p.y() - lo_.y()) / cell_.y();
  if (fx < -1e-9 || fy < -1e-9 || fx > nx_ + 1e-9 || fy > ny_ + 1e-9) return -1;
  const int i = std::clamp(static_cast<int>(fx), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(fy), 0, ny_ - 1);
  for (Index t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto bary = barycentric(*mesh_, t, p);
    if (bary[0] >= -1e-12 && bary[1] >= -1e-12 && bary[2] >= -1e-12) return t;
  }
  return -1;
}

}  // namespace hafem
