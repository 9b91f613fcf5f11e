#include "hafem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hafem/parallel.hpp"

namespace hafem {

namespace {

struct ElementTraces {
  std::vector<std::array<Vec2, 3>> vertex_values;  // [t * nf + j][local vertex]
  std::vector<double> div;                         // [t * nf + j]
  std::vector<double> div_scale;
};

ElementTraces element_traces(const Mesh& mesh, const Eigen::MatrixXd& F) {
  const auto nt = static_cast<std::size_t>(mesh.num_triangles());
  const auto nf = static_cast<std::size_t>(F.cols());
  ElementTraces tr;
  tr.vertex_values.resize(nt * nf);
  tr.div.resize(nt * nf);
  tr.div_scale.resize(nt * nf);
  parallel_for(nt, [&](std::size_t t) {
    const ElementFrame f = element_frame(mesh, static_cast<Index>(t));
    const auto& e = mesh.triangle_edges(static_cast<Index>(t));
    for (std::size_t j = 0; j < nf; ++j) {
      auto& v = tr.vertex_values[t * nf + j];
      v.fill(Vec2::Zero());
      Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
      double scale = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double c = F(e[k], static_cast<Index>(j));
        const auto [a, b] = f.edge_ends[k];
        v[a] += c * f.grad[b];
        v[b] -= c * f.grad[a];
        J += c * (f.grad[b] * f.grad[a].transpose() - f.grad[a] * f.grad[b].transpose());
        scale += std::abs(c) * f.grad[a].norm() * f.grad[b].norm();
      }
      tr.div[t * nf + j] = J.trace();
      tr.div_scale[t * nf + j] = scale;
    }
  });
  return tr;
}

int local_index(const Mesh& mesh, Index t, Index v) {
  const auto& tv = mesh.triangle(t).v;
  return tv[0] == v ? 0 : (tv[1] == v ? 1 : 2);
}

}  // namespace

double max_relative_divergence(const DeRhamSpaces& spaces, const Eigen::MatrixXd& fields) {
  const ElementTraces tr = element_traces(*spaces.mesh, fields);
  double r = 0.0;
  for (std::size_t i = 0; i < tr.div.size(); ++i) {
    if (tr.div_scale[i] > 0.0) r = std::max(r, std::abs(tr.div[i]) / tr.div_scale[i]);
  }
  return r;
}

ErrorIndicators indicators(const DeRhamSpaces& spaces, const Eigen::MatrixXd& F, IndicatorKind kind) {
  const Mesh& mesh = *spaces.mesh;
  if (F.rows() != spaces.n1) throw SolverError("indicators: field length does not match the edge count");
  const auto nt = static_cast<std::size_t>(mesh.num_triangles());
  const auto ne = static_cast<std::size_t>(mesh.num_edges());
  const auto nf = static_cast<std::size_t>(F.cols());
  const ElementTraces tr = element_traces(mesh, F);
  for (std::size_t i = 0; i < tr.div.size(); ++i) {
    if (std::abs(tr.div[i]) > 1e-13 * tr.div_scale[i]) {
      throw std::logic_error("indicators: lowest-order field with nonzero elementwise divergence");
    }
  }

  // Squared L2 norm of the normal jump on every edge, per field. The jump is
  // affine along the edge, so it follows from the endpoint values.
  std::vector<double> jump2(ne * nf, 0.0);
  parallel_for(ne, [&](std::size_t ei) {
    const Edge& ed = mesh.edge(static_cast<Index>(ei));
    const Vec2 d = mesh.vertex(ed.b) - mesh.vertex(ed.a);
    const double len = d.norm();
    const Vec2 n(d.y() / len, -d.x() / len);
    const Index t0 = ed.tri[0], t1 = ed.tri[1];
    const int a0 = local_index(mesh, t0, ed.a), b0 = local_index(mesh, t0, ed.b);
    const int a1 = t1 >= 0 ? local_index(mesh, t1, ed.a) : -1;
    const int b1 = t1 >= 0 ? local_index(mesh, t1, ed.b) : -1;
    for (std::size_t j = 0; j < nf; ++j) {
      const auto& v0 = tr.vertex_values[static_cast<std::size_t>(t0) * nf + j];
      double ja = v0[a0].dot(n), jb = v0[b0].dot(n);
      if (t1 >= 0) {
        const auto& v1 = tr.vertex_values[static_cast<std::size_t>(t1) * nf + j];
        ja -= v1[a1].dot(n);
        jb -= v1[b1].dot(n);
      }
      jump2[ei * nf + j] = len * (ja * ja + ja * jb + jb * jb) / 3.0;
    }
  });

  ErrorIndicators out;
  out.kind = kind;
  out.per_element.assign(nt, 0.0);
  parallel_for(nt, [&](std::size_t t) {
    const double area = mesh.area(static_cast<Index>(t));
    const double h = std::sqrt(area);
    const auto& e = mesh.triangle_edges(static_cast<Index>(t));
    double sum = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      double boundary = 0.0;
      for (Index ek : e) boundary += jump2[static_cast<std::size_t>(ek) * nf + j];
      // h_T ||div q||_T = h_T |div| |T|^{1/2}
      const double value = h * std::abs(tr.div[t * nf + j]) * h + std::sqrt(h) * std::sqrt(boundary);
      sum += value * value;
    }
    out.per_element[t] = std::sqrt(sum);
  });
  double total = 0.0;
  for (double v : out.per_element) total += v * v;
  out.total = std::sqrt(total);
  return out;
}

ErrorIndicators eta(const DeRhamSpaces& spaces, const HarmonicBasis& basis) {
  if (basis.mesh != spaces.mesh) throw SolverError("eta: basis lives on a different mesh");
  return indicators(spaces, basis.Q, IndicatorKind::practical);
}

ErrorIndicators mu(const DeRhamSpaces& spaces, const HarmonicBasis& basis, const Eigen::MatrixXd& M) {
  if (basis.mesh != spaces.mesh) throw SolverError("mu: basis lives on a different mesh");
  if (M.rows() != basis.beta || M.cols() != basis.beta) throw SolverError("mu: cross-Gram size differs from beta");
  return indicators(spaces, basis.Q * M.transpose(), IndicatorKind::theoretical);
}

ErrorIndicators mu(const DeRhamSpaces& spaces, const HarmonicBasis& basis, const HarmonicBasis& ref,
                   const DeRhamSpaces& ref_spaces, const Prolongation& prolongation) {
  return mu(spaces, basis, cross_gram(ref, ref_spaces, basis, prolongation));
}

DefectReport defect(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw SolverError("defect: cross-Gram matrix is not square");
  DefectReport r;
  const Index beta = M.rows();
  if (beta == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double smax = s.maxCoeff(), smin = s.minCoeff();
  if (!(smin > 0.0)) throw SolverError("defect: cross-Gram matrix is singular (projection not injective)");
  r.E = std::sqrt(std::max(0.0, static_cast<double>(beta) - M.squaredNorm()));
  r.P_norm = smax;
  r.P_inv_norm = 1.0 / smin;
  r.sigma_min = smin;
  r.gap = std::sqrt(std::max(0.0, 1.0 - smin * smin));
  return r;
}

std::vector<Index> enlarged_refined_set(const Mesh& coarse, const RefinementTrace& trace) {
  std::vector<char> in(coarse.num_triangles(), 0);
  for (Index t : trace.refined) {
    in[t] = 1;
    for (Index n : coarse.neighbors(t)) {
      if (n >= 0) in[n] = 1;
    }
  }
  std::vector<Index> out;
  for (Index t = 0; t < coarse.num_triangles(); ++t) {
    if (in[t]) out.push_back(t);
  }
  return out;
}

double localized_ratio(double numerator, const ErrorIndicators& eta_coarse, const Mesh& coarse,
                       const RefinementTrace& trace) {
  double denom = 0.0;
  for (Index t : enlarged_refined_set(coarse, trace)) denom += eta_coarse.per_element[t] * eta_coarse.per_element[t];
  if (denom == 0.0) return numerator == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return numerator / denom;
}

}  // namespace hafem
