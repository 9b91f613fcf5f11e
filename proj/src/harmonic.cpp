#include "hafem/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace hafem {

namespace {

// Deterministic, seed-free start block with no built-in symmetry.
Eigen::MatrixXd start_block(Index n, Index k) {
  Eigen::MatrixXd X(n, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double s = std::sin(12.9898 * (i + 1) + 78.233 * (j + 1)) * 43758.5453;
      X(i, j) = s - std::floor(s) - 0.5;
    }
  }
  return X;
}

struct ConstraintOperator {
  SparseMatrix B;          // G^T M1, n0 x n1
  Eigen::VectorXd d0_inv;  // inverse lumped vertex masses
  const DeRhamSpaces* s;

  explicit ConstraintOperator(const DeRhamSpaces& spaces) : s(&spaces) {
    B = SparseMatrix(spaces.G.transpose()) * spaces.M1;
    d0_inv.resize(spaces.n0);
    for (Index v = 0; v < spaces.n0; ++v) d0_inv[v] = 1.0 / spaces.M0.col(v).sum();
  }

  SparseMatrix assemble() const {
    SparseMatrix A = SparseMatrix(B.transpose()) * d0_inv.asDiagonal() * B;
    A += SparseMatrix(s->Rt.transpose()) * s->M2 * s->Rt;
    return A;
  }

  // X^T A Y evaluated through the two constraint blocks.
  Eigen::MatrixXd form(const Eigen::MatrixXd& X) const {
    const Eigen::MatrixXd bx = B * X;
    const Eigen::MatrixXd rx = s->Rt * X;
    return bx.transpose() * d0_inv.asDiagonal() * bx + rx.transpose() * s->M2 * rx;
  }
};

}  // namespace

void m1_orthonormalize(Eigen::MatrixXd& Q, const SparseMatrix& M1) {
  for (Index j = 0; j < Q.cols(); ++j) {
    const double original = std::sqrt(std::max(0.0, Q.col(j).dot(M1 * Q.col(j))));
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) {
        const Eigen::VectorXd mq = M1 * Q.col(i);
        Q.col(j) -= Q.col(j).dot(mq) * Q.col(i);
      }
    }
    const double norm = std::sqrt(std::max(0.0, Q.col(j).dot(M1 * Q.col(j))));
    if (!(norm > 1e-14 * original) || norm == 0.0) throw SolverError("orthonormalization: linearly dependent columns");
    Q.col(j) /= norm;
  }
}

void normalize_signs(Eigen::MatrixXd& Q) {
  for (Index j = 0; j < Q.cols(); ++j) {
    Index imax = 0;
    for (Index i = 1; i < Q.rows(); ++i) {
      if (std::abs(Q(i, j)) > std::abs(Q(imax, j))) imax = i;
    }
    if (Q.rows() > 0 && Q(imax, j) < 0.0) Q.col(j) = -Q.col(j);
  }
}

HarmonicBasis compute_basis(const DeRhamSpaces& s, const KernelOptions& opt) {
  HarmonicBasis out;
  out.mesh = s.mesh;
  out.beta = betti_number(*s.mesh);
  out.sigma_gap = std::numeric_limits<double>::infinity();
  out.Q = Eigen::MatrixXd(s.n1, 0);
  if (out.beta == 0) return out;

  const Index beta = out.beta;
  const Index k = std::min<Index>(beta + 3, s.n1);
  if (k <= beta) throw SolverError("compute_basis: mesh too small to separate the kernel");

  const ConstraintOperator op(s);
  const double shift = 1e-3 / s.mesh->total_area();
  SparseMatrix A = op.assemble();
  A += shift * s.M1;
  Eigen::SimplicialLDLT<SparseMatrix> solver(A);
  if (solver.info() != Eigen::Success) throw SolverError("compute_basis: factorization failed");

  Eigen::MatrixXd X = start_block(s.n1, k);
  m1_orthonormalize(X, s.M1);
  Eigen::VectorXd theta;
  double prev_next = -1.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::MatrixXd Y = solver.solve(Eigen::MatrixXd(s.M1 * X));
    m1_orthonormalize(Y, s.M1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.form(Y));
    const Eigen::MatrixXd Xn = Y * es.eigenvectors();
    theta = es.eigenvalues();
    const double change = span_gap(Xn.leftCols(beta), X.leftCols(beta), s.M1);
    const double next = theta[beta];
    X = Xn;
    const bool next_stable = prev_next > 0.0 && std::abs(next - prev_next) <= 1e-8 * next;
    prev_next = next;
    if (it >= 2 && change < opt.tolerance && next_stable) break;
  }

  Eigen::MatrixXd Q = X.leftCols(beta);
  m1_orthonormalize(Q, s.M1);
  const Eigen::MatrixXd H = op.form(X.leftCols(beta + 1));
  const double sigma_beta = std::sqrt(std::max(0.0, H.topLeftCorner(beta, beta).diagonal().maxCoeff()));
  const double sigma_next = std::sqrt(std::max(0.0, theta[beta]));
  out.sigma_gap = sigma_beta == 0.0 ? std::numeric_limits<double>::infinity() : sigma_next / sigma_beta;
  if (!(out.sigma_gap >= opt.min_gap)) {
    throw SolverError("compute_basis: spectral gap " + std::to_string(out.sigma_gap) + " below " +
                      std::to_string(opt.min_gap));
  }
  normalize_signs(Q);
  out.Q = std::move(Q);
  return out;
}

FieldProjection project_field(const EdgeField& f, const HarmonicBasis& basis, const DeRhamSpaces& spaces) {
  if (f.mesh != basis.mesh || f.coeffs.size() != basis.Q.rows()) throw SolverError("project_field: mesh mismatch");
  FieldProjection p;
  p.coefficients = basis.Q.transpose() * (spaces.M1 * f.coeffs);
  p.residual = EdgeField{f.mesh, f.coeffs - basis.Q * p.coefficients};
  return p;
}

Eigen::MatrixXd cross_gram(const HarmonicBasis& ref, const DeRhamSpaces& ref_spaces, const HarmonicBasis& coarse,
                           const Prolongation& prolongation) {
  if (ref.beta != coarse.beta) {
    throw SolverError("cross_gram: dimension mismatch (" + std::to_string(ref.beta) + " vs " +
                      std::to_string(coarse.beta) + ")");
  }
  if (prolongation.fine() != ref.mesh || prolongation.coarse() != coarse.mesh) {
    throw SolverError("cross_gram: prolongation does not connect the two meshes");
  }
  const Eigen::MatrixXd W = prolongation.apply(coarse.Q);
  return ref.Q.transpose() * (ref_spaces.M1 * W);
}

double span_gap(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const SparseMatrix& M1) {
  if (A.cols() == 0 && B.cols() == 0) return 0.0;
  const Eigen::MatrixXd MA = M1 * A;
  const Eigen::MatrixXd R = A - B * (B.transpose() * MA);
  const Eigen::MatrixXd RR = R.transpose() * (M1 * R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(RR, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

HarmonicResidual harmonic_residual(const DeRhamSpaces& s, const Eigen::MatrixXd& Q) {
  HarmonicResidual r;
  if (Q.cols() == 0) return r;
  double m1max = 0.0;
  for (int k = 0; k < s.M1.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s.M1, k); it; ++it) m1max = std::max(m1max, std::abs(it.value()));
  }
  const Eigen::MatrixXd g = SparseMatrix(s.G.transpose()) * (s.M1 * Q);
  r.gradient = g.cwiseAbs().maxCoeff() / m1max;
  const Eigen::MatrixXd rq = s.Rt * Q;
  for (Index j = 0; j < Q.cols(); ++j) r.rot = std::max(r.rot, std::sqrt(rq.col(j).dot(s.M2 * rq.col(j))));
  const Eigen::MatrixXd gram = Q.transpose() * (s.M1 * Q);
  r.orthonormality = (gram - Eigen::MatrixXd::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace hafem
