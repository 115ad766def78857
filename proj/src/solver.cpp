#include "xg/solver.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace xg {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Numerical rank deficiency, measured densely; only affordable at desk
// scale, so larger systems report -1 (unknown).
int rank_deficiency_of(const Eigen::SparseMatrix<double>& K) {
  if (K.rows() > 5000) return -1;
  Eigen::MatrixXd dense(K);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
  qr.setThreshold(1e-12);
  return static_cast<int>(K.rows() - qr.rank());
}

}  // namespace

SolveReport solve_linear(const Eigen::SparseMatrix<double>& K,
                         const Eigen::VectorXd& rhs, double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(K.rows());
  if (K.cols() != n || rhs.size() != n)
    throw std::invalid_argument("solve_linear: dimension mismatch");

  SolveReport rep;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    rep.x = Eigen::VectorXd::Zero(n);
    rep.ok = true;
    rep.wall_s = seconds_since(t0);
    return rep;
  }

  Eigen::SparseMatrix<double> A = K;
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    rep.rank_deficiency = rank_deficiency_of(A);
    rep.wall_s = seconds_since(t0);
    return rep;
  }
  rep.factor_nnz = static_cast<long>(lu.nnzL() + lu.nnzU());
  rep.fill_ratio = A.nonZeros() > 0
                       ? static_cast<double>(rep.factor_nnz) / A.nonZeros()
                       : 0.0;

  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::VectorXd r = rhs - A * x;
  rep.relative_residual = r.norm() / bnorm;
  while (rep.relative_residual > tol && rep.refinement_steps < 10) {
    x += lu.solve(r);
    r = rhs - A * x;
    rep.relative_residual = r.norm() / bnorm;
    ++rep.refinement_steps;
  }
  rep.x = std::move(x);
  rep.ok = rep.relative_residual <= tol;
  if (!rep.ok) rep.rank_deficiency = rank_deficiency_of(A);
  rep.wall_s = seconds_since(t0);
  return rep;
}

SolveReport solve(const AssembledSystem& sys, double tol) {
  return solve_linear(sys.K, sys.rhs, tol);
}

InfSupEstimate infsup_estimate(const Eigen::SparseMatrix<double>& K,
                               const Eigen::SparseMatrix<double>& N) {
  const int n = static_cast<int>(K.rows());
  if (K.cols() != n || N.rows() != n || N.cols() != n)
    throw std::invalid_argument("infsup_estimate: dimension mismatch");
  if (n > 20000)
    throw std::runtime_error(
        "infsup_estimate: dense reduction is desk-scale only");

  Eigen::MatrixXd Kd(K);
  Eigen::MatrixXd Nd(N);
  Kd = (0.5 * (Kd + Kd.transpose())).eval();
  Nd = (0.5 * (Nd + Nd.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> norm_eigs(Nd);
  const double nmin = norm_eigs.eigenvalues().minCoeff();
  const double nmax = norm_eigs.eigenvalues().maxCoeff();
  if (nmin <= 0.0)
    throw std::runtime_error(
        "infsup_estimate: norm Gram matrix is not positive definite");

  InfSupEstimate est;
  est.norm_min_eig = nmin;
  est.norm_condition = nmax / nmin;

  Eigen::VectorXd inv_sqrt = norm_eigs.eigenvalues().array().rsqrt();
  Eigen::MatrixXd half = norm_eigs.eigenvectors() * inv_sqrt.asDiagonal() *
                         norm_eigs.eigenvectors().transpose();
  Eigen::MatrixXd A = half * Kd * half;
  A = (0.5 * (A + A.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(A);
  int idx = 0;
  const double gamma = eigs.eigenvalues().cwiseAbs().minCoeff(&idx);
  est.gamma = gamma <= 1e-10 ? 0.0 : gamma;
  est.signed_eig = eigs.eigenvalues()[idx];
  est.extremal = half * eigs.eigenvectors().col(idx);
  return est;
}

double infsup_estimate_iterative(const Eigen::SparseMatrix<double>& K,
                                 const Eigen::SparseMatrix<double>& N,
                                 int max_iters, double tol) {
  Eigen::SparseMatrix<double> Kc = K;
  Kc.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Kc);
  if (lu.info() != Eigen::Success) return 0.0;

  std::mt19937 rng(20260819u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd x(K.rows());
  for (int i = 0; i < x.size(); ++i) x[i] = unif(rng);
  const double nx = std::sqrt(std::max(0.0, x.dot(N * x)));
  if (!(nx > 0.0)) return 0.0;
  x /= nx;

  double ratio = 0.0, prev = -1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd y = lu.solve(N * x);
    ratio = std::sqrt(std::max(0.0, y.dot(N * y)));
    if (!(ratio > 0.0) || !std::isfinite(ratio)) return 0.0;
    x = y / ratio;
    if (it > 4 && std::abs(ratio - prev) <= tol * ratio) break;
    prev = ratio;
  }
  return 1.0 / ratio;
}

}  // namespace xg
