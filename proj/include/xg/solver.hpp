#pragma once

#include <Eigen/Sparse>

#include "xg/assembly.hpp"

namespace xg {

// Result of a direct sparse solve with iterative refinement. `x` holds the
// accepted solution when `ok` is true; a zero right-hand side short-circuits
// to the zero solution with zero residual.
struct SolveReport {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
  bool ok = false;
  int refinement_steps = 0;
  long factor_nnz = 0;       // nonzeros of the L and U factors
  double fill_ratio = 0.0;   // factor_nnz / nnz(K)
  int rank_deficiency = -1;  // n - numerical rank when a failure was diagnosed
  double wall_s = 0.0;
};

// Sparse LU factorization followed by iterative refinement until the
// relative residual ||K x - b|| / ||b|| drops to `tol` (default 1e-10).
// Singular or numerically unusable systems come back with ok = false and,
// at desk scale, the measured rank deficiency.
SolveReport solve_linear(const Eigen::SparseMatrix<double>& K,
                         const Eigen::VectorXd& rhs, double tol = 1e-10);

// Convenience overload for assembled systems.
SolveReport solve(const AssembledSystem& sys, double tol = 1e-10);

// Discrete inf-sup constant of the pencil K x = mu N x measured in the norm
// induced by the symmetric positive definite Gram matrix N:
// gamma = min |mu| = smallest singular value of N^{-1/2} K N^{-1/2}.
struct InfSupEstimate {
  double gamma = 0.0;
  double signed_eig = 0.0;    // signed eigenvalue attaining min |mu|; its sign
                              // change under a parameter sweep brackets a
                              // genuine singularity of the pencil
  Eigen::VectorXd extremal;   // minimizing direction in the original basis
  double norm_min_eig = 0.0;  // spectral diagnostics of the Gram matrix
  double norm_condition = 0.0;
};

// Dense symmetric reduction, intended for desk-scale systems (guarded at
// 20000 unknowns). Values at or below 1e-10 are reported as an exact zero:
// the system is singular relative to the norm. Throws when N is not
// positive definite, which signals a norm-assembly bug upstream.
InfSupEstimate infsup_estimate(const Eigen::SparseMatrix<double>& K,
                               const Eigen::SparseMatrix<double>& N);

// Iterative gamma for systems past the dense guard: power iteration on
// K^{-1} N, which is self-adjoint in the N-inner product, so the N-norm
// growth ratio converges to the largest |mu| and gamma = 1/|mu|. The start
// vector is a fixed seeded draw; a singular or unusable factorization comes
// back as 0.
double infsup_estimate_iterative(const Eigen::SparseMatrix<double>& K,
                                 const Eigen::SparseMatrix<double>& N,
                                 int max_iters = 2000, double tol = 1e-11);

}  // namespace xg
