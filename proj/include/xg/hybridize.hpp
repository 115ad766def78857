#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "xg/assembly.hpp"
#include "xg/solver.hpp"

namespace xg {

// Element-local piece of the hybridized problem: the interior fields
// (sigma, xi, u) of one cell respond linearly to the interface flux fields
// carried by the cell's interior edges and to the local load. M is the local
// saddle matrix, G the coupling into the flux unknowns, load the data term.
struct HybridLocal {
  std::vector<int> rows;  // global field ids, (sigma | xi | u) block order
  std::vector<int> flux;  // global flux ids coupled through this cell
  Eigen::MatrixXd M;      // local saddle matrix (symmetric)
  Eigen::MatrixXd G;      // rows.size() x flux.size() coupling
  Eigen::VectorXd load;   // local data term (0, 0, -(f, v))
  Eigen::FullPivLU<Eigen::MatrixXd> factor;  // factorization of M
};

// Statically condensed interface problem: after eliminating the interior
// fields cell by cell, the only globally coupled unknowns are the numerical
// fluxes (hat u*, hat xi*) on interior edges. Kc is the Schur complement
// F - sum_T G_T^t M_T^{-1} G_T of the unreduced block system.
struct HybridSystem {
  ProblemConfig config;
  const MeshComplex* mesh = nullptr;
  XgSpaces spaces;
  int n_flux_u = 0;   // dim of the hat u* space (= spaces.cVs)
  int n_flux_xi = 0;  // dim of the hat xi* space (= spaces.cVps)
  int n_fields = 0;   // Vm.dim + Vp.dim + V.dim
  std::vector<HybridLocal> cells;
  Eigen::SparseMatrix<double> F;   // flux-flux face masses (4a / 4c weights)
  Eigen::SparseMatrix<double> Kc;  // condensed flux matrix (symmetric)
  Eigen::VectorXd rhs;             // condensed right-hand side

  int flux_dim() const { return n_flux_u + n_flux_xi; }
};

// Build the local solvers and condense. Requires a hybridizable penalty
// regime (hybrid1 or hybrid2, whose coefficients satisfy c = 1/(4b) and
// d = 1/(4a)) and k in {1, 2}; k = 0 ties all cells together through the
// mean constraint and does not condense to interface unknowns.
HybridSystem hybridize(const MeshComplex& mesh, const ProblemConfig& config,
                       const TrigField& f);

// Interior fields of one cell for given global flux coefficients, ordered
// like HybridLocal::rows. with_load = false drops the data term (pure trace
// response, used by linearity checks).
Eigen::VectorXd local_solve(const HybridSystem& hs, int cell,
                            const Eigen::VectorXd& flux,
                            bool with_load = true);

// Fields for given flux coefficients, split into the three blocks.
void reconstruct(const HybridSystem& hs, const Eigen::VectorXd& flux,
                 Eigen::VectorXd& sigma, Eigen::VectorXd& xi,
                 Eigen::VectorXd& u);

struct HybridSolution {
  Eigen::VectorXd flux;          // (hat u* | hat xi*) coefficients
  Eigen::VectorXd sigma, xi, u;  // reconstructed broken fields
  SolveReport report;            // diagnostics of the condensed solve
};

// Solve the condensed system and back-substitute through the local solvers.
HybridSolution solve_hybrid(const HybridSystem& hs, double tol = 1e-10);

// The unreduced block system [[M, G], [G^t, F]] over (fields | fluxes), and
// its right-hand side; the condensed system is its exact Schur complement
// with respect to the field block.
Eigen::SparseMatrix<double> hybrid_full_matrix(const HybridSystem& hs);
Eigen::VectorXd hybrid_full_rhs(const HybridSystem& hs);

// Flux coefficients implied by a seven-field solution of the same problem:
// on each interior edge the flux is the check field plus the projected
// average of the star trace (hat w* = check w* + avg(tr * w)).
Eigen::VectorXd fluxes_from_monolithic(const HybridSystem& hs,
                                       const AssembledSystem& sys,
                                       const Eigen::VectorXd& x);

}  // namespace xg
