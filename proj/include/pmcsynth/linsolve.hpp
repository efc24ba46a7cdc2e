#pragma once

#include <Eigen/Sparse>

#include <span>
#include <stdexcept>
#include <vector>

#include "pmcsynth/model.hpp"

namespace pmcsynth::linsolve {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Backend {
  krylov,     // restarted GMRES with diagonal preconditioning
  direct,     // sparse LU, factorized once per matrix
  automatic,  // krylov, falling back to direct; direct outright for many rhs
};

struct SolveOptions {
  Backend backend = Backend::automatic;
  double tol = 1e-9;     // residual contract: ||Ax-b||_inf <= tol*max(1, ||b||_inf)
  int restart = 50;
  long max_iterations = 0;  // 0: 10*n
};

/// The system (I - A[u]) over non-absorbing states plus the reward vector.
struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;  // I - A[u]
  Eigen::VectorXd rewards;             // b
  std::vector<int> row_of_state;       // -1 for absorbing states
  std::vector<int> state_of_row;

  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Instantiates the model at u and forms (I - A[u]) with b = rewards.
SparseSystem assemble(const Model& m, std::span<const double> u, const Region* region = nullptr);

/// Solves system * x = rhs to the residual contract above. Throws SolveError
/// when the requested backend cannot meet it.
Eigen::VectorXd solve(const SparseSystem& system, const Eigen::VectorXd& rhs,
                      const SolveOptions& opts = {});

/// Solves many right-hand sides against one matrix; a direct factorization is
/// reused when the backend is automatic, n <= 5000 and there are more than 8
/// right-hand sides.
std::vector<Eigen::VectorXd> solve_multi(const SparseSystem& system,
                                         std::span<const Eigen::VectorXd> rhs,
                                         const SolveOptions& opts = {});

}  // namespace pmcsynth::linsolve
