#include "pmcsynth/linsolve.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>

namespace pmcsynth::linsolve {

namespace {

bool residual_ok(const SparseSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs,
                 double tol) {
  double res = (sys.matrix * x - rhs).lpNorm<Eigen::Infinity>();
  return res <= tol * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
}

Eigen::VectorXd solve_krylov(const SparseSystem& sys, const Eigen::VectorXd& rhs,
                             const SolveOptions& opts) {
  int n = sys.dim();
  double rhs_norm2 = rhs.norm();
  if (rhs_norm2 == 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> gmres;
  gmres.set_restart(opts.restart);
  long cap = opts.max_iterations > 0 ? opts.max_iterations : 10L * std::max(n, 1);
  gmres.setMaxIterations(cap);
  // Eigen's stop rule is ||r||_2 <= tol_2 * ||b||_2; translate the
  // infinity-norm contract conservatively and re-check it afterwards.
  double tol2 = opts.tol * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()) / rhs_norm2;
  gmres.setTolerance(std::min(tol2, 1e-1));
  gmres.compute(sys.matrix);
  Eigen::VectorXd x = gmres.solve(rhs);
  if (!x.allFinite() || !residual_ok(sys, x, rhs, opts.tol))
    throw SolveError("GMRES did not reach the requested residual within " +
                     std::to_string(cap) + " iterations");
  return x;
}

class DirectSolver {
 public:
  explicit DirectSolver(const SparseSystem& sys) : sys_(sys) {
    lu_.compute(sys.matrix);
    if (lu_.info() != Eigen::Success)
      throw SolveError("sparse LU factorization failed (singular system?)");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double tol) {
    Eigen::VectorXd x = lu_.solve(rhs);
    if (!x.allFinite() || !residual_ok(sys_, x, rhs, tol))
      throw SolveError("direct solve did not meet the residual contract");
    return x;
  }

 private:
  const SparseSystem& sys_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

SparseSystem assemble(const Model& m, std::span<const double> u, const Region* region) {
  ConcreteMatrix concrete = instantiate(m, u, region);
  SparseSystem sys;
  sys.row_of_state = std::move(concrete.row_of_state);
  sys.state_of_row = std::move(concrete.state_of_row);
  int n = concrete.dim;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(concrete.entries.size() + n);
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
  for (const auto& e : concrete.entries) triplets.emplace_back(e.row, e.col, -e.value);
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  sys.rewards = Eigen::Map<const Eigen::VectorXd>(concrete.rewards.data(), n);
  return sys;
}

Eigen::VectorXd solve(const SparseSystem& system, const Eigen::VectorXd& rhs,
                      const SolveOptions& opts) {
  if (rhs.size() != system.dim()) throw SolveError("right-hand side has the wrong dimension");
  if (system.dim() == 0) return Eigen::VectorXd();
  switch (opts.backend) {
    case Backend::krylov:
      return solve_krylov(system, rhs, opts);
    case Backend::direct:
      return DirectSolver(system).solve(rhs, opts.tol);
    case Backend::automatic:
      try {
        return solve_krylov(system, rhs, opts);
      } catch (const SolveError&) {
        return DirectSolver(system).solve(rhs, opts.tol);
      }
  }
  throw SolveError("unknown backend");
}

std::vector<Eigen::VectorXd> solve_multi(const SparseSystem& system,
                                         std::span<const Eigen::VectorXd> rhs,
                                         const SolveOptions& opts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(rhs.size());
  if (rhs.empty()) return out;
  bool direct = opts.backend == Backend::direct ||
                (opts.backend == Backend::automatic && system.dim() <= 5000 && rhs.size() > 8);
  if (direct && system.dim() > 0) {
    DirectSolver solver(system);
    for (const auto& b : rhs) {
      if (b.size() != system.dim()) throw SolveError("right-hand side has the wrong dimension");
      out.push_back(solver.solve(b, opts.tol));
    }
    return out;
  }
  for (const auto& b : rhs) out.push_back(solve(system, b, opts));
  return out;
}

}  // namespace pmcsynth::linsolve
