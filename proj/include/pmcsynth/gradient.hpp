#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pmcsynth/linsolve.hpp"
#include "pmcsynth/model.hpp"
#include "pmcsynth/textio.hpp"

namespace pmcsynth {

/// A differentiable objective over the parameter space. `value` is the raw
/// measure; `direction` says which way the search should drive it. The
/// descent engine negates internally so that it always ascends.
class Objective {
 public:
  enum class Direction { maximize, minimize };

  virtual ~Objective() = default;
  virtual int num_params() const = 0;
  virtual double value(std::span<const double> u) = 0;
  /// Partial derivatives of value at u for the requested parameter indices.
  virtual std::vector<double> gradient(std::span<const double> u,
                                       std::span<const int> params) = 0;
  virtual Direction direction() const { return Direction::maximize; }

  /// Linear solves performed so far (value solves / per-parameter solves).
  long value_solves() const { return value_solves_; }
  long gradient_solves() const { return gradient_solves_; }

 protected:
  long value_solves_ = 0;
  long gradient_solves_ = 0;
};

/// Objective built from closures; used for the worked one-dimensional
/// examples and in tests.
class FunctionObjective : public Objective {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using PartialFn = std::function<double(std::span<const double>, int)>;

  FunctionObjective(int num_params, ValueFn value, PartialFn partial,
                    Direction dir = Direction::maximize)
      : n_(num_params), value_(std::move(value)), partial_(std::move(partial)), dir_(dir) {}

  int num_params() const override { return n_; }
  double value(std::span<const double> u) override {
    ++value_solves_;
    return value_(u);
  }
  std::vector<double> gradient(std::span<const double> u, std::span<const int> params) override {
    std::vector<double> g;
    g.reserve(params.size());
    for (int p : params) {
      ++gradient_solves_;
      g.push_back(partial_(u, p));
    }
    return g;
  }
  Direction direction() const override { return dir_; }

 private:
  int n_;
  ValueFn value_;
  PartialFn partial_;
  Direction dir_;
};

/// Expected reward from the initial state at u.
double expected_reward(const Model& pmc, std::span<const double> u,
                       const Region* region = nullptr, const linsolve::SolveOptions& opts = {});

/// Exact partials via the derivative equation system: one value solve shared
/// across the subset plus one solve per requested parameter.
std::vector<double> gradient_eqsys(const Model& pmc, std::span<const double> u,
                                   std::span<const int> params, const Region* region = nullptr,
                                   const linsolve::SolveOptions& opts = {});

/// The same partial computed as the expected reward of the derived automaton;
/// an independent route used for cross-checking.
double gradient_via_derived(const Model& pmc, int param, std::span<const double> u,
                            const linsolve::SolveOptions& opts = {});

/// Central difference (f(u+h e_p) - f(u-h e_p)) / 2h; both probe points must
/// stay inside the region.
double finite_difference(Objective& obj, std::span<const double> u, int param, double h,
                         const Region& region);

/// Expected-reward (or, after the reachability transform, reachability) value
/// and exact gradients of a pMC, with the value solve cached per point and
/// the symbolic derivative patterns precomputed once.
class PmcObjective : public Objective {
 public:
  /// `pmc` must be preprocessed. For reachability queries the reward
  /// transform is applied internally.
  PmcObjective(const Model& pmc, Region region, PropertyQuery query,
               linsolve::SolveOptions opts = {});

  int num_params() const override;
  double value(std::span<const double> u) override;
  std::vector<double> gradient(std::span<const double> u, std::span<const int> params) override;
  Direction direction() const override;

  double gradient_via_derived(int param, std::span<const double> u);

  const Model& model() const { return model_; }
  const Region& region() const { return region_; }
  const PropertyQuery& query() const { return query_; }

 private:
  void ensure_solution(std::span<const double> u);

  Model model_;
  Region region_;
  PropertyQuery query_;
  linsolve::SolveOptions opts_;

  struct DerivEntry {
    int row;  // system row of the source state
    int col;  // system row of the target state
    Polynomial dp;
  };
  std::vector<std::vector<DerivEntry>> deriv_patterns_;  // per parameter

  std::vector<double> cached_u_;
  std::optional<linsolve::SparseSystem> cached_system_;
  Eigen::VectorXd cached_x_;
};

/// Wires a preprocessed pMC and a query into an objective: reachability
/// queries go through the reward transform, the direction follows the
/// comparator, and expected-reward queries require good to be reached almost
/// surely.
std::unique_ptr<PmcObjective> make_pmc_objective(const Model& pmc, Region region,
                                                 PropertyQuery query,
                                                 linsolve::SolveOptions opts = {});

}  // namespace pmcsynth
