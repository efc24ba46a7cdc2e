#include "pmcsynth/gradient.hpp"

#include <algorithm>
#include <cmath>

namespace pmcsynth {

namespace {

double value_at_initial(const Model& m, const linsolve::SparseSystem& sys,
                        const Eigen::VectorXd& x) {
  int row = sys.row_of_state[m.initial];
  return row < 0 ? 0.0 : x[row];
}

void require_almost_sure(const Model& pmc) {
  if (pmc.semantics == TransitionSemantics::stochastic && bad_reachable(pmc))
    throw ModelError(
        "expected reward is undefined: the bad state is reachable from the initial state");
}

}  // namespace

double expected_reward(const Model& pmc, std::span<const double> u, const Region* region,
                       const linsolve::SolveOptions& opts) {
  require_almost_sure(pmc);
  linsolve::SparseSystem sys = linsolve::assemble(pmc, u, region);
  Eigen::VectorXd x = linsolve::solve(sys, sys.rewards, opts);
  return value_at_initial(pmc, sys, x);
}

std::vector<double> gradient_eqsys(const Model& pmc, std::span<const double> u,
                                   std::span<const int> params, const Region* region,
                                   const linsolve::SolveOptions& opts) {
  require_almost_sure(pmc);
  linsolve::SparseSystem sys = linsolve::assemble(pmc, u, region);
  Eigen::VectorXd x = linsolve::solve(sys, sys.rewards, opts);

  std::vector<double> out(params.size(), 0.0);
  int init_row = sys.row_of_state[pmc.initial];
  if (init_row < 0) return out;
  std::vector<Eigen::VectorXd> rhss;
  std::vector<size_t> rhs_slot;
  for (size_t i = 0; i < params.size(); ++i) {
    int p = params[i];
    if (p < 0 || p >= pmc.params->size()) throw ModelError("parameter index out of range");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.dim());
    bool nonzero = false;
    for (int s = 0; s < pmc.num_states(); ++s) {
      int row = sys.row_of_state[s];
      if (row < 0) continue;
      for (const auto& [t, poly] : pmc.rows[s]) {
        int col = sys.row_of_state[t];
        if (col < 0 || !poly.depends_on(p)) continue;
        double d = poly.derivative(p).eval(u);
        if (d != 0.0) {
          rhs[row] += d * x[col];
          nonzero = true;
        }
      }
    }
    if (!nonzero) continue;
    rhss.push_back(std::move(rhs));
    rhs_slot.push_back(i);
  }
  std::vector<Eigen::VectorXd> sols = linsolve::solve_multi(sys, rhss, opts);
  for (size_t k = 0; k < sols.size(); ++k) out[rhs_slot[k]] = sols[k][init_row];
  return out;
}

double gradient_via_derived(const Model& pmc, int param, std::span<const double> u,
                            const linsolve::SolveOptions& opts) {
  WeightedAutomaton wfa = derived_automaton(pmc, param);
  linsolve::SparseSystem sys = linsolve::assemble(wfa, u, nullptr);
  Eigen::VectorXd x = linsolve::solve(sys, sys.rewards, opts);
  return value_at_initial(wfa, sys, x);
}

double finite_difference(Objective& obj, std::span<const double> u, int param, double h,
                         const Region& region) {
  if (h <= 0) throw std::invalid_argument("finite difference step must be positive");
  std::vector<double> lo(u.begin(), u.end());
  std::vector<double> hi(u.begin(), u.end());
  lo[param] -= h;
  hi[param] += h;
  if (!region.contains(lo) || !region.contains(hi))
    throw ModelError("finite-difference step leaves the region");
  return (obj.value(hi) - obj.value(lo)) / (2.0 * h);
}

PmcObjective::PmcObjective(const Model& pmc, Region region, PropertyQuery query,
                           linsolve::SolveOptions opts)
    : region_(std::move(region)), query_(query), opts_(opts) {
  if (pmc.good < 0) throw ModelError("objective requires a preprocessed model");
  if (query.kind == QueryKind::reachability) {
    model_ = reachability_to_reward(pmc);
  } else {
    require_almost_sure(pmc);
    model_ = pmc;
  }
  if (!region_.params || !(*region_.params == *model_.params))
    throw ModelError("region does not match the model's parameter set");

  // System indexing is structural (the absorbing set does not depend on u).
  int n = model_.num_states();
  std::vector<int> row_of_state(n, -1);
  int dim = 0;
  for (int s = 0; s < n; ++s)
    if (!model_.is_absorbing(s)) row_of_state[s] = dim++;

  deriv_patterns_.resize(model_.params->size());
  for (int s = 0; s < n; ++s) {
    if (row_of_state[s] < 0) continue;
    for (const auto& [t, poly] : model_.rows[s]) {
      if (row_of_state[t] < 0) continue;  // x is pinned to 0 on absorbing states
      for (int p = 0; p < model_.params->size(); ++p) {
        if (!poly.depends_on(p)) continue;
        Polynomial d = poly.derivative(p);
        if (!d.is_zero())
          deriv_patterns_[p].push_back({row_of_state[s], row_of_state[t], std::move(d)});
      }
    }
  }
}

int PmcObjective::num_params() const { return model_.params->size(); }

Objective::Direction PmcObjective::direction() const {
  return (query_.cmp == Comparator::greater || query_.cmp == Comparator::geq)
             ? Direction::maximize
             : Direction::minimize;
}

void PmcObjective::ensure_solution(std::span<const double> u) {
  if (cached_system_ && cached_u_.size() == u.size() &&
      std::equal(u.begin(), u.end(), cached_u_.begin()))
    return;
  cached_system_ = linsolve::assemble(model_, u, &region_);
  cached_x_ = linsolve::solve(*cached_system_, cached_system_->rewards, opts_);
  cached_u_.assign(u.begin(), u.end());
  ++value_solves_;
}

double PmcObjective::value(std::span<const double> u) {
  ensure_solution(u);
  return value_at_initial(model_, *cached_system_, cached_x_);
}

std::vector<double> PmcObjective::gradient(std::span<const double> u,
                                           std::span<const int> params) {
  ensure_solution(u);
  const auto& sys = *cached_system_;
  std::vector<double> out(params.size(), 0.0);
  int init_row = sys.row_of_state[model_.initial];
  if (init_row < 0) return out;  // initial state absorbing: constant objective

  std::vector<Eigen::VectorXd> rhss;
  std::vector<size_t> rhs_slot;
  for (size_t i = 0; i < params.size(); ++i) {
    int p = params[i];
    if (p < 0 || p >= num_params()) throw ModelError("parameter index out of range");
    if (deriv_patterns_[p].empty()) continue;  // parameter absent: zero partial
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.dim());
    for (const auto& e : deriv_patterns_[p]) rhs[e.row] += e.dp.eval(u) * cached_x_[e.col];
    rhss.push_back(std::move(rhs));
    rhs_slot.push_back(i);
  }
  std::vector<Eigen::VectorXd> sols = linsolve::solve_multi(sys, rhss, opts_);
  gradient_solves_ += static_cast<long>(sols.size());
  for (size_t k = 0; k < sols.size(); ++k) out[rhs_slot[k]] = sols[k][init_row];
  return out;
}

double PmcObjective::gradient_via_derived(int param, std::span<const double> u) {
  ++gradient_solves_;
  return pmcsynth::gradient_via_derived(model_, param, u, opts_);
}

std::unique_ptr<PmcObjective> make_pmc_objective(const Model& pmc, Region region,
                                                 PropertyQuery query,
                                                 linsolve::SolveOptions opts) {
  return std::make_unique<PmcObjective>(pmc, std::move(region), query, opts);
}

}  // namespace pmcsynth
