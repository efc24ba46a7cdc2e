#include "pmcsynth/descent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "pmcsynth/generator.hpp"

namespace pmcsynth {

std::string method_to_string(Method m, bool sign) {
  std::string base;
  switch (m) {
    case Method::plain: base = "plain"; break;
    case Method::momentum: base = "momentum"; break;
    case Method::nag: base = "nag"; break;
    case Method::rmsprop: base = "rmsprop"; break;
    case Method::adam: base = "adam"; break;
    case Method::radam: base = "radam"; break;
  }
  return sign ? base + "-sign" : base;
}

std::pair<Method, bool> method_from_string(const std::string& name) {
  std::string base = name;
  bool sign = false;
  if (base.size() > 5 && base.substr(base.size() - 5) == "-sign") {
    sign = true;
    base = base.substr(0, base.size() - 5);
  }
  Method m;
  if (base == "plain")
    m = Method::plain;
  else if (base == "momentum")
    m = Method::momentum;
  else if (base == "nag")
    m = Method::nag;
  else if (base == "rmsprop")
    m = Method::rmsprop;
  else if (base == "adam")
    m = Method::adam;
  else if (base == "radam")
    m = Method::radam;
  else
    throw std::invalid_argument("unknown method '" + name + "'");
  return {m, sign};
}

std::string restriction_to_string(Restriction r) {
  switch (r) {
    case Restriction::projection: return "projection";
    case Restriction::barrier: return "barrier";
    case Restriction::logistic: return "logistic";
  }
  return "?";
}

Restriction restriction_from_string(const std::string& name) {
  if (name == "projection") return Restriction::projection;
  if (name == "barrier") return Restriction::barrier;
  if (name == "logistic") return Restriction::logistic;
  throw std::invalid_argument("unknown restriction '" + name + "'");
}

void validate_config(const DescentConfig& cfg) {
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (!(cfg.avg_decay >= 0 && cfg.avg_decay < 1))
    throw std::invalid_argument("average decay must lie in [0,1)");
  if (!(cfg.sq_decay >= 0 && cfg.sq_decay < 1))
    throw std::invalid_argument("squared average decay must lie in [0,1)");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(cfg.step_threshold > 0)) throw std::invalid_argument("step threshold must be positive");
  if (!(cfg.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  bool adaptive = cfg.method == Method::rmsprop || cfg.method == Method::adam ||
                  cfg.method == Method::radam;
  if (cfg.sign && adaptive)
    throw std::invalid_argument("sign variants exist only for plain, momentum and nag");
  if (cfg.restriction == Restriction::barrier &&
      !(cfg.mu0 > 0 && cfg.mu_factor > 0 && cfg.mu_factor < 1 && cfg.mu_floor > 0))
    throw std::invalid_argument("barrier schedule needs mu0 > 0, 0 < factor < 1, floor > 0");
}

void OptimizerState::reset_history() {
  std::fill(velocity.begin(), velocity.end(), 0.0);
  std::fill(sq_avg.begin(), sq_avg.end(), 0.0);
  std::fill(moment.begin(), moment.end(), 0.0);
  std::fill(update_count.begin(), update_count.end(), 0L);
  std::fill(last_step.begin(), last_step.end(), std::numeric_limits<double>::quiet_NaN());
  t = 0;
}

std::vector<int> batch_indices(long t, int n_params, int k) {
  if (k < 1) throw std::invalid_argument("batch size must be at least 1");
  std::vector<int> out;
  out.reserve(std::min(k, n_params));
  for (int j = 0; j < k; ++j) {
    int idx = static_cast<int>((t * k + j) % n_params);
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

std::vector<double> apply_sign(std::vector<double> grads) {
  for (double& g : grads) g = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
  return grads;
}

std::vector<double> SignedObjective::gradient(std::span<const double> w,
                                              std::span<const int> idx) {
  std::vector<double> g = obj_.gradient(w, idx);
  if (sign_ < 0)
    for (double& v : g) v = -v;
  return g;
}

BarrierObjective::BarrierObjective(AscentObjective& inner, Region region, double mu)
    : inner_(inner), region_(std::move(region)), mu_(mu) {
  if (!(mu > 0)) throw std::invalid_argument("barrier weight must be positive");
}

void BarrierObjective::require_inside(std::span<const double> w) const {
  if (!region_.strictly_contains(w))
    throw RegionEscape("barrier objective evaluated outside the open region");
}

double BarrierObjective::value(std::span<const double> w) {
  require_inside(w);
  double bar = 0.0;
  for (int i = 0; i < region_.size(); ++i) {
    double lo = w[i] - region_.bounds[i].lb;
    double hi = region_.bounds[i].ub - w[i];
    // Nearest wall; midpoint ties resolve to the upper wall.
    bar += std::log(w[i] >= region_.midpoint(i) ? hi : lo);
  }
  return inner_.value(w) + mu_ * bar;
}

std::vector<double> BarrierObjective::gradient(std::span<const double> w,
                                               std::span<const int> idx) {
  require_inside(w);
  std::vector<double> g = inner_.gradient(w, idx);
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    if (w[i] >= region_.midpoint(i))
      g[k] += mu_ * (-1.0 / (region_.bounds[i].ub - w[i]));
    else
      g[k] += mu_ * (1.0 / (w[i] - region_.bounds[i].lb));
  }
  return g;
}

void BarrierObjective::clamp(std::span<double> w) const {
  for (int i = 0; i < region_.size(); ++i) {
    double margin = 1e-9 * region_.width(i);
    w[i] = std::clamp(w[i], region_.bounds[i].lb + margin, region_.bounds[i].ub - margin);
  }
}

LogisticObjective::LogisticObjective(AscentObjective& inner, Region region, bool compat)
    : inner_(inner), region_(std::move(region)), compat_(compat) {}

Instantiation LogisticObjective::to_model(std::span<const double> q) const {
  Instantiation u(q.size());
  for (int i = 0; i < region_.size(); ++i) {
    double q0 = 0.5 * region_.width(i);
    double s = 1.0 / (1.0 + std::exp(-(q[i] - q0)));
    u[i] = region_.width(i) * s + region_.bounds[i].lb;
  }
  return u;
}

std::vector<double> LogisticObjective::from_model(std::span<const double> u) const {
  std::vector<double> q(u.size());
  for (int i = 0; i < region_.size(); ++i) {
    double w = region_.width(i);
    double q0 = 0.5 * w;
    double interior =
        std::clamp(u[i], region_.bounds[i].lb + 1e-12 * w, region_.bounds[i].ub - 1e-12 * w);
    q[i] = q0 - std::log(w / (interior - region_.bounds[i].lb) - 1.0);
  }
  return q;
}

double LogisticObjective::value(std::span<const double> q) {
  Instantiation u = to_model(q);
  return inner_.value(u);
}

std::vector<double> LogisticObjective::gradient(std::span<const double> q,
                                                std::span<const int> idx) {
  Instantiation u = to_model(q);
  std::vector<double> g = inner_.gradient(u, idx);
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    if (compat_) {
      double s = 1.0 / (1.0 + std::exp(-q[i]));
      g[k] = s * (1.0 - s) * g[k];
    } else {
      double q0 = 0.5 * region_.width(i);
      double s = 1.0 / (1.0 + std::exp(-(q[i] - q0)));
      g[k] = region_.width(i) * s * (1.0 - s) * g[k];
    }
  }
  return g;
}

BarrierObjective restrict_barrier(AscentObjective& obj, Region region, double mu) {
  return BarrierObjective(obj, std::move(region), mu);
}

LogisticObjective restrict_logistic(AscentObjective& obj, Region region, bool compat) {
  return LogisticObjective(obj, std::move(region), compat);
}

std::vector<int> restrict_projection(OptimizerState& state, const Region& region) {
  std::vector<int> clamped;
  for (int i = 0; i < region.size(); ++i) {
    double v = std::clamp(state.u[i], region.bounds[i].lb, region.bounds[i].ub);
    if (v != state.u[i]) {
      state.u[i] = v;
      state.velocity[i] = 0.0;
      state.sq_avg[i] = 0.0;
      state.moment[i] = 0.0;
      clamped.push_back(i);
    }
  }
  return clamped;
}

void plain_update(OptimizerState& state, std::span<const int> idx,
                  std::span<const double> grads, const DescentConfig& cfg) {
  for (size_t k = 0; k < idx.size(); ++k) state.u[idx[k]] += cfg.learning_rate * grads[k];
}

void momentum_update(OptimizerState& state, std::span<const int> idx,
                     std::span<const double> grads, const DescentConfig& cfg) {
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    state.velocity[i] = cfg.avg_decay * state.velocity[i] + cfg.learning_rate * grads[k];
    state.u[i] += state.velocity[i];
  }
}

void nag_update(OptimizerState& state, AscentObjective& obj, std::span<const int> idx,
                const DescentConfig& cfg) {
  std::vector<double> lookahead = state.u;
  for (int i : idx) lookahead[i] += cfg.avg_decay * state.velocity[i];
  obj.clamp(lookahead);
  std::vector<double> grads = obj.gradient(lookahead, idx);
  if (cfg.sign) grads = apply_sign(std::move(grads));
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    state.velocity[i] = cfg.avg_decay * state.velocity[i] + cfg.learning_rate * grads[k];
    state.u[i] += state.velocity[i];
  }
}

void rmsprop_update(OptimizerState& state, std::span<const int> idx,
                    std::span<const double> grads, const DescentConfig& cfg) {
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    state.sq_avg[i] = cfg.sq_decay * state.sq_avg[i] + (1.0 - cfg.sq_decay) * grads[k] * grads[k];
    state.u[i] += cfg.learning_rate / std::sqrt(state.sq_avg[i] + cfg.epsilon) * grads[k];
  }
}

void adam_update(OptimizerState& state, std::span<const int> idx,
                 std::span<const double> grads, const DescentConfig& cfg) {
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    long t = ++state.update_count[i];
    state.moment[i] = cfg.avg_decay * state.moment[i] + (1.0 - cfg.avg_decay) * grads[k];
    state.sq_avg[i] = cfg.sq_decay * state.sq_avg[i] + (1.0 - cfg.sq_decay) * grads[k] * grads[k];
    double mhat = state.moment[i] / (1.0 - std::pow(cfg.avg_decay, t));
    double vhat = state.sq_avg[i] / (1.0 - std::pow(cfg.sq_decay, t));
    state.u[i] += cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

void radam_update(OptimizerState& state, std::span<const int> idx,
                  std::span<const double> grads, const DescentConfig& cfg) {
  double rho_inf = 2.0 / (1.0 - cfg.sq_decay) - 1.0;
  for (size_t k = 0; k < idx.size(); ++k) {
    int i = idx[k];
    long t = ++state.update_count[i];
    state.moment[i] = cfg.avg_decay * state.moment[i] + (1.0 - cfg.avg_decay) * grads[k];
    state.sq_avg[i] = cfg.sq_decay * state.sq_avg[i] + (1.0 - cfg.sq_decay) * grads[k] * grads[k];
    double mhat = state.moment[i] / (1.0 - std::pow(cfg.avg_decay, t));
    double beta_t = std::pow(cfg.sq_decay, t);
    double rho_t = rho_inf - 2.0 * t * beta_t / (1.0 - beta_t);
    if (rho_t > 4.0) {
      double vhat = state.sq_avg[i] / (1.0 - beta_t);
      double r = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                           ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
      state.u[i] += cfg.learning_rate * r * mhat / (std::sqrt(vhat) + cfg.epsilon);
    } else {
      state.u[i] += cfg.learning_rate * mhat;
    }
  }
}

bool local_optimum(const OptimizerState& state, double step_threshold) {
  for (double s : state.last_step)
    if (std::isnan(s) || s >= step_threshold) return false;
  return !state.last_step.empty();
}

namespace {

struct BoxClamp : AscentObjective {
  BoxClamp(AscentObjective& inner, const Region& region) : inner_(inner), region_(region) {}
  int num_params() const override { return inner_.num_params(); }
  double value(std::span<const double> w) override { return inner_.value(w); }
  std::vector<double> gradient(std::span<const double> w, std::span<const int> idx) override {
    return inner_.gradient(w, idx);
  }
  void clamp(std::span<double> w) const override {
    for (int i = 0; i < region_.size(); ++i)
      w[i] = std::clamp(w[i], region_.bounds[i].lb, region_.bounds[i].ub);
  }
  AscentObjective& inner_;
  const Region& region_;
};

bool better(Objective::Direction dir, double candidate, double incumbent) {
  if (std::isnan(incumbent)) return true;
  return dir == Objective::Direction::minimize ? candidate < incumbent : candidate > incumbent;
}

}  // namespace

RunResult feasibility_search(Objective& obj, const Region& region, const DescentConfig& cfg) {
  validate_config(cfg);
  int n = obj.num_params();
  if (region.size() != n) throw std::invalid_argument("region does not match the objective");
  if (n == 0) throw std::invalid_argument("objective has no parameters");

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  long solves_v0 = obj.value_solves();
  long solves_g0 = obj.gradient_solves();

  std::vector<double> mu_stages;
  if (cfg.restriction == Restriction::barrier) {
    for (double mu = cfg.mu0; mu >= cfg.mu_floor * (1.0 - 1e-9); mu *= cfg.mu_factor)
      mu_stages.push_back(mu);
  } else {
    mu_stages.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  long stage_budget =
      std::max(1L, cfg.max_iterations / static_cast<long>(mu_stages.size()));

  RunResult result;
  result.mu_final = mu_stages.front();
  long total_iterations = 0;
  long total_restarts = 0;

  auto finish = [&](RunResult::Status status, Instantiation u, double value) {
    result.status = status;
    result.instantiation = std::move(u);
    result.value = value;
    result.iterations = total_iterations;
    result.restarts = total_restarts;
    result.value_solves = obj.value_solves() - solves_v0;
    result.gradient_solves = obj.gradient_solves() - solves_g0;
    result.wall_seconds = elapsed();
    if (std::isnan(result.best_value) && !result.instantiation.empty()) {
      result.best_value = value;
      result.best_instantiation = result.instantiation;
    }
    for (size_t i = 0; i < result.instantiation.size(); ++i) {
      double v = result.instantiation[i];
      if (std::abs(v - region.bounds[i].lb) <= 1e-6 || std::abs(region.bounds[i].ub - v) <= 1e-6)
        ++result.easy_parameters;
    }
    return result;
  };

  for (double mu : mu_stages) {
    result.mu_final = mu;
    Rng rng(cfg.seed);

    SignedObjective ascent(obj);
    BoxClamp projected(ascent, region);
    std::optional<BarrierObjective> barrier;
    std::optional<LogisticObjective> logistic;
    AscentObjective* engine = &projected;
    if (cfg.restriction == Restriction::barrier) {
      barrier.emplace(ascent, region, mu);
      engine = &*barrier;
    } else if (cfg.restriction == Restriction::logistic) {
      logistic.emplace(ascent, region, cfg.logistic_compat);
      engine = &*logistic;
    }

    // Start at mid + 1e-6, clamped into the region (interior for the barrier),
    // unless the caller pinned a start point.
    Instantiation start(n);
    for (int i = 0; i < n; ++i) {
      double s = cfg.start.empty() ? region.midpoint(i) + 1e-6 : cfg.start[i];
      start[i] = std::clamp(s, region.bounds[i].lb, region.bounds[i].ub);
    }
    if (barrier) barrier->clamp(start);

    OptimizerState state(n);
    state.u = logistic ? logistic->from_model(start) : start;

    long stage_iterations = 0;
    while (true) {
      Instantiation u_model = logistic ? logistic->to_model(state.u) : state.u;
      // A step that left the region means the barrier was too weak for this
      // learning rate; give up on the stage and let the schedule lower mu.
      if (barrier && !region.strictly_contains(u_model)) break;
      double val = obj.value(u_model);
      if (cfg.trace) cfg.trace(total_iterations, u_model, val);
      if (better(obj.direction(), val, result.best_value)) {
        result.best_value = val;
        result.best_instantiation = u_model;
      }
      if (comparator_satisfied(cfg.comparator, val, cfg.bound)) {
        if (!region.contains(u_model))
          throw std::logic_error("feasible point left the region");  // soundness invariant
        return finish(RunResult::Status::feasible, std::move(u_model), val);
      }

      if (stage_iterations >= stage_budget || total_iterations >= cfg.max_iterations) break;
      if (cfg.time_limit_seconds > 0 && elapsed() >= cfg.time_limit_seconds) break;

      if (local_optimum(state, cfg.step_threshold)) {
        Instantiation draw(n);
        for (int i = 0; i < n; ++i)
          draw[i] = rng.next_in(region.bounds[i].lb, region.bounds[i].ub);
        if (barrier) barrier->clamp(draw);
        state.u = logistic ? logistic->from_model(draw) : draw;
        state.reset_history();
        ++total_restarts;
        ++state.restarts;
      }

      std::vector<int> batch = batch_indices(state.t, n, cfg.batch_size);
      std::vector<double> before(batch.size());
      for (size_t k = 0; k < batch.size(); ++k) before[k] = state.u[batch[k]];

      try {
        if (cfg.method == Method::nag) {
          nag_update(state, *engine, batch, cfg);
        } else {
          std::vector<double> grads = engine->gradient(state.u, batch);
          if (cfg.sign) grads = apply_sign(std::move(grads));
          switch (cfg.method) {
            case Method::plain: plain_update(state, batch, grads, cfg); break;
            case Method::momentum: momentum_update(state, batch, grads, cfg); break;
            case Method::rmsprop: rmsprop_update(state, batch, grads, cfg); break;
            case Method::adam: adam_update(state, batch, grads, cfg); break;
            case Method::radam: radam_update(state, batch, grads, cfg); break;
            case Method::nag: break;  // handled above
          }
        }
      } catch (const RegionEscape&) {
        break;
      }
      if (cfg.restriction == Restriction::projection) restrict_projection(state, region);

      for (size_t k = 0; k < batch.size(); ++k)
        state.last_step[batch[k]] = std::abs(state.u[batch[k]] - before[k]);
      ++state.t;
      ++stage_iterations;
      ++total_iterations;
    }

    if (total_iterations >= cfg.max_iterations) break;
    if (cfg.time_limit_seconds > 0 && elapsed() >= cfg.time_limit_seconds) break;
  }

  return finish(RunResult::Status::exhausted, result.best_instantiation, result.best_value);
}

}  // namespace pmcsynth
