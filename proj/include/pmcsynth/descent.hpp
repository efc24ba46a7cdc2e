#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pmcsynth/gradient.hpp"
#include "pmcsynth/model.hpp"
#include "pmcsynth/textio.hpp"

namespace pmcsynth {

enum class Method { plain, momentum, nag, rmsprop, adam, radam };
enum class Restriction { projection, barrier, logistic };

std::string method_to_string(Method m, bool sign);
/// Accepts "plain", "momentum-sign", "radam", ... Throws on unknown names.
std::pair<Method, bool> method_from_string(const std::string& name);
std::string restriction_to_string(Restriction r);
Restriction restriction_from_string(const std::string& name);

struct DescentConfig {
  Method method = Method::momentum;
  bool sign = false;  // only valid for plain / momentum / nag
  Restriction restriction = Restriction::projection;

  double learning_rate = 0.1;  // eta
  double avg_decay = 0.9;      // gamma
  double sq_decay = 0.999;     // beta
  double epsilon = 1e-8;       // division guard
  int batch_size = 32;         // k
  double step_threshold = 1e-6;

  double mu0 = 0.1;  // barrier weight schedule: mu0, mu0*mu_factor, ... >= mu_floor
  double mu_factor = 0.1;
  double mu_floor = 1e-6;

  Comparator comparator = Comparator::geq;
  double bound = 0.0;  // lambda

  std::uint64_t seed = 0;
  long max_iterations = 200000;
  double time_limit_seconds = 0.0;  // 0: unlimited
  bool logistic_compat = false;

  /// Empty: start at mid + 1e-6 per coordinate. Non-empty: start here
  /// (clamped into the region); used to replay fixed trajectories.
  Instantiation start;

  /// Called at every loop top with the model-space point and its value.
  std::function<void(long iteration, std::span<const double> u, double value)> trace;
};

void validate_config(const DescentConfig& cfg);

struct OptimizerState {
  explicit OptimizerState(int n)
      : u(n, 0.0),
        velocity(n, 0.0),
        sq_avg(n, 0.0),
        moment(n, 0.0),
        update_count(n, 0),
        last_step(n, std::numeric_limits<double>::quiet_NaN()) {}

  std::vector<double> u;  // engine coordinates (q under the logistic restriction)
  std::vector<double> velocity;
  std::vector<double> sq_avg;
  std::vector<double> moment;
  std::vector<long> update_count;   // per-parameter steps (bias correction)
  std::vector<double> last_step;    // net applied step sizes; NaN until set
  long t = 0;                       // steps since the last (re)start
  long restarts = 0;

  /// Clears moments, counters and step records; keeps u.
  void reset_history();
};

struct RunResult {
  enum class Status { feasible, exhausted };
  Status status = Status::exhausted;
  Instantiation instantiation;  // found point (feasible) or best seen
  double value = 0.0;
  long iterations = 0;
  long restarts = 0;
  long value_solves = 0;
  long gradient_solves = 0;
  double wall_seconds = 0.0;
  double best_value = std::numeric_limits<double>::quiet_NaN();
  Instantiation best_instantiation;
  double mu_final = std::numeric_limits<double>::quiet_NaN();  // barrier only
  /// Parameters within 1e-6 of an interval endpoint at the reported point.
  int easy_parameters = 0;
};

/// The k parameters updated at step t: {(t*k + j) mod n : j = 0..k-1},
/// deduplicated. k = 1 is the round-robin rule i(t) = t mod n; k = n updates
/// every parameter.
std::vector<int> batch_indices(long t, int n_params, int k);

/// Replaces each gradient component by its sign in {-1, 0, +1}.
std::vector<double> apply_sign(std::vector<double> grads);

/// Ascent-facing view used by the update rules: value/gradient already point
/// uphill regardless of the underlying objective's direction, and `clamp`
/// pulls tentative points (the NAG lookahead) back into the evaluable domain.
class AscentObjective {
 public:
  virtual ~AscentObjective() = default;
  virtual int num_params() const = 0;
  virtual double value(std::span<const double> w) = 0;
  virtual std::vector<double> gradient(std::span<const double> w, std::span<const int> idx) = 0;
  virtual void clamp(std::span<double>) const {}
};

/// Flattens an Objective's direction: minimization becomes ascent on the
/// negated value.
class SignedObjective : public AscentObjective {
 public:
  explicit SignedObjective(Objective& obj)
      : obj_(obj), sign_(obj.direction() == Objective::Direction::minimize ? -1.0 : 1.0) {}
  int num_params() const override { return obj_.num_params(); }
  double value(std::span<const double> w) override { return sign_ * obj_.value(w); }
  std::vector<double> gradient(std::span<const double> w, std::span<const int> idx) override;
  double sign() const { return sign_; }

 private:
  Objective& obj_;
  double sign_;
};

/// Thrown by the barrier objective when asked to evaluate outside the open
/// region; the search treats it as a failed stage, not a hard error.
struct RegionEscape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Log-barrier wrapper: value' = value + mu * sum_i log(distance to the
/// nearest endpoint of R_i); the gradient term pushes away from that wall.
class BarrierObjective : public AscentObjective {
 public:
  BarrierObjective(AscentObjective& inner, Region region, double mu);
  int num_params() const override { return inner_.num_params(); }
  double value(std::span<const double> w) override;
  std::vector<double> gradient(std::span<const double> w, std::span<const int> idx) override;
  void clamp(std::span<double> w) const override;  // into the open interior

 private:
  void require_inside(std::span<const double> w) const;
  AscentObjective& inner_;
  Region region_;
  double mu_;
};

/// Sigmoid reparametrization onto unconstrained coordinates q with
/// u_i = (ub-lb) / (1 + exp(-(q_i - q0_i))) + lb, q0_i = (ub-lb)/2. The exact
/// chain rule is the default; compat mode applies e^q * g / (1+e^q)^2
/// verbatim instead.
class LogisticObjective : public AscentObjective {
 public:
  LogisticObjective(AscentObjective& inner, Region region, bool compat);
  int num_params() const override { return inner_.num_params(); }
  double value(std::span<const double> q) override;
  std::vector<double> gradient(std::span<const double> q, std::span<const int> idx) override;

  Instantiation to_model(std::span<const double> q) const;
  std::vector<double> from_model(std::span<const double> u) const;

 private:
  AscentObjective& inner_;
  Region region_;
  bool compat_;
};

BarrierObjective restrict_barrier(AscentObjective& obj, Region region, double mu);
LogisticObjective restrict_logistic(AscentObjective& obj, Region region, bool compat = false);

/// Clamps u into the region; clamped coordinates get velocity and both moment
/// accumulators reset. Returns the indices that were clamped.
std::vector<int> restrict_projection(OptimizerState& state, const Region& region);

// One optimizer step each. Gradients are ascent-facing and aligned with idx.
void plain_update(OptimizerState& state, std::span<const int> idx,
                  std::span<const double> grads, const DescentConfig& cfg);
void momentum_update(OptimizerState& state, std::span<const int> idx,
                     std::span<const double> grads, const DescentConfig& cfg);
/// Evaluates the gradient itself at the lookahead point u + gamma*v.
void nag_update(OptimizerState& state, AscentObjective& obj, std::span<const int> idx,
                const DescentConfig& cfg);
void rmsprop_update(OptimizerState& state, std::span<const int> idx,
                    std::span<const double> grads, const DescentConfig& cfg);
void adam_update(OptimizerState& state, std::span<const int> idx,
                 std::span<const double> grads, const DescentConfig& cfg);
void radam_update(OptimizerState& state, std::span<const int> idx,
                  std::span<const double> grads, const DescentConfig& cfg);

/// True when every parameter has stepped since the last restart and all of
/// those steps were smaller than the threshold.
bool local_optimum(const OptimizerState& state, double step_threshold);

/// The feasibility loop: start at mid + 1e-6, ascend with the configured
/// method and restriction, restart from a random point at local optima, and
/// stop as soon as value(u) satisfies the bound. Under the barrier
/// restriction an outer loop lowers mu by mu_factor across full searches.
RunResult feasibility_search(Objective& obj, const Region& region, const DescentConfig& cfg);

}  // namespace pmcsynth
