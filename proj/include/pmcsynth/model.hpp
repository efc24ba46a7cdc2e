#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmcsynth/polynomial.hpp"

namespace pmcsynth {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A point in parameter space, indexed like the ParameterSet.
using Instantiation = std::vector<double>;

enum class QueryKind { reachability, expected_reward };

struct Interval {
  double lb = 0.0;
  double ub = 1.0;
};

/// A box of closed per-parameter intervals.
struct Region {
  ParameterSetPtr params;
  std::vector<Interval> bounds;

  static Region default_region(ParameterSetPtr params);

  int size() const { return static_cast<int>(bounds.size()); }
  double width(int i) const { return bounds[i].ub - bounds[i].lb; }
  double midpoint(int i) const { return 0.5 * (bounds[i].lb + bounds[i].ub); }
  bool contains(std::span<const double> u) const;
  bool strictly_contains(std::span<const double> u) const;
};

/// One sparse transition row: (target state, weight) sorted by target.
using TransitionRow = std::vector<std::pair<int, Polynomial>>;

enum class TransitionSemantics {
  stochastic,  // entries are probabilities in [0,1] under every region point
  weighted,    // quasi-distributions: rows sum to 1, entries may be negative
};

/// A parsed model before preprocessing: explicit target set, no good/bad yet.
struct RawModel {
  ParameterSetPtr params;
  std::vector<std::string> state_names;
  int initial = -1;
  std::vector<TransitionRow> rows;
  std::vector<Rational> rewards;
  std::vector<int> targets;

  int num_states() const { return static_cast<int>(state_names.size()); }
  bool operator==(const RawModel& other) const;
};

/// A preprocessed pMC, or (with weighted semantics) the derived automaton of
/// one. `good` is the merged absorbing target; `bad` the merged absorbing
/// state from which good is unreachable, -1 when absent.
struct Model {
  ParameterSetPtr params;
  std::vector<std::string> state_names;
  int initial = -1;
  int good = -1;
  int bad = -1;
  std::vector<TransitionRow> rows;
  std::vector<Rational> rewards;
  TransitionSemantics semantics = TransitionSemantics::stochastic;

  /// For derived automata: states >= derived_split are derivative copies.
  int derived_split = -1;
  std::string derived_param;

  int num_states() const { return static_cast<int>(state_names.size()); }
  int num_transitions() const;
  bool is_weighted() const { return semantics == TransitionSemantics::weighted; }
  /// True when the row is exactly a weight-1 self-loop.
  bool is_absorbing(int s) const;
  double reward_value(int s) const { return rewards[s].get_d(); }
};

using Pmc = Model;
using WeightedAutomaton = Model;

/// Structural invariants (symbolic row sums, absorbing good/bad, zero rewards
/// on good/bad, sorted duplicate-free rows). Returns human-readable
/// violations; empty means valid.
std::vector<std::string> model_violations(const Model& m);
void verify_model(const Model& m);  // throws ModelError on the first violation

/// Merges targets into one absorbing `good` with reward 0 and all states that
/// cannot reach it into one absorbing `bad`. For expected-reward queries the
/// result must reach good almost surely, so a bad state reachable from the
/// initial state is an error.
Model preprocess(const RawModel& raw, QueryKind kind = QueryKind::expected_reward);

/// True if the model has a bad state reachable from the initial state.
bool bad_reachable(const Model& m);

/// Rewires good (and bad) to a fresh absorbing sink with rew(good)=1 so that
/// the expected reward to the sink equals the reachability probability of
/// good in the input.
Model reachability_to_reward(const Model& pmc);

/// Derivative structure of the model w.r.t. one parameter: duplicates the
/// state space and adds cross edges carrying the entry derivatives.
WeightedAutomaton derived_automaton(const Model& pmc, int param);

/// Numeric view of the transition structure at an instantiation, restricted
/// to non-absorbing states.
struct ConcreteMatrix {
  int dim = 0;
  std::vector<int> row_of_state;  // -1 for absorbing states
  std::vector<int> state_of_row;
  struct Entry {
    int row;
    int col;
    double value;
  };
  std::vector<Entry> entries;    // A[u], only between non-absorbing states
  std::vector<double> rewards;   // b, aligned with rows
};

/// Evaluates all transitions at u. For stochastic models verifies graph
/// preservation (structural entries stay nonzero and within [0,1]); for both
/// semantics verifies numeric row sums within 1e-9. If a region is given, u
/// must lie in it.
ConcreteMatrix instantiate(const Model& m, std::span<const double> u,
                           const Region* region = nullptr);

/// Checks graph preservation over a region at its center and corners (all
/// corners when feasible, otherwise a deterministic sample). Throws
/// ModelError naming the offending point and entry.
void check_region_graph_preserving(const Model& m, const Region& region);

}  // namespace pmcsynth
