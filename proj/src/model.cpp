#include "pmcsynth/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_set>

namespace pmcsynth {

namespace {

constexpr double kRowSumTol = 1e-9;

std::string unique_name(std::string base, const std::vector<std::string>& taken) {
  auto used = [&](const std::string& n) {
    return std::find(taken.begin(), taken.end(), n) != taken.end();
  };
  std::string name = base;
  while (used(name)) name += "_";
  return name;
}

Polynomial row_sum(const ParameterSetPtr& params, const TransitionRow& row) {
  Polynomial sum = Polynomial::zero(params);
  for (const auto& [t, poly] : row) sum = sum + poly;
  return sum;
}

/// States from which `from` is reachable along the structural support,
/// following edges backwards.
std::vector<bool> co_reachable(const Model& m, int from) {
  int n = m.num_states();
  std::vector<std::vector<int>> preds(n);
  for (int s = 0; s < n; ++s)
    for (const auto& [t, poly] : m.rows[s]) preds[t].push_back(s);
  std::vector<bool> seen(n, false);
  std::deque<int> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int p : preds[s])
      if (!seen[p]) {
        seen[p] = true;
        queue.push_back(p);
      }
  }
  return seen;
}

std::vector<bool> forward_reachable(const Model& m, int from) {
  std::vector<bool> seen(m.num_states(), false);
  std::deque<int> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (const auto& [t, poly] : m.rows[s])
      if (!seen[t]) {
        seen[t] = true;
        queue.push_back(t);
      }
  }
  return seen;
}

void sort_and_check_row(TransitionRow& row, const std::string& state) {
  std::sort(row.begin(), row.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < row.size(); ++i)
    if (row[i].first == row[i - 1].first)
      throw ModelError("duplicate transition target in row of state " + state);
}

}  // namespace

Region Region::default_region(ParameterSetPtr params) {
  Region r;
  r.bounds.assign(params ? params->size() : 0, Interval{1e-6, 1.0 - 1e-6});
  r.params = std::move(params);
  return r;
}

bool Region::contains(std::span<const double> u) const {
  if (u.size() != bounds.size()) return false;
  for (size_t i = 0; i < bounds.size(); ++i)
    if (!(u[i] >= bounds[i].lb && u[i] <= bounds[i].ub)) return false;
  return true;
}

bool Region::strictly_contains(std::span<const double> u) const {
  if (u.size() != bounds.size()) return false;
  for (size_t i = 0; i < bounds.size(); ++i)
    if (!(u[i] > bounds[i].lb && u[i] < bounds[i].ub)) return false;
  return true;
}

bool RawModel::operator==(const RawModel& other) const {
  bool same_params = (params == other.params) ||
                     (params && other.params && *params == *other.params);
  return same_params && state_names == other.state_names && initial == other.initial &&
         rows == other.rows && rewards == other.rewards && targets == other.targets;
}

int Model::num_transitions() const {
  int n = 0;
  for (const auto& row : rows) n += static_cast<int>(row.size());
  return n;
}

bool Model::is_absorbing(int s) const {
  return rows[s].size() == 1 && rows[s][0].first == s && rows[s][0].second.is_one();
}

std::vector<std::string> model_violations(const Model& m) {
  std::vector<std::string> out;
  int n = m.num_states();
  if (m.initial < 0 || m.initial >= n) out.push_back("initial state out of range");
  if (m.good < 0 || m.good >= n) out.push_back("good state out of range");
  if (m.bad >= n) out.push_back("bad state out of range");
  if (static_cast<int>(m.rows.size()) != n || static_cast<int>(m.rewards.size()) != n) {
    out.push_back("row/reward tables do not match the state count");
    return out;
  }
  Polynomial one = Polynomial::one(m.params);
  for (int s = 0; s < n; ++s) {
    for (size_t i = 0; i < m.rows[s].size(); ++i) {
      const auto& [t, poly] = m.rows[s][i];
      if (t < 0 || t >= n) out.push_back("transition from " + m.state_names[s] + " to unknown state");
      if (poly.is_zero()) out.push_back("structurally zero transition from " + m.state_names[s]);
      if (i > 0 && m.rows[s][i].first <= m.rows[s][i - 1].first)
        out.push_back("row of " + m.state_names[s] + " not sorted or has duplicates");
    }
    if (row_sum(m.params, m.rows[s]) != one)
      out.push_back("row of state " + m.state_names[s] + " does not sum to 1 symbolically");
  }
  if (m.good >= 0) {
    if (!m.is_absorbing(m.good)) out.push_back("good state is not absorbing");
    if (m.rewards[m.good] != 0) out.push_back("good state has nonzero reward");
  }
  if (m.bad >= 0) {
    if (!m.is_absorbing(m.bad)) out.push_back("bad state is not absorbing");
    if (m.rewards[m.bad] != 0) out.push_back("bad state has nonzero reward");
  }
  return out;
}

void verify_model(const Model& m) {
  auto violations = model_violations(m);
  if (!violations.empty()) throw ModelError(violations.front());
}

Model preprocess(const RawModel& raw, QueryKind kind) {
  if (raw.targets.empty()) throw ModelError("empty target set");
  int n = raw.num_states();
  if (raw.initial < 0 || raw.initial >= n) throw ModelError("missing or invalid initial state");
  Polynomial one = Polynomial::one(raw.params);
  for (int s = 0; s < n; ++s) {
    TransitionRow row = raw.rows[s];
    sort_and_check_row(row, raw.state_names[s]);
    if (row_sum(raw.params, row) != one)
      throw ModelError("row of state " + raw.state_names[s] + " does not sum to 1 symbolically");
  }

  std::vector<bool> is_target(n, false);
  for (int t : raw.targets) {
    if (t < 0 || t >= n) throw ModelError("target state out of range");
    is_target[t] = true;
  }

  // Collapse the target set into one absorbing good state, placed at the
  // first target's position; incoming edges to any target are summed.
  int first_target = -1;
  for (int s = 0; s < n && first_target < 0; ++s)
    if (is_target[s]) first_target = s;
  bool multi = raw.targets.size() > 1;

  std::vector<int> remap(n, -1);
  Model m;
  m.params = raw.params;
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (is_target[s] && s != first_target) continue;
    remap[s] = next++;
    if (s == first_target && multi)
      m.state_names.push_back(unique_name("good", raw.state_names));
    else
      m.state_names.push_back(raw.state_names[s]);
  }
  for (int s = 0; s < n; ++s)
    if (is_target[s]) remap[s] = remap[first_target];

  m.good = remap[first_target];
  m.initial = remap[raw.initial];
  m.rows.resize(next);
  m.rewards.assign(next, Rational(0));
  for (int s = 0; s < n; ++s) {
    if (is_target[s]) continue;
    std::vector<std::pair<int, Polynomial>> merged;
    for (const auto& [t, poly] : raw.rows[s]) {
      int nt = remap[t];
      auto it = std::find_if(merged.begin(), merged.end(),
                             [nt](const auto& e) { return e.first == nt; });
      if (it == merged.end())
        merged.emplace_back(nt, poly);
      else
        it->second = it->second + poly;
    }
    sort_and_check_row(merged, m.state_names[remap[s]]);
    m.rows[remap[s]] = std::move(merged);
    m.rewards[remap[s]] = raw.rewards[s];
  }
  m.rows[m.good] = {{m.good, one}};
  m.rewards[m.good] = Rational(0);

  // States that cannot reach good collapse into one absorbing bad state.
  auto reaches_good = co_reachable(m, m.good);
  std::vector<int> lost;
  for (int s = 0; s < m.num_states(); ++s)
    if (!reaches_good[s]) lost.push_back(s);
  if (!lost.empty()) {
    int keep = lost.front();
    std::vector<int> remap2(m.num_states(), -1);
    Model m2;
    m2.params = m.params;
    int next2 = 0;
    for (int s = 0; s < m.num_states(); ++s) {
      if (!reaches_good[s] && s != keep) continue;
      remap2[s] = next2++;
      if (s == keep)
        m2.state_names.push_back(lost.size() > 1 ? unique_name("bad", m.state_names)
                                                 : m.state_names[s]);
      else
        m2.state_names.push_back(m.state_names[s]);
    }
    for (int s = 0; s < m.num_states(); ++s)
      if (!reaches_good[s]) remap2[s] = remap2[keep];
    m2.bad = remap2[keep];
    m2.good = remap2[m.good];
    m2.initial = remap2[m.initial];
    m2.rows.resize(next2);
    m2.rewards.assign(next2, Rational(0));
    for (int s = 0; s < m.num_states(); ++s) {
      if (!reaches_good[s]) continue;
      std::vector<std::pair<int, Polynomial>> merged;
      for (const auto& [t, poly] : m.rows[s]) {
        int nt = remap2[t];
        auto it = std::find_if(merged.begin(), merged.end(),
                               [nt](const auto& e) { return e.first == nt; });
        if (it == merged.end())
          merged.emplace_back(nt, poly);
        else
          it->second = it->second + poly;
      }
      sort_and_check_row(merged, m2.state_names[remap2[s]]);
      m2.rows[remap2[s]] = std::move(merged);
      m2.rewards[remap2[s]] = m.rewards[s];
    }
    m2.rows[m2.bad] = {{m2.bad, one}};
    m2.rewards[m2.bad] = Rational(0);
    m = std::move(m2);
  }

  if (kind == QueryKind::expected_reward && bad_reachable(m))
    throw ModelError(
        "expected-reward query on a model that does not reach the target almost surely "
        "(bad state reachable from the initial state)");
  return m;
}

bool bad_reachable(const Model& m) {
  if (m.bad < 0) return false;
  return forward_reachable(m, m.initial)[m.bad];
}

Model reachability_to_reward(const Model& pmc) {
  if (pmc.good < 0) throw ModelError("reachability_to_reward requires a preprocessed model");
  Model m = pmc;
  int sink = m.num_states();
  m.state_names.push_back(unique_name("sink", m.state_names));
  Polynomial one = Polynomial::one(m.params);
  m.rows.push_back({{sink, one}});
  m.rewards.assign(m.num_states(), Rational(0));
  m.rewards[pmc.good] = Rational(1);
  m.rows[pmc.good] = {{sink, one}};
  if (pmc.bad >= 0) m.rows[pmc.bad] = {{sink, one}};
  m.good = sink;
  m.bad = -1;
  return m;
}

WeightedAutomaton derived_automaton(const Model& pmc, int param) {
  if (!pmc.params || param < 0 || param >= pmc.params->size())
    throw ModelError("unknown parameter for derived automaton");
  int n = pmc.num_states();
  WeightedAutomaton wfa;
  wfa.params = pmc.params;
  wfa.semantics = TransitionSemantics::weighted;
  wfa.derived_split = n;
  wfa.derived_param = pmc.params->name(param);
  wfa.state_names = pmc.state_names;
  std::string prefix = "d" + wfa.derived_param + "_";
  for (int s = 0; s < n; ++s)
    wfa.state_names.push_back(unique_name(prefix + pmc.state_names[s], wfa.state_names));
  wfa.rows.resize(2 * n);
  wfa.rewards.assign(2 * n, Rational(0));
  for (int s = 0; s < n; ++s) {
    wfa.rows[s] = pmc.rows[s];
    wfa.rewards[s] = pmc.rewards[s];
    TransitionRow drow;
    for (const auto& [t, poly] : pmc.rows[s]) {
      Polynomial d = poly.derivative(param);
      if (!d.is_zero()) drow.emplace_back(t, std::move(d));  // cross edge
    }
    for (const auto& [t, poly] : pmc.rows[s]) drow.emplace_back(n + t, poly);
    wfa.rows[n + s] = std::move(drow);
  }
  wfa.initial = n + pmc.initial;
  wfa.good = pmc.good;
  wfa.bad = n + pmc.good;  // the derivative copy of good never reaches good
  return wfa;
}

ConcreteMatrix instantiate(const Model& m, std::span<const double> u, const Region* region) {
  if (!m.params || static_cast<int>(u.size()) != m.params->size())
    throw ModelError("instantiation does not match the parameter set");
  if (region && !region->contains(u)) throw ModelError("point outside the region");

  int n = m.num_states();
  ConcreteMatrix out;
  out.row_of_state.assign(n, -1);
  for (int s = 0; s < n; ++s) {
    if (m.is_absorbing(s)) continue;
    out.row_of_state[s] = out.dim++;
    out.state_of_row.push_back(s);
  }
  out.rewards.resize(out.dim);
  bool stochastic = m.semantics == TransitionSemantics::stochastic;
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (const auto& [t, poly] : m.rows[s]) {
      double v = poly.eval(u);
      if (stochastic) {
        if (v == 0.0)
          throw ModelError("graph preservation violated: transition " + m.state_names[s] +
                           " -> " + m.state_names[t] + " evaluates to 0");
        if (v < 0.0 || v > 1.0)
          throw ModelError("transition " + m.state_names[s] + " -> " + m.state_names[t] +
                           " evaluates outside [0,1]");
      }
      sum += v;
      if (out.row_of_state[s] >= 0 && out.row_of_state[t] >= 0 && v != 0.0)
        out.entries.push_back({out.row_of_state[s], out.row_of_state[t], v});
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw ModelError("row of state " + m.state_names[s] + " sums to " + std::to_string(sum) +
                       " instead of 1");
    if (out.row_of_state[s] >= 0) out.rewards[out.row_of_state[s]] = m.reward_value(s);
  }
  return out;
}

void check_region_graph_preserving(const Model& m, const Region& region) {
  int n = region.size();
  if (!m.params || n != m.params->size())
    throw ModelError("region does not match the model's parameter set");

  auto try_point = [&](const std::vector<double>& u, const char* what) {
    try {
      instantiate(m, u, nullptr);
    } catch (const ModelError& e) {
      throw ModelError(std::string("region is not graph-preserving at its ") + what + ": " +
                       e.what());
    }
  };

  std::vector<double> center(n);
  for (int i = 0; i < n; ++i) center[i] = region.midpoint(i);
  try_point(center, "center");

  if (n <= 12) {
    std::vector<double> corner(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      for (int i = 0; i < n; ++i)
        corner[i] = (mask >> i) & 1 ? region.bounds[i].ub : region.bounds[i].lb;
      try_point(corner, "corner");
    }
  } else {
    // Too many corners to enumerate: sweep one parameter at a time from the
    // center, then sample full corners deterministically.
    std::vector<double> probe = center;
    for (int i = 0; i < n; ++i) {
      probe[i] = region.bounds[i].lb;
      try_point(probe, "corner sweep");
      probe[i] = region.bounds[i].ub;
      try_point(probe, "corner sweep");
      probe[i] = center[i];
    }
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    std::vector<double> corner(n);
    for (int sample = 0; sample < 64; ++sample) {
      for (int i = 0; i < n; ++i) {
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 29;
        corner[i] = h & 1 ? region.bounds[i].ub : region.bounds[i].lb;
      }
      try_point(corner, "sampled corner");
    }
  }
}

}  // namespace pmcsynth
