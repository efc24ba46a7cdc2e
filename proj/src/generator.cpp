#include "pmcsynth/generator.hpp"

#include <algorithm>
#include <stdexcept>

namespace pmcsynth {

namespace {

// Successors are the state itself or strictly higher indices, and every row
// puts at least 1/4 constant probability on a strictly forward edge. That
// bounds the expected number of visits per state by 4 over the WHOLE region,
// so expected rewards (and the conditioning of I - A) stay moderate even at
// the region corners a maximizing search drives the parameters into.
int forward_of(Rng& rng, int s, int n) {
  return s + 1 + static_cast<int>(rng.next_below(n - s - 1));
}

}  // namespace

GeneratedModel generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.num_states < 2) throw std::invalid_argument("generator needs at least 2 states");
  if (spec.num_params < 1) throw std::invalid_argument("generator needs at least 1 parameter");
  if (spec.branching < 2) throw std::invalid_argument("generator needs branching >= 2");
  if (spec.num_states < spec.num_params + 2)
    throw std::invalid_argument("not enough non-target states to use every parameter");

  Rng rng(seed);
  int n = spec.num_states;

  std::vector<std::string> param_names;
  param_names.reserve(spec.num_params);
  for (int i = 0; i < spec.num_params; ++i) param_names.push_back("p" + std::to_string(i));
  auto params = std::make_shared<const ParameterSet>(param_names);

  RawModel raw;
  raw.params = params;
  raw.initial = 0;
  for (int s = 0; s < n; ++s) raw.state_names.push_back("s" + std::to_string(s));
  raw.rows.resize(n);
  raw.rewards.reserve(n);
  for (int s = 0; s < n; ++s)
    raw.rewards.emplace_back(rng.next_below(spec.max_reward + 1));

  // The last state is always a target; the initial state never is, so the
  // query is not trivially satisfied at iteration zero. States below
  // num_params stay non-target: they carry the pairs that guarantee every
  // parameter occurs.
  std::vector<bool> is_target(n, false);
  is_target[n - 1] = true;
  for (int s = std::max(1, spec.num_params); s + 1 < n; ++s)
    if (rng.next_double() < spec.target_density) is_target[s] = true;

  // Observation tying: the j-th non-target state (in index order) uses
  // parameter j mod |V| in its first pair, so every parameter occurs.
  int obs = 0;
  for (int s = 0; s < n; ++s) {
    if (is_target[s]) {
      raw.targets.push_back(s);
      raw.rows[s] = {{s, Polynomial::one(params)}};
      continue;
    }
    if (n - s - 1 < 2) {
      // Not enough distinct forward targets for a pair; hop to the end.
      raw.rows[s] = {{n - 1, Polynomial::one(params)}};
      continue;
    }
    int primary = obs++ % spec.num_params;

    // A row is a convex combination of components with weight 1/c each:
    // a constant strictly-forward edge, the pair {p, 1-p} of the tied
    // parameter, and optionally further pairs or constant edges.
    struct Component {
      int param;  // -1 for a constant edge
    };
    std::vector<Component> comps;
    int edges = 0;
    int edge_cap = std::min(spec.branching, n - s);  // distinct targets available
    if (edge_cap >= 3) {
      comps.push_back({-1});  // constant forward edge
      comps.push_back({primary});
      edges = 3;
      while (static_cast<int>(comps.size()) < 4) {
        bool pair = rng.next_double() < 0.5;
        if (pair && edges + 2 <= edge_cap) {
          comps.push_back({static_cast<int>(rng.next_below(spec.num_params))});
          edges += 2;
        } else if (!pair && edges + 1 <= edge_cap) {
          comps.push_back({-1});
          edges += 1;
        } else {
          break;
        }
      }
    } else {
      comps.push_back({primary});  // both halves strictly forward
    }

    Rational weight = make_rational(1, static_cast<long>(comps.size()));
    Polynomial w = Polynomial::constant(params, weight);
    TransitionRow row;
    auto add_edge = [&](int target, const Polynomial& poly) {
      auto it = std::find_if(row.begin(), row.end(),
                             [target](const auto& e) { return e.first == target; });
      if (it == row.end())
        row.emplace_back(target, poly);
      else
        it->second = it->second + poly;
    };
    // Self-loops are allowed everywhere except the first component, keeping
    // the guaranteed forward mass.
    auto pick_target = [&](bool allow_self) {
      if (allow_self && rng.next_double() < 0.3) return s;
      return forward_of(rng, s, n);
    };
    for (size_t k = 0; k < comps.size(); ++k) {
      bool first = k == 0;
      if (comps[k].param >= 0) {
        Polynomial p = Polynomial::variable(params, comps[k].param);
        Polynomial q = Polynomial::one(params) - p;
        int ta = pick_target(!first);
        int tb = pick_target(!first);
        // Identical halves would merge into a constant and hide the
        // parameter; keep the tied pair on distinct targets.
        while (tb == ta) tb = forward_of(rng, s, n);
        add_edge(ta, w * p);
        add_edge(tb, w * q);
      } else {
        add_edge(pick_target(!first), w);
      }
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    raw.rows[s] = std::move(row);
  }

  GeneratedModel out;
  out.pmc = preprocess(raw, QueryKind::expected_reward);
  out.region = Region::default_region(params);
  return out;
}

}  // namespace pmcsynth
