#pragma once

#include <cstdint>
#include <random>

#include "pmcsynth/model.hpp"

namespace pmcsynth {

/// Deterministic helpers over mt19937_64; the engine sequence is fixed by the
/// standard and the mappings below avoid the library-defined distributions,
/// so streams are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }  // [0,1)
  long next_below(long n) { return static_cast<long>(next_u64() % static_cast<std::uint64_t>(n)); }
  double next_in(double lo, double hi) { return lo + next_double() * (hi - lo); }

 private:
  std::mt19937_64 engine_;
};

struct GeneratorSpec {
  int num_states = 50;        // states before preprocessing, including targets
  int num_params = 4;
  int branching = 4;          // max outgoing edges per state
  double target_density = 0.1;
  int max_reward = 10;
};

struct GeneratedModel {
  Model pmc;     // preprocessed, reaches good almost surely
  Region region; // [1e-6, 1-1e-6] per parameter
};

/// Random pMC whose rows are built from complementary pairs {p, 1-p} and
/// constants, with parameters tied across states the way observation classes
/// tie them. Every state reaches the target set, so the result has no bad
/// state and expected rewards are finite everywhere in the region.
GeneratedModel generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed);

}  // namespace pmcsynth
