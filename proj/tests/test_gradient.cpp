#include <doctest.h>

#include "pmcsynth/descent.hpp"
#include "pmcsynth/generator.hpp"
#include "pmcsynth/gradient.hpp"
#include "support.hpp"

using namespace pmcsynth;
using namespace testsupport;

namespace {

PropertyQuery er_geq(double bound) {
  PropertyQuery q;
  q.kind = QueryKind::expected_reward;
  q.cmp = Comparator::geq;
  q.bound = bound;
  return q;
}

}  // namespace

TEST_SUITE("gradient") {

TEST_CASE("expected reward of the chain model follows the closed form") {
  Model m = chain_model();
  CHECK(expected_reward(m, std::vector<double>{0.5}) ==
        doctest::Approx(chain_value(0.5)).epsilon(1e-10));
  CHECK(expected_reward(m, std::vector<double>{0.1}) ==
        doctest::Approx(2.19).epsilon(1e-10));
  // p = 1 lies outside every graph-preserving region.
  CHECK_THROWS_AS(expected_reward(m, std::vector<double>{1.0}), ModelError);
}

TEST_CASE("equation-system gradient matches the closed form") {
  Model m = chain_model();
  std::vector<int> all{0};
  CHECK(gradient_eqsys(m, std::vector<double>{0.5}, all)[0] ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gradient_eqsys(m, std::vector<double>{0.99}, all)[0] ==
        doctest::Approx(0.02).epsilon(1e-7));
  // -2p + 2 > 0 on (0,1): the objective is strictly increasing everywhere.
  for (double p : {0.01, 0.2, 0.5, 0.8, 0.99})
    CHECK(gradient_eqsys(m, std::vector<double>{p}, all)[0] > 0.0);
}

TEST_CASE("a parameter absent from the model has partial derivative 0") {
  std::string text = R"(params p, q;
state s0 init reward 1;
state good absorbing;
target good;
transition s0 -> good : p;
transition s0 -> s0 : 1 - p;
)";
  Model m = preprocess(parse_model(text));
  std::vector<int> both{0, 1};
  auto g = gradient_eqsys(m, std::vector<double>{0.5, 0.5}, both);
  CHECK(g[1] == 0.0);
  CHECK(gradient_via_derived(m, 1, std::vector<double>{0.5, 0.5}) == 0.0);
}

TEST_CASE("derived-automaton gradient equals the equation-system gradient") {
  Model m = chain_model();
  CHECK(gradient_via_derived(m, 0, std::vector<double>{0.5}) ==
        doctest::Approx(1.0).epsilon(1e-9));

  GeneratorSpec spec;
  spec.num_states = 30;
  spec.num_params = 4;
  linsolve::SolveOptions tight;  // the 1e-8 route agreement needs tight solves
  tight.backend = linsolve::Backend::direct;
  tight.tol = 1e-12;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [pmc, region] = generate_synthetic(spec, seed);
    std::vector<double> u(4);
    for (int i = 0; i < 4; ++i) u[i] = 0.15 + 0.17 * i + 0.01 * static_cast<double>(seed % 7);
    std::vector<int> all{0, 1, 2, 3};
    auto eq = gradient_eqsys(pmc, u, all, nullptr, tight);
    for (int p = 0; p < 4; ++p) {
      double derived = gradient_via_derived(pmc, p, u, tight);
      CHECK(std::abs(derived - eq[p]) < 1e-8);
    }
  }
}

TEST_CASE("finite differences") {
  FunctionObjective quartic = quartic_objective();
  Region r = box({{0.0, 3.0}});
  // f'(1) = 4 for the worked quartic.
  CHECK(finite_difference(quartic, std::vector<double>{1.0}, 0, 1e-6, r) ==
        doctest::Approx(4.0).epsilon(0).scale(1).epsilon(1e-5));

  FunctionObjective constant(
      1, [](std::span<const double>) { return 7.0; },
      [](std::span<const double>, int) { return 0.0; });
  CHECK(finite_difference(constant, std::vector<double>{1.0}, 0, 1e-6, r) == 0.0);

  // Step must stay inside the region.
  CHECK_THROWS_AS(finite_difference(quartic, std::vector<double>{0.0}, 0, 1e-6, r), ModelError);

  Model m = chain_model();
  Region pr = Region::default_region(m.params);
  PmcObjective obj(m, pr, er_geq(0));
  CHECK(finite_difference(obj, std::vector<double>{0.5}, 0, 1e-6, pr) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("objective direction and value follow the query") {
  Model m = chain_model();
  Region r = Region::default_region(m.params);
  SUBCASE("maximize for >=") {
    auto obj = make_pmc_objective(m, r, er_geq(2.9));
    CHECK(obj->direction() == Objective::Direction::maximize);
    CHECK(obj->value(std::vector<double>{0.5}) == doctest::Approx(2.75).epsilon(1e-10));
  }
  SUBCASE("minimize for <=; the engine sees the negated value") {
    PropertyQuery q = er_geq(2.2);
    q.cmp = Comparator::leq;
    auto obj = make_pmc_objective(m, r, q);
    CHECK(obj->direction() == Objective::Direction::minimize);
    SignedObjective engine(*obj);
    CHECK(engine.value(std::vector<double>{0.5}) == doctest::Approx(-2.75).epsilon(1e-10));
  }
  SUBCASE("reachability queries go through the reward transform") {
    Model coin = preprocess(parse_model(coin_model_text()), QueryKind::reachability);
    PropertyQuery q;
    q.kind = QueryKind::reachability;
    q.cmp = Comparator::geq;
    q.bound = 0.3;
    auto obj = make_pmc_objective(coin, Region::default_region(coin.params), q);
    CHECK(obj->value(std::vector<double>{0.3}) == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(obj->gradient(std::vector<double>{0.3}, std::vector<int>{0})[0] ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("objective refuses models that do not reach the target almost surely") {
  std::string text = R"(params p;
state s0 init;
state t absorbing;
state sink;
target t;
transition s0 -> t : p;
transition s0 -> sink : 1 - p;
transition sink -> sink : 1;
)";
  Model m = preprocess(parse_model(text), QueryKind::reachability);
  REQUIRE(m.bad >= 0);
  CHECK_THROWS_AS(PmcObjective(m, Region::default_region(m.params), er_geq(0)), ModelError);
  // The same model is fine for a reachability query.
  PropertyQuery q;
  q.kind = QueryKind::reachability;
  q.cmp = Comparator::geq;
  q.bound = 0.5;
  CHECK_NOTHROW(PmcObjective(m, Region::default_region(m.params), q));
}

TEST_CASE("out-of-region evaluation is rejected") {
  Model m = chain_model();
  Region r = Region::default_region(m.params);
  r.bounds[0] = {0.1, 0.9};
  PmcObjective obj(m, r, er_geq(0));
  CHECK_THROWS_AS(obj.value(std::vector<double>{0.95}), ModelError);
}

TEST_CASE("both solver backends give the same value and gradient") {
  GeneratorSpec spec;
  spec.num_states = 40;
  spec.num_params = 5;
  for (std::uint64_t seed : {3, 5, 8}) {
    auto [pmc, region] = generate_synthetic(spec, seed);
    std::vector<double> u(5, 0.42);
    linsolve::SolveOptions krylov;
    krylov.backend = linsolve::Backend::krylov;
    linsolve::SolveOptions direct;
    direct.backend = linsolve::Backend::direct;
    std::vector<int> all{0, 1, 2, 3, 4};
    double vk = expected_reward(pmc, u, nullptr, krylov);
    double vd = expected_reward(pmc, u, nullptr, direct);
    CHECK(std::abs(vk - vd) < 1e-8 * std::max(1.0, std::abs(vk)));
    auto gk = gradient_eqsys(pmc, u, all, nullptr, krylov);
    auto gd = gradient_eqsys(pmc, u, all, nullptr, direct);
    for (int p = 0; p < 5; ++p) CHECK(std::abs(gk[p] - gd[p]) < 1e-8 * std::max(1.0, std::abs(gk[p])));
  }
}

TEST_CASE("gradients agree with finite differences on random models") {
  GeneratorSpec spec;
  spec.num_states = 25;
  spec.num_params = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [pmc, region] = generate_synthetic(spec, seed);
    PmcObjective obj(pmc, region, er_geq(0));
    std::vector<double> u{0.3, 0.55, 0.71};
    std::vector<int> all{0, 1, 2};
    auto g = obj.gradient(u, all);
    for (int p = 0; p < 3; ++p) {
      double fd = finite_difference(obj, u, p, 1e-6, region);
      CHECK(std::abs(g[p] - fd) <= 1e-4 * std::max(1.0, std::abs(g[p])));
    }
  }
}

TEST_CASE("value solve is cached per point and solve counters track work") {
  Model m = chain_model();
  Region r = Region::default_region(m.params);
  PmcObjective obj(m, r, er_geq(0));
  std::vector<double> u{0.5};
  obj.value(u);
  CHECK(obj.value_solves() == 1);
  obj.gradient(u, std::vector<int>{0});  // reuses the cached value solve
  CHECK(obj.value_solves() == 1);
  CHECK(obj.gradient_solves() == 1);
  obj.value(std::vector<double>{0.6});
  CHECK(obj.value_solves() == 2);
}

}  // TEST_SUITE
