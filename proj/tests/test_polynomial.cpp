#include <doctest.h>

#include <random>

#include "pmcsynth/polynomial.hpp"

using namespace pmcsynth;

namespace {

ParameterSetPtr pq() { return std::make_shared<const ParameterSet>(std::vector<std::string>{"p", "q"}); }

Polynomial var(const ParameterSetPtr& ps, int i) { return Polynomial::variable(ps, i); }
Polynomial cst(const ParameterSetPtr& ps, long n, long d = 1) {
  return Polynomial::constant(ps, make_rational(n, d));
}

/// Random polynomial with small integer coefficients, degree <= 2 per factor.
Polynomial random_poly(const ParameterSetPtr& ps, std::mt19937_64& rng) {
  Polynomial acc = Polynomial::zero(ps);
  int terms = 1 + static_cast<int>(rng() % 4);
  for (int t = 0; t < terms; ++t) {
    long coeff = static_cast<long>(rng() % 11) - 5;
    Polynomial term = cst(ps, coeff, 1 + static_cast<long>(rng() % 3));
    for (int v = 0; v < ps->size(); ++v) {
      unsigned exp = rng() % 3;
      for (unsigned e = 0; e < exp; ++e) term = term * var(ps, v);
    }
    acc = acc + term;
  }
  return acc;
}

}  // namespace

TEST_SUITE("polynomial") {

TEST_CASE("rational parsing is exact") {
  CHECK(parse_rational("2.75") == make_rational(11, 4));
  CHECK(parse_rational("0.5") == make_rational(1, 2));
  CHECK(parse_rational("1/3") == make_rational(1, 3));
  CHECK(parse_rational("-3/6") == make_rational(-1, 2));
  CHECK(rational_to_string(parse_rational("2.75")) == "11/4");
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational("abc"));
}

TEST_CASE("addition merges and cancels") {
  auto ps = pq();
  Polynomial p = var(ps, 0);
  // p + (1 - p) = 1
  CHECK((p + (cst(ps, 1) - p)).is_one());
  // 0 + f = f
  Polynomial f = cst(ps, 2) * p - p * p;
  CHECK((Polynomial::zero(ps) + f) == f);
  // (2p) + (-p^2) = -p^2 + 2p
  Polynomial sum = cst(ps, 2) * p + (-(p * p));
  CHECK(sum.to_string() == "-p^2 + 2*p");
}

TEST_CASE("multiplication expands") {
  auto ps = pq();
  Polynomial p = var(ps, 0);
  Polynomial one_minus_p = cst(ps, 1) - p;
  CHECK((p * one_minus_p).to_string() == "-p^2 + p");
  Polynomial f = p * p - cst(ps, 3) * p;
  CHECK(f * Polynomial::one(ps) == f);
  CHECK((one_minus_p * one_minus_p).to_string() == "p^2 - 2*p + 1");
}

TEST_CASE("derivatives") {
  auto ps = pq();
  Polynomial p = var(ps, 0), q = var(ps, 1);
  // d/dp (-p^2 + 2p + 2) = -2p + 2
  Polynomial f = -(p * p) + cst(ps, 2) * p + cst(ps, 2);
  CHECK(f.derivative(0).to_string() == "-2*p + 2");
  CHECK(cst(ps, 7).derivative(0).is_zero());
  CHECK((p * q).derivative(0) == q);
  CHECK_THROWS(f.derivative(5));
}

TEST_CASE("evaluation") {
  auto ps = pq();
  Polynomial p = var(ps, 0);
  Polynomial one_minus_p = cst(ps, 1) - p;
  std::vector<double> u{0.4, 0.0};
  CHECK(one_minus_p.eval(u) == doctest::Approx(0.6).epsilon(1e-15));
  Polynomial f = -(p * p) + cst(ps, 2) * p + cst(ps, 2);
  CHECK(f.eval(std::vector<double>{0.5, 0.0}) == doctest::Approx(2.75).epsilon(1e-15));
  CHECK(cst(ps, 3).eval(std::vector<double>{123.0, -7.0}) == 3.0);

  // Exact mode agrees with the closed form at a rational point.
  std::vector<Rational> ru{make_rational(1, 2), Rational(0)};
  CHECK(f.eval_exact(ru) == make_rational(11, 4));
}

TEST_CASE("eval is a ring homomorphism on random polynomials") {
  auto ps = pq();
  std::mt19937_64 rng(42);
  for (int round = 0; round < 200; ++round) {
    Polynomial f = random_poly(ps, rng);
    Polynomial g = random_poly(ps, rng);
    std::vector<double> u{(static_cast<double>(rng() % 2000) - 1000.0) / 500.0,
                          (static_cast<double>(rng() % 2000) - 1000.0) / 500.0};
    double scale = std::max({1.0, std::abs(f.eval(u)), std::abs(g.eval(u))});
    CHECK((f + g).eval(u) ==
          doctest::Approx(f.eval(u) + g.eval(u)).epsilon(1e-12).scale(scale));
    CHECK((f * g).eval(u) ==
          doctest::Approx(f.eval(u) * g.eval(u)).epsilon(1e-12).scale(scale * scale));
  }
}

TEST_CASE("sum and product rule hold structurally") {
  auto ps = pq();
  std::mt19937_64 rng(7);
  for (int round = 0; round < 200; ++round) {
    Polynomial f = random_poly(ps, rng);
    Polynomial g = random_poly(ps, rng);
    for (int v = 0; v < 2; ++v) {
      CHECK((f + g).derivative(v) == f.derivative(v) + g.derivative(v));
      CHECK((f * g).derivative(v) == f.derivative(v) * g + f * g.derivative(v));
    }
  }
}

TEST_CASE("derivative lowers the total degree") {
  auto ps = pq();
  std::mt19937_64 rng(11);
  for (int round = 0; round < 200; ++round) {
    Polynomial f = random_poly(ps, rng);
    for (int v = 0; v < 2; ++v) {
      if (!f.depends_on(v)) continue;
      CHECK(f.derivative(v).total_degree() < f.total_degree());
    }
  }
}

TEST_CASE("mismatched parameter sets are rejected") {
  auto a = std::make_shared<const ParameterSet>(std::vector<std::string>{"p"});
  auto b = std::make_shared<const ParameterSet>(std::vector<std::string>{"q"});
  CHECK_THROWS(Polynomial::variable(a, 0) + Polynomial::variable(b, 0));
  CHECK_THROWS(Polynomial::variable(a, 0) * Polynomial::variable(b, 0));
}

TEST_CASE("canonical ordering makes equality structural") {
  auto ps = pq();
  Polynomial p = var(ps, 0), q = var(ps, 1);
  Polynomial left = p * q + q * p + cst(ps, 1);
  Polynomial right = cst(ps, 2) * q * p + cst(ps, 1);
  CHECK(left == right);
  CHECK(left.to_string() == right.to_string());
}

}  // TEST_SUITE
