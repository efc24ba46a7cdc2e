#include <doctest.h>

#include "pmcsynth/generator.hpp"
#include "pmcsynth/linsolve.hpp"
#include "pmcsynth/textio.hpp"
#include "support.hpp"

using namespace pmcsynth;
using namespace testsupport;

TEST_SUITE("linsolve") {

TEST_CASE("assemble the chain system at p = 0.5") {
  Model m = chain_model();
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{0.5});
  CHECK(sys.dim() == 4);
  // b = (0, 1, 2, 3) in state order.
  for (int s = 0; s < 4; ++s) CHECK(sys.rewards[sys.row_of_state[s]] == doctest::Approx(s));
  // Diagonal of I - A is 1 (no self loops among transient states).
  for (int i = 0; i < 4; ++i) CHECK(sys.matrix.coeff(i, i) == doctest::Approx(1.0));
}

TEST_CASE("a single absorbing target state gives a 0-dimensional system") {
  std::string text = R"(
state only init absorbing;
target only;
)";
  Model m = preprocess(parse_model(text));
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{});
  CHECK(sys.dim() == 0);
  Eigen::VectorXd x = linsolve::solve(sys, Eigen::VectorXd());
  CHECK(x.size() == 0);
}

TEST_CASE("assemble the chain system at p = 0.9") {
  Model m = chain_model();
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{0.9});
  int r1 = sys.row_of_state[1];
  CHECK(sys.matrix.coeff(r1, sys.row_of_state[2]) == doctest::Approx(-0.9));
  CHECK(sys.matrix.coeff(r1, sys.row_of_state[3]) == doctest::Approx(-0.1));
}

TEST_CASE("chain solution matches the hand back-substitution and the dense oracle") {
  Model m = chain_model();
  std::vector<double> u{0.5};
  linsolve::SparseSystem sys = linsolve::assemble(m, u);
  Eigen::VectorXd x = linsolve::solve(sys, sys.rewards);
  // x_{s2} = 2, x_{s3} = 3, x_{s1} = 1 + p*2 + (1-p)*3, x_{s0} = p*x1 + (1-p)*2.
  CHECK(x[sys.row_of_state[0]] == doctest::Approx(2.75).epsilon(1e-10));
  CHECK(x[sys.row_of_state[1]] == doctest::Approx(3.5).epsilon(1e-10));
  CHECK(x[sys.row_of_state[2]] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(x[sys.row_of_state[3]] == doctest::Approx(3.0).epsilon(1e-10));

  auto [a, b] = dense_system(m, u);
  auto oracle = dense_solve(a, b);
  for (int i = 0; i < sys.dim(); ++i) CHECK(x[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
}

TEST_CASE("identity system returns the right-hand side") {
  // One transient state jumping straight to the target: A = 0 on the system.
  std::string text = R"(
state s0 init reward 5;
state t absorbing;
target t;
transition s0 -> t : 1;
)";
  Model m = preprocess(parse_model(text));
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{});
  Eigen::VectorXd rhs(1);
  rhs << 42.0;
  Eigen::VectorXd x = linsolve::solve(sys, rhs);
  CHECK(x[0] == doctest::Approx(42.0));
}

TEST_CASE("both backends agree on a random 50-state instance") {
  GeneratorSpec spec;
  spec.num_states = 50;
  spec.num_params = 5;
  auto [pmc, region] = generate_synthetic(spec, 99);
  std::vector<double> u(5, 0.37);
  linsolve::SparseSystem sys = linsolve::assemble(pmc, u);
  linsolve::SolveOptions krylov;
  krylov.backend = linsolve::Backend::krylov;
  linsolve::SolveOptions direct;
  direct.backend = linsolve::Backend::direct;
  Eigen::VectorXd xk = linsolve::solve(sys, sys.rewards, krylov);
  Eigen::VectorXd xd = linsolve::solve(sys, sys.rewards, direct);
  CHECK((xk - xd).lpNorm<Eigen::Infinity>() < 1e-8);

  // Residual contract holds for both.
  for (const auto& x : {xk, xd})
    CHECK((sys.matrix * x - sys.rewards).lpNorm<Eigen::Infinity>() <=
          1e-9 * std::max(1.0, sys.rewards.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("solve_multi is consistent with independent solves") {
  Model m = chain_model();
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{0.4});
  std::vector<Eigen::VectorXd> rhs;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(sys.dim());
    b[k] = 1.0;
    rhs.push_back(b);
  }
  auto many = linsolve::solve_multi(sys, rhs);
  REQUIRE(many.size() == 3);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd one = linsolve::solve(sys, rhs[k]);
    CHECK((many[k] - one).lpNorm<Eigen::Infinity>() < 1e-9);
  }

  CHECK(linsolve::solve_multi(sys, {}).empty());
}

TEST_CASE("unit right-hand sides recover the inverse columns") {
  GeneratorSpec spec;
  spec.num_states = 100;
  spec.num_params = 6;
  auto [pmc, region] = generate_synthetic(spec, 5);
  std::vector<double> u(6, 0.5);
  linsolve::SparseSystem sys = linsolve::assemble(pmc, u);
  int n = sys.dim();
  std::vector<Eigen::VectorXd> rhs;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[k] = 1.0;
    rhs.push_back(b);
  }
  auto cols = linsolve::solve_multi(sys, rhs);  // > 8 rhs: direct backend
  // Row sums of (I-A)^{-1} count expected visits, so they are at least 1.
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int k = 0; k < n; ++k) row_sum += cols[k][i];
    CHECK(row_sum >= 1.0 - 1e-7);
  }
  // Spot-check the inverse property (I-A) * X = I on a few columns.
  for (int k : {0, n / 2, n - 1}) {
    Eigen::VectorXd e = sys.matrix * cols[k];
    for (int i = 0; i < n; ++i)
      CHECK(e[i] == doctest::Approx(i == k ? 1.0 : 0.0).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("solutions are nonnegative when rewards are nonnegative") {
  GeneratorSpec spec;
  spec.num_states = 60;
  spec.num_params = 4;
  for (std::uint64_t seed : {11, 12, 13}) {
    auto [pmc, region] = generate_synthetic(spec, seed);
    std::vector<double> u(4, 0.3);
    linsolve::SparseSystem sys = linsolve::assemble(pmc, u);
    Eigen::VectorXd x = linsolve::solve(sys, sys.rewards);
    for (int i = 0; i < sys.dim(); ++i) CHECK(x[i] >= -1e-9);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  Model m = chain_model();
  linsolve::SparseSystem sys = linsolve::assemble(m, std::vector<double>{0.5});
  Eigen::VectorXd wrong(2);
  wrong << 1, 2;
  CHECK_THROWS_AS(linsolve::solve(sys, wrong), linsolve::SolveError);
}

}  // TEST_SUITE
