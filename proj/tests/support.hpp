#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmcsynth/gradient.hpp"
#include "pmcsynth/model.hpp"
#include "pmcsynth/textio.hpp"

namespace testsupport {

/// The five-state running example: s0 -p-> s1, s0 -(1-p)-> s2,
/// s1 -p-> s2, s1 -(1-p)-> s3, s2/s3 -> good, rew(s_i) = i.
/// Closed forms: ER(p) = -p^2 + 2p + 2, dER/dp = -2p + 2.
inline std::string chain_model_text() {
  return R"(params p;
state s0 init;
state s1 reward 1;
state s2 reward 2;
state s3 reward 3;
state good absorbing;
target good;
transition s0 -> s1 : p;
transition s0 -> s2 : 1 - p;
transition s1 -> s2 : p;
transition s1 -> s3 : 1 - p;
transition s2 -> good : 1;
transition s3 -> good : 1;
)";
}

inline pmcsynth::Model chain_model() {
  return pmcsynth::preprocess(pmcsynth::parse_model(chain_model_text()));
}

inline double chain_value(double p) { return -p * p + 2 * p + 2; }
inline double chain_gradient(double p) { return -2 * p + 2; }

/// One coin flip: s0 -p-> win, s0 -(1-p)-> lose, target win.
inline std::string coin_model_text() {
  return R"(params p;
state s0 init;
state win absorbing;
state lose absorbing;
target win;
transition s0 -> win : p;
transition s0 -> lose : 1 - p;
)";
}

/// The quartic f(p) = 0.5 p^4 - 4 p^3 + 9 p^2 - 4 p + 2 used by the worked
/// optimizer examples; maximum 6 at p = 2.
inline double quartic(double p) {
  return 0.5 * p * p * p * p - 4 * p * p * p + 9 * p * p - 4 * p + 2;
}
inline double quartic_deriv(double p) { return 2 * p * p * p - 12 * p * p + 18 * p - 4; }

inline pmcsynth::FunctionObjective quartic_objective(
    pmcsynth::Objective::Direction dir = pmcsynth::Objective::Direction::maximize) {
  return pmcsynth::FunctionObjective(
      1, [](std::span<const double> u) { return quartic(u[0]); },
      [](std::span<const double> u, int) { return quartic_deriv(u[0]); }, dir);
}

inline pmcsynth::Region box(std::vector<std::pair<double, double>> intervals,
                            pmcsynth::ParameterSetPtr params = nullptr) {
  pmcsynth::Region r;
  if (!params) {
    std::vector<std::string> names;
    for (size_t i = 0; i < intervals.size(); ++i) names.push_back("x" + std::to_string(i));
    params = std::make_shared<const pmcsynth::ParameterSet>(names);
  }
  r.params = params;
  for (auto [lo, hi] : intervals) r.bounds.push_back({lo, hi});
  return r;
}

/// Dense Gaussian elimination with partial pivoting; the independent oracle
/// for the sparse solvers.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular matrix in dense_solve");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

/// Densifies (I - A[u]) for the oracle.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> dense_system(
    const pmcsynth::Model& m, std::span<const double> u) {
  pmcsynth::ConcreteMatrix cm = pmcsynth::instantiate(m, u);
  std::vector<std::vector<double>> a(cm.dim, std::vector<double>(cm.dim, 0.0));
  for (int i = 0; i < cm.dim; ++i) a[i][i] = 1.0;
  for (const auto& e : cm.entries) a[e.row][e.col] -= e.value;
  return {a, cm.rewards};
}

}  // namespace testsupport
