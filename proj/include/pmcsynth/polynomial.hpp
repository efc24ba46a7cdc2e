#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pmcsynth {

using Rational = mpq_class;

/// Builds a canonical rational; mpq_class(num, den) alone does not reduce.
Rational make_rational(long num, long den);

/// Parses "5", "-3/4" or "2.75" into an exact rational.
Rational parse_rational(const std::string& text);

/// Canonical text form: "5" or "-3/4".
std::string rational_to_string(const Rational& r);

/// An ordered set of distinct parameter names. The position of a name is its
/// index everywhere else in the library (instantiations, regions, gradients).
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  /// Index of `name`, or -1 if absent.
  int index_of(const std::string& name) const;

  bool operator==(const ParameterSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

using ParameterSetPtr = std::shared_ptr<const ParameterSet>;

/// A monomial as a sparse exponent vector: (parameter index, exponent > 0)
/// pairs sorted by index.
struct Monomial {
  std::vector<std::pair<int, unsigned>> factors;

  unsigned total_degree() const;
  unsigned exponent(int param) const;
  bool operator==(const Monomial& other) const { return factors == other.factors; }
};

/// Graded-lex order over the fixed parameter ordering: first by total degree,
/// then lexicographically by exponents.
bool monomial_less(const Monomial& a, const Monomial& b);

/// Immutable multivariate polynomial with exact rational coefficients over a
/// shared ParameterSet. Terms are kept sorted (graded lex, ascending) with no
/// zero coefficients, so equality is structural.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(ParameterSetPtr params) : params_(std::move(params)) {}

  static Polynomial constant(ParameterSetPtr params, Rational value);
  static Polynomial variable(ParameterSetPtr params, int index);
  static Polynomial zero(ParameterSetPtr params) { return Polynomial(std::move(params)); }
  static Polynomial one(ParameterSetPtr params);

  const ParameterSetPtr& parameter_set() const { return params_; }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  bool is_one() const;
  /// Constant term (zero if absent).
  Rational constant_value() const;

  unsigned total_degree() const;
  bool depends_on(int param) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator-() const;

  /// Symbolic partial derivative with respect to the parameter at `param`.
  Polynomial derivative(int param) const;

  /// Substitutes u (indexed like the ParameterSet) in double precision.
  double eval(std::span<const double> u) const;
  /// Exact substitution with rational values.
  Rational eval_exact(std::span<const Rational> u) const;

  bool operator==(const Polynomial& other) const;
  bool operator!=(const Polynomial& other) const { return !(*this == other); }

  /// Canonical text form, highest graded-lex term first, e.g. "-p^2 + 2*p + 2".
  std::string to_string() const;

  const std::vector<std::pair<Monomial, Rational>>& terms() const { return terms_; }

 private:
  void check_same_set(const Polynomial& other) const;
  void insert_term(Monomial m, Rational c);

  ParameterSetPtr params_;
  std::vector<std::pair<Monomial, Rational>> terms_;
};

}  // namespace pmcsynth
