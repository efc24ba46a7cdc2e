#include "pmcsynth/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pmcsynth {

Rational make_rational(long num, long den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational r;
    if (r.set_str(text, 10) != 0) throw std::invalid_argument("bad rational literal: " + text);
    if (r.get_den() == 0) throw std::invalid_argument("rational with zero denominator: " + text);
    r.canonicalize();
    return r;
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    Rational r;
    if (r.set_str(text, 10) != 0) throw std::invalid_argument("bad integer literal: " + text);
    return r;
  }
  // Decimal literal: digits '.' digits, converted exactly.
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  size_t frac_len = text.size() - dot - 1;
  if (frac_len == 0 || dot == 0 || (dot == 1 && (text[0] == '-' || text[0] == '+')))
    throw std::invalid_argument("bad decimal literal: " + text);
  mpz_class num;
  if (num.set_str(digits, 10) != 0) throw std::invalid_argument("bad decimal literal: " + text);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::string rational_to_string(const Rational& r) { return r.get_str(); }

ParameterSet::ParameterSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < static_cast<int>(names_.size()); ++i) {
    if (names_[i].empty()) throw std::invalid_argument("empty parameter name");
    if (!index_.emplace(names_[i], i).second)
      throw std::invalid_argument("duplicate parameter name: " + names_[i]);
  }
}

int ParameterSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

unsigned Monomial::total_degree() const {
  unsigned d = 0;
  for (const auto& [idx, exp] : factors) d += exp;
  return d;
}

unsigned Monomial::exponent(int param) const {
  for (const auto& [idx, exp] : factors)
    if (idx == param) return exp;
  return 0;
}

bool monomial_less(const Monomial& a, const Monomial& b) {
  unsigned da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db;
  // Lexicographic on exponent vectors over the fixed parameter ordering.
  size_t i = 0, j = 0;
  while (i < a.factors.size() && j < b.factors.size()) {
    const auto& [ia, ea] = a.factors[i];
    const auto& [ib, eb] = b.factors[j];
    if (ia != ib) {
      // The smaller index has a positive exponent on one side, zero on the other.
      return ia < ib ? false : true;
    }
    if (ea != eb) return ea < eb;
    ++i;
    ++j;
  }
  if (i < a.factors.size()) return false;  // a has an extra factor on a later param
  if (j < b.factors.size()) return true;
  return false;
}

namespace {

Monomial monomial_product(const Monomial& a, const Monomial& b) {
  Monomial out;
  size_t i = 0, j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
      out.factors.push_back(a.factors[i++]);
    } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
      out.factors.push_back(b.factors[j++]);
    } else {
      out.factors.emplace_back(a.factors[i].first, a.factors[i].second + b.factors[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace

Polynomial Polynomial::constant(ParameterSetPtr params, Rational value) {
  Polynomial p(std::move(params));
  if (value != 0) p.terms_.emplace_back(Monomial{}, std::move(value));
  return p;
}

Polynomial Polynomial::one(ParameterSetPtr params) {
  return constant(std::move(params), Rational(1));
}

Polynomial Polynomial::variable(ParameterSetPtr params, int index) {
  if (!params || index < 0 || index >= params->size())
    throw std::invalid_argument("parameter index out of range");
  Polynomial p(std::move(params));
  p.terms_.emplace_back(Monomial{{{index, 1u}}}, Rational(1));
  return p;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].first.factors.empty());
}

bool Polynomial::is_one() const {
  return terms_.size() == 1 && terms_[0].first.factors.empty() && terms_[0].second == 1;
}

Rational Polynomial::constant_value() const {
  for (const auto& [m, c] : terms_)
    if (m.factors.empty()) return c;
  return Rational(0);
}

unsigned Polynomial::total_degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
  return d;
}

bool Polynomial::depends_on(int param) const {
  for (const auto& [m, c] : terms_)
    if (m.exponent(param) > 0) return true;
  return false;
}

void Polynomial::check_same_set(const Polynomial& other) const {
  if (params_ == other.params_) return;
  if (params_ && other.params_ && *params_ == *other.params_) return;
  throw std::invalid_argument("polynomials over different parameter sets");
}

void Polynomial::insert_term(Monomial m, Rational c) {
  if (c == 0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                             [](const auto& t, const Monomial& key) { return monomial_less(t.first, key); });
  if (it != terms_.end() && it->first == m) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  } else {
    terms_.insert(it, {std::move(m), std::move(c)});
  }
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  check_same_set(other);
  Polynomial out(params_ ? params_ : other.params_);
  // Merge of two sorted term lists.
  size_t i = 0, j = 0;
  while (i < terms_.size() || j < other.terms_.size()) {
    if (j == other.terms_.size() ||
        (i < terms_.size() && monomial_less(terms_[i].first, other.terms_[j].first))) {
      out.terms_.push_back(terms_[i++]);
    } else if (i == terms_.size() || monomial_less(other.terms_[j].first, terms_[i].first)) {
      out.terms_.push_back(other.terms_[j++]);
    } else {
      Rational c = terms_[i].second + other.terms_[j].second;
      if (c != 0) out.terms_.emplace_back(terms_[i].first, std::move(c));
      ++i;
      ++j;
    }
  }
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial out(params_);
  out.terms_ = terms_;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + (-other); }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  check_same_set(other);
  Polynomial out(params_ ? params_ : other.params_);
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : other.terms_) out.insert_term(monomial_product(ma, mb), ca * cb);
  return out;
}

Polynomial Polynomial::derivative(int param) const {
  if (!params_ || param < 0 || param >= params_->size())
    throw std::invalid_argument("unknown parameter in derivative");
  Polynomial out(params_);
  for (const auto& [m, c] : terms_) {
    unsigned e = m.exponent(param);
    if (e == 0) continue;
    Monomial dm;
    for (const auto& [idx, exp] : m.factors) {
      if (idx == param) {
        if (exp > 1) dm.factors.emplace_back(idx, exp - 1);
      } else {
        dm.factors.emplace_back(idx, exp);
      }
    }
    out.insert_term(std::move(dm), c * static_cast<long>(e));
  }
  return out;
}

double Polynomial::eval(std::span<const double> u) const {
  if (params_ && static_cast<int>(u.size()) < params_->size())
    throw std::invalid_argument("instantiation does not cover all parameters");
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c.get_d();
    for (const auto& [idx, exp] : m.factors) {
      double base = u[idx];
      for (unsigned k = 0; k < exp; ++k) t *= base;
    }
    acc += t;
  }
  return acc;
}

Rational Polynomial::eval_exact(std::span<const Rational> u) const {
  if (params_ && static_cast<int>(u.size()) < params_->size())
    throw std::invalid_argument("instantiation does not cover all parameters");
  Rational acc(0);
  for (const auto& [m, c] : terms_) {
    Rational t = c;
    for (const auto& [idx, exp] : m.factors)
      for (unsigned k = 0; k < exp; ++k) t *= u[idx];
    acc += t;
  }
  return acc;
}

bool Polynomial::operator==(const Polynomial& other) const {
  return terms_ == other.terms_;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  // Highest term first.
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    bool first = it == terms_.rbegin();
    Rational mag = abs(c);
    if (first) {
      if (c < 0) out << "-";
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    bool has_vars = !m.factors.empty();
    if (!has_vars || mag != 1) {
      out << mag.get_str();
      if (has_vars) out << "*";
    }
    bool first_factor = true;
    for (const auto& [idx, exp] : m.factors) {
      if (!first_factor) out << "*";
      first_factor = false;
      out << params_->name(idx);
      if (exp > 1) out << "^" << exp;
    }
  }
  return out.str();
}

}  // namespace pmcsynth
