#include "pmcsynth/textio.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_map>

namespace pmcsynth {

ParseError::ParseError(std::string msg, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + msg),
      line(line),
      column(column) {}

std::string comparator_to_string(Comparator c) {
  switch (c) {
    case Comparator::less: return "<";
    case Comparator::leq: return "<=";
    case Comparator::greater: return ">";
    case Comparator::geq: return ">=";
  }
  return "?";
}

bool comparator_satisfied(Comparator c, double value, double bound) {
  switch (c) {
    case Comparator::less: return value < bound;
    case Comparator::leq: return value <= bound;
    case Comparator::greater: return value > bound;
    case Comparator::geq: return value >= bound;
  }
  return false;
}

bool comparator_satisfied_tol(Comparator c, double value, double bound, double tol) {
  switch (c) {
    case Comparator::less:
    case Comparator::leq:
      return value <= bound + tol;
    case Comparator::greater:
    case Comparator::geq:
      return value >= bound - tol;
  }
  return false;
}

namespace {

enum class Tok { ident, number, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, current_.line, current_.column);
  }

 private:
  void advance() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    current_ = Token{Tok::end, "", line_, col_};
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    current_.line = line_;
    current_.column = col_;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      current_.kind = Tok::ident;
      current_.text = text_.substr(start, pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      bool dot = false;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              (text_[pos_] == '.' && !dot))) {
        if (text_[pos_] == '.') dot = true;
        ++pos_;
      }
      current_.kind = Tok::number;
      current_.text = text_.substr(start, pos_ - start);
    } else {
      current_.kind = Tok::symbol;
      if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        current_.text = "->";
        pos_ += 2;
      } else if ((c == '<' || c == '>') && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
        current_.text = std::string(1, c) + "=";
        pos_ += 2;
      } else {
        current_.text = std::string(1, c);
        ++pos_;
      }
    }
    col_ += static_cast<int>(current_.text.size());
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token current_;
};

class PolyParser {
 public:
  PolyParser(Lexer& lex, const ParameterSetPtr& params) : lex_(lex), params_(params) {}

  // expr := term (('+'|'-') term)*
  Polynomial expr() {
    Polynomial acc = term();
    while (lex_.peek().kind == Tok::symbol && (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      std::string op = lex_.take().text;
      Polynomial rhs = term();
      acc = op == "+" ? acc + rhs : acc - rhs;
    }
    if (lex_.peek().kind == Tok::symbol && lex_.peek().text == "/")
      lex_.fail("division is rejected; transition entries must be polynomials");
    return acc;
  }

 private:
  // term := factor ('*' factor)*
  Polynomial term() {
    Polynomial acc = factor();
    while (lex_.peek().kind == Tok::symbol && lex_.peek().text == "*") {
      lex_.take();
      acc = acc * factor();
    }
    if (lex_.peek().kind == Tok::symbol && lex_.peek().text == "/")
      lex_.fail("division is rejected; transition entries must be polynomials");
    return acc;
  }

  // factor := '-' factor | '(' expr ')' | number ['/' integer] | ident
  Polynomial factor() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::symbol && t.text == "-") {
      lex_.take();
      return -factor();
    }
    if (t.kind == Tok::symbol && t.text == "(") {
      lex_.take();
      Polynomial inner = expr();
      if (lex_.peek().text != ")") lex_.fail("expected ')'");
      lex_.take();
      return inner;
    }
    if (t.kind == Tok::number) {
      Token num = lex_.take();
      if (lex_.peek().kind == Tok::symbol && lex_.peek().text == "/") {
        if (num.text.find('.') != std::string::npos)
          lex_.fail("fraction literals need integer numerator and denominator");
        lex_.take();
        if (lex_.peek().kind != Tok::number || lex_.peek().text.find('.') != std::string::npos)
          lex_.fail("fraction literals need integer numerator and denominator");
        Token den = lex_.take();
        if (parse_rational(den.text) == 0) lex_.fail("zero denominator");
        return Polynomial::constant(params_, parse_rational(num.text + "/" + den.text));
      }
      return Polynomial::constant(params_, parse_rational(num.text));
    }
    if (t.kind == Tok::ident) {
      Token id = lex_.take();
      int idx = params_ ? params_->index_of(id.text) : -1;
      if (idx < 0)
        throw ParseError("unknown parameter '" + id.text + "'", id.line, id.column);
      return Polynomial::variable(params_, idx);
    }
    lex_.fail("expected a polynomial factor");
  }

  Lexer& lex_;
  const ParameterSetPtr& params_;
};

void expect_symbol(Lexer& lex, const std::string& sym) {
  if (lex.peek().kind != Tok::symbol || lex.peek().text != sym)
    lex.fail("expected '" + sym + "'");
  lex.take();
}

std::string expect_ident(Lexer& lex, const std::string& what) {
  if (lex.peek().kind != Tok::ident) lex.fail("expected " + what);
  return lex.take().text;
}

/// Grammar-safe polynomial text: powers written as repeated products so the
/// output stays inside the transition-expression grammar.
std::string poly_grammar_string(const Polynomial& poly) {
  if (poly.is_zero()) return "0";
  const auto& params = poly.parameter_set();
  std::ostringstream out;
  const auto& terms = poly.terms();
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    const auto& [m, c] = *it;
    bool first = it == terms.rbegin();
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
      for (unsigned k = 0; k < exp; ++k) {
        if (!first_factor) out << "*";
        first_factor = false;
        out << params->name(idx);
      }
    }
  }
  return out.str();
}

struct StateAttrs {
  bool init = false;
  bool absorbing = false;
  Rational reward = Rational(0);
};

}  // namespace

RawModel parse_model(const std::string& text) {
  Lexer lex(text);
  RawModel model;
  std::vector<std::string> param_names;
  std::unordered_map<std::string, int> state_index;
  std::vector<StateAttrs> attrs;
  std::vector<bool> has_transitions;
  bool params_done = false;
  bool any_transition = false;

  auto require_state = [&](const std::string& name, const Token& tok) {
    auto it = state_index.find(name);
    if (it == state_index.end())
      throw ParseError("unknown state '" + name + "'", tok.line, tok.column);
    return it->second;
  };

  while (lex.peek().kind != Tok::end) {
    if (lex.peek().kind != Tok::ident) lex.fail("expected a statement keyword");
    Token kw = lex.take();
    if (kw.text == "weighted") {
      throw ParseError("weighted automata are an output-only dialect and cannot be read back",
                       kw.line, kw.column);
    } else if (kw.text == "params") {
      if (params_done || any_transition)
        throw ParseError("params must be declared once, before any transition", kw.line,
                         kw.column);
      while (true) {
        param_names.push_back(expect_ident(lex, "a parameter name"));
        if (lex.peek().kind == Tok::symbol && lex.peek().text == ",") {
          lex.take();
          continue;
        }
        break;
      }
      expect_symbol(lex, ";");
      for (size_t i = 0; i < param_names.size(); ++i)
        for (size_t j = i + 1; j < param_names.size(); ++j)
          if (param_names[i] == param_names[j])
            throw ParseError("duplicate parameter '" + param_names[i] + "'", kw.line, kw.column);
      model.params = std::make_shared<const ParameterSet>(param_names);
      params_done = true;
    } else if (kw.text == "state") {
      Token name_tok = lex.peek();
      std::string name = expect_ident(lex, "a state name");
      if (state_index.count(name))
        throw ParseError("duplicate state name '" + name + "'", name_tok.line, name_tok.column);
      StateAttrs a;
      while (lex.peek().kind == Tok::ident) {
        std::string flag = lex.take().text;
        if (flag == "init") {
          a.init = true;
        } else if (flag == "absorbing") {
          a.absorbing = true;
        } else if (flag == "reward") {
          if (lex.peek().kind != Tok::number && lex.peek().text != "-")
            lex.fail("expected a reward literal");
          std::string lit;
          if (lex.peek().text == "-") {
            lex.take();
            lit = "-";
          }
          if (lex.peek().kind != Tok::number) lex.fail("expected a reward literal");
          lit += lex.take().text;
          if (lex.peek().kind == Tok::symbol && lex.peek().text == "/") {
            lex.take();
            if (lex.peek().kind != Tok::number) lex.fail("expected a denominator");
            lit += "/" + lex.take().text;
          }
          a.reward = parse_rational(lit);
        } else {
          lex.fail("unknown state attribute '" + flag + "'");
        }
      }
      expect_symbol(lex, ";");
      state_index[name] = static_cast<int>(model.state_names.size());
      model.state_names.push_back(name);
      attrs.push_back(a);
      has_transitions.push_back(false);
    } else if (kw.text == "target") {
      while (true) {
        Token name_tok = lex.peek();
        std::string name = expect_ident(lex, "a target state name");
        model.targets.push_back(require_state(name, name_tok));
        if (lex.peek().kind == Tok::symbol && lex.peek().text == ",") {
          lex.take();
          continue;
        }
        break;
      }
      expect_symbol(lex, ";");
    } else if (kw.text == "transition") {
      if (!model.params) model.params = std::make_shared<const ParameterSet>(param_names);
      Token src_tok = lex.peek();
      int src = require_state(expect_ident(lex, "a source state"), src_tok);
      expect_symbol(lex, "->");
      Token dst_tok = lex.peek();
      int dst = require_state(expect_ident(lex, "a target state"), dst_tok);
      expect_symbol(lex, ":");
      PolyParser pp(lex, model.params);
      Polynomial poly = pp.expr();
      expect_symbol(lex, ";");
      if (model.rows.size() < model.state_names.size()) model.rows.resize(model.state_names.size());
      for (const auto& [t, existing] : model.rows[src])
        if (t == dst)
          throw ParseError("duplicate transition " + model.state_names[src] + " -> " +
                               model.state_names[dst],
                           src_tok.line, src_tok.column);
      if (poly.is_zero())
        throw ParseError("transition with zero weight", src_tok.line, src_tok.column);
      model.rows[src].emplace_back(dst, std::move(poly));
      has_transitions[src] = true;
      any_transition = true;
    } else {
      throw ParseError("unknown statement '" + kw.text + "'", kw.line, kw.column);
    }
  }

  if (!model.params) model.params = std::make_shared<const ParameterSet>(param_names);
  int n = static_cast<int>(model.state_names.size());
  if (n == 0) throw ParseError("model has no states", 1, 1);
  model.rows.resize(n);
  model.rewards.reserve(n);
  for (int s = 0; s < n; ++s) {
    model.rewards.push_back(attrs[s].reward);
    if (attrs[s].init) {
      if (model.initial >= 0) throw ParseError("more than one init state", 1, 1);
      model.initial = s;
    }
    if (attrs[s].absorbing) {
      if (has_transitions[s])
        throw ParseError("state " + model.state_names[s] +
                             " is declared absorbing but also has explicit transitions",
                         1, 1);
      model.rows[s] = {{s, Polynomial::one(model.params)}};
    }
  }
  if (model.initial < 0) throw ParseError("no init state declared", 1, 1);

  Polynomial one = Polynomial::one(model.params);
  for (int s = 0; s < n; ++s) {
    std::sort(model.rows[s].begin(), model.rows[s].end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Polynomial sum = Polynomial::zero(model.params);
    for (const auto& [t, poly] : model.rows[s]) sum = sum + poly;
    if (sum != one)
      throw ParseError("row of state " + model.state_names[s] +
                           " does not sum to 1 symbolically (sum = " + sum.to_string() + ")",
                       1, 1);
  }
  return model;
}

namespace {

void serialize_common(std::ostringstream& out, const ParameterSetPtr& params,
                      const std::vector<std::string>& names, int initial,
                      const std::vector<TransitionRow>& rows, const std::vector<Rational>& rewards,
                      const std::vector<int>& targets,
                      const std::vector<bool>& absorbing) {
  if (params && params->size() > 0) {
    out << "params ";
    for (int i = 0; i < params->size(); ++i) {
      if (i) out << ", ";
      out << params->name(i);
    }
    out << ";\n";
  }
  for (size_t s = 0; s < names.size(); ++s) {
    out << "state " << names[s];
    if (static_cast<int>(s) == initial) out << " init";
    if (absorbing[s]) out << " absorbing";
    if (rewards[s] != 0) out << " reward " << rational_to_string(rewards[s]);
    out << ";\n";
  }
  if (!targets.empty()) {
    out << "target ";
    for (size_t i = 0; i < targets.size(); ++i) {
      if (i) out << ", ";
      out << names[targets[i]];
    }
    out << ";\n";
  }
  for (size_t s = 0; s < names.size(); ++s) {
    if (absorbing[s]) continue;
    for (const auto& [t, poly] : rows[s])
      out << "transition " << names[s] << " -> " << names[t] << " : " << poly_grammar_string(poly)
          << ";\n";
  }
}

}  // namespace

std::string serialize_raw(const RawModel& m) {
  std::ostringstream out;
  std::vector<bool> absorbing(m.state_names.size(), false);
  for (size_t s = 0; s < m.state_names.size(); ++s)
    absorbing[s] = m.rows[s].size() == 1 && m.rows[s][0].first == static_cast<int>(s) &&
                   m.rows[s][0].second.is_one();
  std::vector<int> targets = m.targets;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  serialize_common(out, m.params, m.state_names, m.initial, m.rows, m.rewards, targets, absorbing);
  return out.str();
}

std::string serialize_model(const Model& m) {
  std::ostringstream out;
  if (m.is_weighted()) out << "weighted;\n";
  std::vector<bool> absorbing(m.state_names.size(), false);
  for (int s = 0; s < m.num_states(); ++s) absorbing[s] = m.is_absorbing(s);
  std::vector<int> targets;
  if (m.good >= 0) targets.push_back(m.good);
  serialize_common(out, m.params, m.state_names, m.initial, m.rows, m.rewards, targets, absorbing);
  return out.str();
}

Region parse_region(const std::string& text, ParameterSetPtr params) {
  Region region = Region::default_region(params);
  Lexer lex(text);
  std::vector<bool> seen(params ? params->size() : 0, false);
  while (lex.peek().kind != Tok::end) {
    Token name_tok = lex.peek();
    std::string name = expect_ident(lex, "a parameter name");
    int idx = params ? params->index_of(name) : -1;
    if (idx < 0)
      throw ParseError("unknown parameter '" + name + "'", name_tok.line, name_tok.column);
    if (seen[idx])
      throw ParseError("duplicate interval for parameter '" + name + "'", name_tok.line,
                       name_tok.column);
    seen[idx] = true;
    std::string kw = expect_ident(lex, "'in'");
    if (kw != "in") lex.fail("expected 'in'");
    expect_symbol(lex, "[");
    auto read_number = [&]() {
      std::string lit;
      if (lex.peek().kind == Tok::symbol && lex.peek().text == "-") {
        lex.take();
        lit = "-";
      }
      if (lex.peek().kind != Tok::number) lex.fail("expected a bound");
      lit += lex.take().text;
      if (lex.peek().kind == Tok::symbol && lex.peek().text == "/") {
        lex.take();
        if (lex.peek().kind != Tok::number) lex.fail("expected a denominator");
        lit += "/" + lex.take().text;
      }
      return parse_rational(lit).get_d();
    };
    double lb = read_number();
    expect_symbol(lex, ",");
    double ub = read_number();
    expect_symbol(lex, "]");
    if (lex.peek().kind == Tok::symbol && lex.peek().text == ";") lex.take();
    if (!(lb < ub))
      throw ParseError("empty interval for parameter '" + name + "' (lb >= ub)", name_tok.line,
                       name_tok.column);
    region.bounds[idx] = Interval{lb, ub};
  }
  return region;
}

PropertyQuery parse_property(const std::string& text) {
  Lexer lex(text);
  PropertyQuery q;
  std::string kind = expect_ident(lex, "'P' or 'ER'");
  if (kind == "P")
    q.kind = QueryKind::reachability;
  else if (kind == "ER")
    q.kind = QueryKind::expected_reward;
  else
    lex.fail("expected 'P' or 'ER'");
  if (lex.peek().kind != Tok::symbol) lex.fail("expected a comparator");
  std::string op = lex.take().text;
  if (op == "<")
    q.cmp = Comparator::less;
  else if (op == "<=")
    q.cmp = Comparator::leq;
  else if (op == ">")
    q.cmp = Comparator::greater;
  else if (op == ">=")
    q.cmp = Comparator::geq;
  else
    lex.fail("expected one of <, <=, >, >=");
  std::string lit;
  if (lex.peek().kind == Tok::symbol && lex.peek().text == "-") {
    lex.take();
    lit = "-";
  }
  if (lex.peek().kind != Tok::number) lex.fail("expected a bound");
  lit += lex.take().text;
  if (lex.peek().kind == Tok::symbol && lex.peek().text == "/") {
    lex.take();
    if (lex.peek().kind != Tok::number) lex.fail("expected a denominator");
    lit += "/" + lex.take().text;
  }
  if (lex.peek().kind != Tok::end) lex.fail("unexpected trailing input in property");
  q.bound = parse_rational(lit).get_d();
  if (q.kind == QueryKind::reachability && (q.bound < 0.0 || q.bound > 1.0))
    throw ParseError("reachability bound must lie in [0,1]", 1, 1);
  if (q.kind == QueryKind::expected_reward && q.bound < 0.0)
    throw ParseError("expected-reward bound must be nonnegative", 1, 1);
  return q;
}

std::string export_dot(const Model& m) {
  std::ostringstream out;
  out << "digraph model {\n  rankdir=LR;\n  node [shape=circle];\n";
  auto emit_node = [&](int s) {
    out << "  " << m.state_names[s] << " [label=\"" << m.state_names[s];
    if (m.rewards[s] != 0) out << "\\nrew=" << rational_to_string(m.rewards[s]);
    out << "\"";
    if (s == m.good) out << ", shape=doublecircle";
    if (s == m.bad) out << ", shape=octagon";
    if (s == m.initial) out << ", penwidth=2";
    out << "];\n";
  };
  int split = m.derived_split >= 0 ? m.derived_split : m.num_states();
  for (int s = 0; s < split; ++s) emit_node(s);
  if (m.derived_split >= 0) {
    out << "  subgraph cluster_derived {\n    label=\"d/d" << m.derived_param << "\";\n";
    for (int s = split; s < m.num_states(); ++s) {
      out << "  ";
      emit_node(s);
    }
    out << "  }\n";
  }
  for (int s = 0; s < m.num_states(); ++s)
    for (const auto& [t, poly] : m.rows[s])
      out << "  " << m.state_names[s] << " -> " << m.state_names[t] << " [label=\""
          << poly.to_string() << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace pmcsynth
