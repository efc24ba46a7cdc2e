#pragma once

#include <string>

#include "pmcsynth/model.hpp"

namespace pmcsynth {

struct ParseError : std::runtime_error {
  ParseError(std::string msg, int line, int column);
  int line;
  int column;
};

enum class Comparator { less, leq, greater, geq };

std::string comparator_to_string(Comparator c);
bool comparator_satisfied(Comparator c, double value, double bound);
/// Same with slack: values within `tol` of the bound pass.
bool comparator_satisfied_tol(Comparator c, double value, double bound, double tol);

/// A query "P ~ lambda" or "ER ~ lambda".
struct PropertyQuery {
  QueryKind kind = QueryKind::expected_reward;
  Comparator cmp = Comparator::geq;
  double bound = 0.0;
};

/// Parses the line-oriented model grammar:
///   params <id> [, <id>]* ;
///   state <id> [init] [absorbing] [reward <rational>] ;
///   target <id> [, <id>]* ;
///   transition <id> -> <id> : <polyexpr> ;
/// Polynomial expressions use rational literals (decimal or a/b), parameter
/// names, + - *, and parentheses; division is rejected. Rows must sum to 1
/// symbolically. '#' starts a comment.
RawModel parse_model(const std::string& text);

/// Canonical text for a raw model; parse_model(serialize_raw(m)) == m.
std::string serialize_raw(const RawModel& m);

/// Canonical text for a preprocessed model (or, with a leading "weighted;"
/// marker, a derived automaton; that dialect is output-only and deliberately
/// rejected by parse_model).
std::string serialize_model(const Model& m);

/// One line per parameter: `p in [a, b]`. Omitted parameters default to
/// [1e-6, 1-1e-6].
Region parse_region(const std::string& text, ParameterSetPtr params);

/// `P ~ lambda` or `ER ~ lambda` with ~ in {<, <=, >, >=}. Reachability
/// bounds must lie in [0,1], reward bounds must be nonnegative.
PropertyQuery parse_property(const std::string& text);

/// Graphviz rendering; derivative states of a derived automaton are grouped
/// in a cluster.
std::string export_dot(const Model& m);

}  // namespace pmcsynth
