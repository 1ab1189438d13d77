#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "occlp/common.hpp"

namespace occlp {

/// Syntax error with the byte offset of the offending token.
struct ExprParseError : Error {
  ExprParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

/// Unbound variable or domain error (log of a nonpositive value, sqrt of a
/// negative value) during evaluation.
struct ExprEvalError : Error {
  using Error::Error;
};

namespace detail {
struct ExprNode;
}

// Immutable arithmetic expression. Grammar: numeric literals, named
// variables, + - * / ^ with standard precedence (^ right-associative and
// binding tighter than unary minus), and the functions
// sin cos tan exp log abs sqrt sgn min max. sgn(0) = 0.
class Expr {
 public:
  Expr() = default;

  /// Evaluates with every variable bound in `env`. IEEE double semantics
  /// except that unbound variables and log/sqrt domain errors throw.
  double eval(const std::map<std::string, double>& env) const;

  /// Canonical text form; parse(print(e)) reproduces the tree exactly.
  std::string print() const;

  /// Names of all variables referenced, sorted, deduplicated.
  std::vector<std::string> variables() const;

  bool same_structure(const Expr& other) const;
  bool empty() const { return root_ == nullptr; }

 private:
  friend Expr parse_expression(std::string_view);
  friend class CompiledExpr;
  explicit Expr(std::shared_ptr<const detail::ExprNode> root) : root_(std::move(root)) {}
  std::shared_ptr<const detail::ExprNode> root_;
};

/// Parses `source` into an AST. Throws ExprParseError with the byte offset
/// and an expected-token description on malformed input.
Expr parse_expression(std::string_view source);

// Expression bound to a fixed variable ordering, flattened to a postfix tape.
// This is what the integrators and grid sweeps evaluate; a map lookup per
// node would dominate their inner loops.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  /// Binds variables to slots by position in `names`. Throws ExprEvalError
  /// if the expression references a name not listed.
  CompiledExpr(const Expr& expr, const std::vector<std::string>& names);

  double eval(const double* slots) const;

 private:
  struct Op {
    int code;      // opcode or function id
    double value;  // literal payload
    int slot;      // variable slot payload
  };
  std::vector<Op> tape_;
  mutable std::vector<double> stack_;
};

}  // namespace occlp
