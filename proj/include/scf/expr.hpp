#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scf/jet.hpp"

namespace scf {

/// Closed-form expression in the variables u and v.
///
/// Supports +, -, *, /, ^ with standard precedence, unary minus, the
/// functions sin, cos, exp, log, sqrt, the constant pi and numeric
/// literals. There is no implicit multiplication and angles are radians.
/// Expressions are immutable after parse; evaluation is reentrant.
class Expr {
public:
  enum class Kind { constant, var_u, var_v, neg, add, sub, mul, div, pow, call };
  enum class Fn { sin, cos, exp, log, sqrt };

  Kind kind;
  double value = 0.0;                 // constant
  Fn fn = Fn::sin;                    // call
  std::shared_ptr<const Expr> lhs;    // unary/binary operand
  std::shared_ptr<const Expr> rhs;    // binary operand

  /// Evaluate with exact first and second derivatives.
  Jet2 eval_jet(double u, double v) const;
  double eval(double u, double v) const { return eval_jet(u, v).v; }

  /// Canonical fully-parenthesized form; parse(print(e)) reproduces the tree.
  std::string print() const;

  bool same_structure(const Expr& other) const;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Parse an expression; throws SyntaxError (with character position) or
/// UnknownIdentifier.
ExprPtr parse_expr(const std::string& source);

}  // namespace scf
