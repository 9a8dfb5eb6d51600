#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace envdt {

/// Runtime value of an instance property or expression.
using Value = std::variant<bool, std::int64_t, double, std::string>;

std::string value_to_string(const Value& v);
bool is_numeric(const Value& v);
double as_double(const Value& v);

enum class ExprOp {
  Literal,
  Path,  // self.a.b, iterator.a, or a parameter name
  Not,
  Neg,
  And,
  Or,
  Implies,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Add,
  Sub,
  Mul,
  Div,
  Size,    // args[0] is a collection path
  ForAll,  // args[0] collection path, args[1] body; vars holds 1 or 2 iterators
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree shared by constraints and action statements.
struct Expr {
  ExprOp op = ExprOp::Literal;
  Value literal{false};
  std::vector<std::string> path;
  std::vector<std::string> vars;
  std::vector<ExprPtr> args;

  static ExprPtr lit(Value v);
  static ExprPtr make_path(std::vector<std::string> segments);
  static ExprPtr unary(ExprOp op, ExprPtr a);
  static ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b);
  static ExprPtr size(ExprPtr collection);
  static ExprPtr for_all(ExprPtr collection, std::vector<std::string> vars, ExprPtr body);
};

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

/// Canonical text; minimal parentheses by precedence.
std::string print_expr(const Expr& e);

std::string_view op_symbol(ExprOp op);

}  // namespace envdt
