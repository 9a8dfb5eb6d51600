#include "envdt/expr.hpp"

#include <charconv>
#include <stdexcept>

namespace envdt {

namespace {

std::string format_double(double d) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string out(buf, end);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '"';
  return out;
}

int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Implies: return 1;
    case ExprOp::Or: return 2;
    case ExprOp::And: return 3;
    case ExprOp::Not: return 4;
    case ExprOp::Eq:
    case ExprOp::Ne:
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge:
      return 5;
    case ExprOp::Add:
    case ExprOp::Sub:
      return 6;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 7;
    case ExprOp::Neg: return 8;
    default: return 9;
  }
}

std::string join_path(const std::vector<std::string>& p) {
  std::string out;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) out += '.';
    out += p[i];
  }
  return out;
}

std::string print_child(const Expr& child, int parent_prec, bool right_side) {
  int cp = precedence(child.op);
  // Binary operators parse left-associative; comparisons do not chain.
  bool wrap = cp < parent_prec || (right_side && cp == parent_prec && cp != 9) ||
              (!right_side && cp == parent_prec && cp == 5);
  std::string s = print_expr(child);
  return wrap ? "(" + s + ")" : s;
}

}  // namespace

std::string value_to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return format_double(x);
        else return quote(x);
      },
      v);
}

bool is_numeric(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw std::invalid_argument("value is not numeric: " + value_to_string(v));
}

ExprPtr Expr::lit(Value v) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Literal;
  e->literal = std::move(v);
  return e;
}

ExprPtr Expr::make_path(std::vector<std::string> segments) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Path;
  e->path = std::move(segments);
  return e;
}

ExprPtr Expr::unary(ExprOp op, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(a)};
  return e;
}

ExprPtr Expr::binary(ExprOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::size(ExprPtr collection) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Size;
  e->args = {std::move(collection)};
  return e;
}

ExprPtr Expr::for_all(ExprPtr collection, std::vector<std::string> vars, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::ForAll;
  e->vars = std::move(vars);
  e->args = {std::move(collection), std::move(body)};
  return e;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op || a->path != b->path || a->vars != b->vars ||
      a->args.size() != b->args.size())
    return false;
  if (a->op == ExprOp::Literal && !(a->literal == b->literal)) return false;
  for (size_t i = 0; i < a->args.size(); ++i) {
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  }
  return true;
}

std::string_view op_symbol(ExprOp op) {
  switch (op) {
    case ExprOp::Not: return "not";
    case ExprOp::Neg: return "-";
    case ExprOp::And: return "and";
    case ExprOp::Or: return "or";
    case ExprOp::Implies: return "implies";
    case ExprOp::Eq: return "=";
    case ExprOp::Ne: return "<>";
    case ExprOp::Lt: return "<";
    case ExprOp::Le: return "<=";
    case ExprOp::Gt: return ">";
    case ExprOp::Ge: return ">=";
    case ExprOp::Add: return "+";
    case ExprOp::Sub: return "-";
    case ExprOp::Mul: return "*";
    case ExprOp::Div: return "/";
    default: return "";
  }
}

std::string print_expr(const Expr& e) {
  switch (e.op) {
    case ExprOp::Literal: return value_to_string(e.literal);
    case ExprOp::Path: return join_path(e.path);
    case ExprOp::Not: return "not " + print_child(*e.args[0], precedence(e.op), true);
    case ExprOp::Neg: return "-" + print_child(*e.args[0], precedence(e.op), true);
    case ExprOp::Size: return print_expr(*e.args[0]) + "->size()";
    case ExprOp::ForAll: {
      std::string vars;
      for (size_t i = 0; i < e.vars.size(); ++i) {
        if (i) vars += ", ";
        vars += e.vars[i];
      }
      return print_expr(*e.args[0]) + "->forAll(" + vars + " | " + print_expr(*e.args[1]) + ")";
    }
    default: {
      int p = precedence(e.op);
      return print_child(*e.args[0], p, false) + " " + std::string(op_symbol(e.op)) + " " +
             print_child(*e.args[1], p, true);
    }
  }
}

}  // namespace envdt
