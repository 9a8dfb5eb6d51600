#include "envdt/dsl.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace envdt {

namespace {

enum class Tok { Ident, Int, Real, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
  int col_end = 1;
};

struct SyntaxError {
  ParseError error;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        t.col_end = col_;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (is_ident_start(c)) {
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) t.text += take();
        t.kind = Tok::Ident;
      } else if (is_digit(c)) {
        lex_number(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        lex_punct(t);
      }
      t.col_end = col_;
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') take();
      } else {
        return;
      }
    }
  }

  [[noreturn]] void fail(const Token& at, std::string expected, std::string found) {
    SourceSpan span{file_, at.line, at.col, col_};
    throw SyntaxError{{span, std::move(expected), std::move(found)}};
  }

  void lex_number(Token& t) {
    t.kind = Tok::Int;
    while (is_digit(peek())) t.text += take();
    if (peek() == '.' && is_digit(peek(1))) {
      t.kind = Tok::Real;
      t.text += take();
      while (is_digit(peek())) t.text += take();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
      t.kind = Tok::Real;
      t.text += take();
      if (peek() == '+' || peek() == '-') t.text += take();
      while (is_digit(peek())) t.text += take();
    }
  }

  void lex_string(Token& t) {
    t.kind = Tok::String;
    take();
    while (true) {
      if (pos_ >= src_.size() || peek() == '\n') fail(t, "closing '\"'", "end of line");
      char c = take();
      if (c == '"') return;
      if (c == '\\') {
        if (pos_ >= src_.size()) fail(t, "escape sequence", "end of input");
        char e = take();
        t.text += e == 'n' ? '\n' : e;
      } else {
        t.text += c;
      }
    }
  }

  void lex_punct(Token& t) {
    static const char* const kMulti[] = {"->", "<<", ">>", "<>", "<=", ">=", "==", "!=", ".."};
    for (const char* m : kMulti) {
      if (peek() == m[0] && peek(1) == m[1]) {
        t.text += take();
        t.text += take();
        t.kind = Tok::Punct;
        return;
      }
    }
    static const std::string_view kSingle = "{}()[];:,.=<>+-*/|";
    char c = peek();
    if (kSingle.find(c) == std::string_view::npos) {
      fail(t, "token", fmt::format("'{}'", c));
    }
    t.text += take();
    t.kind = Tok::Punct;
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return fmt::format("\"{}\"", t.text);
    default: return fmt::format("'{}'", t.text);
  }
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file) : toks_(std::move(tokens)), file_(std::move(file)) {}

  EnvironmentModel parse() {
    collect_signal_decls();
    EnvironmentModel m;
    expect_word("model");
    m.name = expect_ident("model name");
    expect(";");
    while (!at_end()) {
      if (accept_word("param")) {
        parse_param(m);
      } else if (accept_word("signal")) {
        parse_signal(m);
      } else if (peek_word("component") || peek_word("twin")) {
        parse_component(m);
      } else if (accept_word("constraint")) {
        parse_constraint(m);
      } else if (accept_word("machine")) {
        parse_machine(m);
      } else {
        fail("declaration");
      }
    }
    resolve(m);
    return m;
  }

  std::vector<ParseError> resolution_errors;

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  bool at_end() const { return cur().kind == Tok::End; }

  SourceSpan span_of(const Token& t) const { return {file_, t.line, t.col, t.col_end}; }

  [[noreturn]] void fail(std::string expected) const {
    throw SyntaxError{{span_of(cur()), std::move(expected), describe(cur())}};
  }

  bool peek_punct(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool peek_word(std::string_view w) const { return cur().kind == Tok::Ident && cur().text == w; }

  bool accept(std::string_view p) {
    if (!peek_punct(p)) return false;
    ++pos_;
    return true;
  }

  bool accept_word(std::string_view w) {
    if (!peek_word(w)) return false;
    ++pos_;
    return true;
  }

  void expect(std::string_view p) {
    if (!accept(p)) fail(fmt::format("'{}'", p));
  }

  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail(fmt::format("'{}'", w));
  }

  std::string expect_ident(std::string_view what) {
    if (cur().kind != Tok::Ident) fail(std::string(what));
    return toks_[pos_++].text;
  }

  std::string expect_string() {
    if (cur().kind != Tok::String) fail("string literal");
    return toks_[pos_++].text;
  }

  Value parse_number_value() {
    bool neg = accept("-");
    const Token& t = cur();
    if (t.kind == Tok::Int) {
      ++pos_;
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) {
        throw SyntaxError{{span_of(t), "integer in 64-bit range", describe(t)}};
      }
      return neg ? -v : v;
    }
    if (t.kind == Tok::Real) {
      ++pos_;
      double v = std::stod(t.text);
      return neg ? -v : v;
    }
    fail("number");
  }

  double parse_number() { return as_double(parse_number_value()); }

  std::int64_t parse_int() {
    Value v = parse_number_value();
    if (!std::holds_alternative<std::int64_t>(v)) fail("integer");
    return std::get<std::int64_t>(v);
  }

  Value parse_literal_value() {
    if (cur().kind == Tok::String) return expect_string();
    if (accept_word("true")) return true;
    if (accept_word("false")) return false;
    return parse_number_value();
  }

  // ---- signals -------------------------------------------------------------

  void collect_signal_decls() {
    for (std::size_t i = 0; i + 3 < toks_.size(); ++i) {
      if (toks_[i].kind == Tok::Ident && toks_[i].text == "signal" && toks_[i + 1].kind == Tok::Ident &&
          toks_[i + 2].text == ":" && toks_[i + 3].kind == Tok::Ident) {
        if (auto cat = category_from_string(toks_[i + 3].text)) {
          declared_signals_.emplace(toks_[i + 1].text, *cat);
        }
      }
    }
  }

  SignalKind parse_signal_ref() {
    const Token& t = cur();
    std::string name = expect_ident("signal name");
    if (auto lib = library_signal_from_string(name)) return SignalKind::library(*lib);
    if (auto it = declared_signals_.find(name); it != declared_signals_.end()) {
      return SignalKind::user_interaction(name, it->second);
    }
    resolution_errors.push_back({span_of(t), fmt::format("unknown signal '{}'", name), {}});
    return SignalKind::user_interaction(name, SignalCategory::Info);
  }

  std::vector<Stereotype> parse_stereotypes() {
    std::vector<Stereotype> out;
    if (!accept("<<")) return out;
    do {
      const Token& t = cur();
      std::string name = expect_ident("stereotype");
      auto s = stereotype_from_string(name);
      if (!s) throw SyntaxError{{span_of(t), "stereotype", describe(t)}};
      out.push_back(*s);
    } while (accept(","));
    expect(">>");
    return out;
  }

  // ---- declarations --------------------------------------------------------

  void parse_param(EnvironmentModel& m) {
    ModelParam p;
    p.name = expect_ident("parameter name");
    expect("=");
    p.value = parse_literal_value();
    expect(";");
    m.params.push_back(std::move(p));
  }

  void parse_signal(EnvironmentModel& m) {
    SignalDecl s;
    s.label = expect_ident("signal name");
    expect(":");
    const Token& t = cur();
    auto cat = category_from_string(expect_ident("signal category"));
    if (!cat) throw SyntaxError{{span_of(t), "'info', 'warning' or 'error'", describe(t)}};
    s.category = *cat;
    expect(";");
    m.signals.push_back(std::move(s));
  }

  void parse_component(EnvironmentModel& m) {
    bool twin = accept_word("twin");
    expect_word("component");
    ComponentClass c;
    c.span = span_of(cur());
    c.name = expect_ident("component name");
    c.stereotypes = parse_stereotypes();
    expect("{");
    while (!accept("}")) {
      if (accept_word("property")) {
        c.properties.push_back(parse_property());
      } else if (accept_word("reception")) {
        c.receptions.push_back(parse_signal_ref());
        expect(";");
      } else if (accept_word("behavior")) {
        if (c.owned_behavior) fail("at most one 'behavior'");
        c.owned_behavior = expect_ident("machine name");
        expect(";");
      } else if (accept_word("assoc")) {
        Association a;
        a.role = expect_ident("role name");
        expect("->");
        a.target = expect_ident("class name");
        expect("[");
        a.lower = static_cast<int>(parse_int());
        expect("..");
        a.upper = static_cast<int>(parse_int());
        expect("]");
        expect(";");
        c.associations.push_back(std::move(a));
      } else {
        fail("class member");
      }
    }
    if (twin) m.twin_classes.push_back(c.name);
    m.classes.push_back(std::move(c));
  }

  PropertyDecl parse_property() {
    PropertyDecl p;
    p.name = expect_ident("property name");
    expect(":");
    const Token& t = cur();
    std::string type = expect_ident("type");
    if (type == "int") p.type = PrimitiveType::Int;
    else if (type == "real") p.type = PrimitiveType::Real;
    else if (type == "bool") p.type = PrimitiveType::Bool;
    else if (type == "string") p.type = PrimitiveType::String;
    else if (type == "enum") p.type = PrimitiveType::Enum;
    else throw SyntaxError{{span_of(t), "type", describe(t)}};
    if (p.type == PrimitiveType::Enum) {
      expect("{");
      do {
        p.enum_values.push_back(expect_ident("enum literal"));
      } while (accept(","));
      expect("}");
    }
    if (accept_word("in")) {
      expect("[");
      double lo = parse_number();
      expect(",");
      double hi = parse_number();
      expect("]");
      p.range = std::pair{lo, hi};
    }
    if (accept_word("unit")) p.unit = expect_string();
    expect(";");
    return p;
  }

  void parse_constraint(EnvironmentModel& m) {
    Constraint c;
    c.span = span_of(cur());
    c.id = expect_ident("constraint id");
    expect_word("on");
    c.context = expect_ident("class name");
    expect(":");
    c.expr = parse_expr();
    expect(";");
    m.constraints.push_back(std::move(c));
  }

  void parse_machine(EnvironmentModel& m) {
    BehaviorMachine sm;
    sm.span = span_of(cur());
    sm.name = expect_ident("machine name");
    expect_word("for");
    sm.owner = expect_ident("class name");
    expect("{");
    while (!accept("}")) {
      if (peek_word("initial")) {
        State s;
        s.span = span_of(cur());
        ++pos_;
        s.name = "initial";
        s.kind = StateKind::Initial;
        if (accept("->")) {
          Transition t;
          t.span = s.span;
          t.name = "initial";
          t.source = "initial";
          t.target = expect_ident("state name");
          parse_transition_tail(t);
          sm.transitions.push_back(std::move(t));
        }
        expect(";");
        sm.states.push_back(std::move(s));
      } else if (accept_word("final")) {
        State s;
        s.span = span_of(cur());
        s.kind = StateKind::Final;
        s.name = expect_ident("state name");
        expect(";");
        sm.states.push_back(std::move(s));
      } else if (accept_word("state")) {
        sm.states.push_back(parse_state());
      } else if (accept_word("transition")) {
        Transition t;
        t.span = span_of(cur());
        t.name = expect_ident("transition name");
        expect(":");
        t.source = expect_ident("state name");
        expect("->");
        t.target = expect_ident("state name");
        parse_transition_tail(t);
        expect(";");
        sm.transitions.push_back(std::move(t));
      } else {
        fail("machine member");
      }
    }
    m.machines.push_back(std::move(sm));
  }

  void parse_transition_tail(Transition& t) {
    if (accept_word("on")) t.trigger = parse_signal_ref();
    if (accept_word("belief")) {
      BeliefAnnotation b;
      b.degree = parse_number();
      if (cur().kind == Tok::String) b.description = expect_string();
      t.belief = std::move(b);
    }
    if (accept_word("dist")) {
      const Token& start = cur();
      std::string text = expect_ident("distribution kind");
      expect("(");
      text += '(';
      bool first = true;
      while (!accept(")")) {
        if (!first) {
          expect(",");
          text += ',';
        }
        first = false;
        text += expect_ident("parameter name");
        expect("=");
        text += '=';
        text += value_to_string(parse_number_value());
      }
      text += ')';
      try {
        t.dist = parse_distribution(text);
      } catch (const std::exception& e) {
        throw SyntaxError{{span_of(start), "valid distribution", e.what()}};
      }
    }
  }

  State parse_state() {
    State s;
    s.span = span_of(cur());
    s.name = expect_ident("state name");
    s.stereotypes = parse_stereotypes();
    if (accept(";")) return s;
    expect("{");
    while (!accept("}")) {
      if (accept_word("entry")) {
        s.entry = parse_block();
      } else if (accept_word("do")) {
        s.do_activity = parse_block();
      } else if (accept_word("exit")) {
        s.exit = parse_block();
      } else if (accept_word("submachine")) {
        s.submachine = expect_ident("machine name");
        expect(";");
      } else {
        fail("state member");
      }
    }
    return s;
  }

  std::vector<std::string> parse_path() {
    std::vector<std::string> out{expect_ident("path")};
    while (accept(".")) out.push_back(expect_ident("path segment"));
    return out;
  }

  std::vector<std::string> parse_target_path() {
    auto p = parse_path();
    if (p.front() != "self") p.insert(p.begin(), "self");
    return p;
  }

  ActionBlock parse_block() {
    ActionBlock b;
    expect("{");
    while (!accept("}")) {
      Statement st;
      if (accept_word("set")) {
        st.kind = StatementKind::Set;
        st.target = parse_target_path();
        expect("=");
        st.value = parse_expr();
      } else if (accept_word("rand")) {
        st.kind = StatementKind::Rand;
        st.target = parse_target_path();
        expect_word("in");
        expect("[");
        st.low = parse_number_value();
        expect(",");
        st.high = parse_number_value();
        expect("]");
      } else if (accept_word("emit")) {
        st.kind = StatementKind::Emit;
        st.signal = parse_signal_ref();
      } else if (accept_word("log")) {
        st.kind = StatementKind::Log;
        st.text = expect_string();
      } else if (accept_word("wait")) {
        st.kind = StatementKind::Wait;
        st.wait_ms = parse_int();
      } else {
        fail("statement");
      }
      expect(";");
      b.statements.push_back(std::move(st));
    }
    return b;
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr parse_expr() { return parse_implies(); }

  ExprPtr parse_implies() {
    ExprPtr lhs = parse_or();
    while (accept_word("implies")) lhs = Expr::binary(ExprOp::Implies, lhs, parse_or());
    return lhs;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (accept_word("or")) lhs = Expr::binary(ExprOp::Or, lhs, parse_and());
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (accept_word("and")) lhs = Expr::binary(ExprOp::And, lhs, parse_not());
    return lhs;
  }

  ExprPtr parse_not() {
    if (accept_word("not")) return Expr::unary(ExprOp::Not, parse_not());
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    static const std::pair<const char*, ExprOp> kOps[] = {
        {"=", ExprOp::Eq},  {"==", ExprOp::Eq}, {"<>", ExprOp::Ne}, {"!=", ExprOp::Ne},
        {"<", ExprOp::Lt},  {"<=", ExprOp::Le}, {">", ExprOp::Gt},  {">=", ExprOp::Ge},
    };
    for (const auto& [sym, op] : kOps) {
      if (accept(sym)) return Expr::binary(op, lhs, parse_additive());
    }
    return lhs;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (true) {
      if (accept("+")) lhs = Expr::binary(ExprOp::Add, lhs, parse_multiplicative());
      else if (accept("-")) lhs = Expr::binary(ExprOp::Sub, lhs, parse_multiplicative());
      else return lhs;
    }
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (true) {
      if (accept("*")) lhs = Expr::binary(ExprOp::Mul, lhs, parse_unary());
      else if (accept("/")) lhs = Expr::binary(ExprOp::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  ExprPtr parse_unary() {
    if (accept("-")) {
      ExprPtr operand = parse_unary();
      if (operand->op == ExprOp::Literal) {
        if (auto* i = std::get_if<std::int64_t>(&operand->literal)) return Expr::lit(-*i);
        if (auto* d = std::get_if<double>(&operand->literal)) return Expr::lit(-*d);
      }
      return Expr::unary(ExprOp::Neg, operand);
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (accept("->")) {
      if (e->op != ExprOp::Path) fail("collection path before '->'");
      std::string op = expect_ident("'size' or 'forAll'");
      expect("(");
      if (op == "size") {
        expect(")");
        e = Expr::size(e);
      } else if (op == "forAll") {
        std::vector<std::string> vars{expect_ident("iterator name")};
        while (accept(",")) vars.push_back(expect_ident("iterator name"));
        expect("|");
        ExprPtr body = parse_expr();
        expect(")");
        e = Expr::for_all(e, std::move(vars), body);
      } else {
        --pos_;
        --pos_;
        fail("'size' or 'forAll'");
      }
    }
    return e;
  }

  ExprPtr parse_primary() {
    if (accept("(")) {
      ExprPtr e = parse_expr();
      expect(")");
      return e;
    }
    const Token& t = cur();
    if (t.kind == Tok::Int || t.kind == Tok::Real || t.kind == Tok::String) return Expr::lit(parse_literal_value());
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "false") return Expr::lit(parse_literal_value());
      return Expr::make_path(parse_path());
    }
    fail("expression");
  }

  // ---- resolution ----------------------------------------------------------

  void unresolved(const SourceSpan& span, std::string message) {
    resolution_errors.push_back({span, std::move(message), {}});
  }

  void resolve(const EnvironmentModel& m) {
    for (const auto& c : m.classes) {
      if (c.owned_behavior && !m.find_machine(*c.owned_behavior)) {
        unresolved(c.span, fmt::format("unknown machine '{}'", *c.owned_behavior));
      }
      for (const auto& a : c.associations) {
        if (!m.find_class(a.target)) unresolved(c.span, fmt::format("unknown class '{}'", a.target));
      }
    }
    for (const auto& c : m.constraints) {
      if (!m.find_class(c.context)) unresolved(c.span, fmt::format("unknown class '{}'", c.context));
    }
    for (const auto& sm : m.machines) {
      if (!m.find_class(sm.owner)) unresolved(sm.span, fmt::format("unknown class '{}'", sm.owner));
      for (const auto& s : sm.states) {
        if (s.submachine && !m.find_machine(*s.submachine)) {
          unresolved(s.span, fmt::format("unknown machine '{}'", *s.submachine));
        }
      }
      for (const auto& t : sm.transitions) {
        for (const auto* end : {&t.source, &t.target}) {
          if (!sm.find_state(*end)) {
            unresolved(t.span, fmt::format("unknown state '{}' in machine {}", *end, sm.name));
          }
        }
      }
    }
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
  std::map<std::string, SignalCategory> declared_signals_;
};

// ---- printer ---------------------------------------------------------------

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string quoted(const std::string& s) { return value_to_string(Value{s}); }

std::string stereotype_list(const std::vector<Stereotype>& ss) {
  if (ss.empty()) return {};
  std::string out = " <<";
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (i) out += ", ";
    out += to_string(ss[i]);
  }
  return out + ">>";
}

std::string path_text(const std::vector<std::string>& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += '.';
    out += p[i];
  }
  return out;
}

void print_statement(std::ostringstream& os, const Statement& st, const std::string& indent) {
  os << indent;
  switch (st.kind) {
    case StatementKind::Set:
      os << "set " << path_text(st.target) << " = " << print_expr(*st.value);
      break;
    case StatementKind::Rand:
      os << "rand " << path_text(st.target) << " in [" << value_to_string(st.low) << ", "
         << value_to_string(st.high) << "]";
      break;
    case StatementKind::Emit:
      os << "emit " << st.signal->display_name();
      break;
    case StatementKind::Log:
      os << "log " << quoted(st.text);
      break;
    case StatementKind::Wait:
      os << "wait " << st.wait_ms;
      break;
  }
  os << ";\n";
}

void print_transition_tail(std::ostringstream& os, const Transition& t) {
  if (t.trigger) os << " on " << t.trigger->display_name();
  if (t.belief) {
    os << " belief " << number(t.belief->degree);
    if (!t.belief->description.empty()) os << ' ' << quoted(t.belief->description);
  }
  if (t.dist) os << " dist " << format_distribution(*t.dist);
}

void print_machine(std::ostringstream& os, const BehaviorMachine& m) {
  os << "machine " << m.name << " for " << m.owner << " {\n";
  bool initial_inline = !m.transitions.empty() && m.transitions[0].name == "initial" &&
                        m.transitions[0].source == "initial";
  for (const auto& s : m.states) {
    switch (s.kind) {
      case StateKind::Initial:
        os << "  initial";
        if (initial_inline) {
          os << " -> " << m.transitions[0].target;
          print_transition_tail(os, m.transitions[0]);
        }
        os << ";\n";
        break;
      case StateKind::Final:
        os << "  final " << s.name << ";\n";
        break;
      case StateKind::Simple: {
        os << "  state " << s.name << stereotype_list(s.stereotypes);
        if (!s.has_behaviors() && !s.submachine) {
          os << ";\n";
          break;
        }
        os << " {\n";
        for (BehaviorSlot slot : {BehaviorSlot::Entry, BehaviorSlot::Do, BehaviorSlot::Exit}) {
          const auto& b = s.behavior(slot);
          if (!b) continue;
          os << "    " << to_string(slot) << " {";
          if (b->empty()) {
            os << "}\n";
            continue;
          }
          os << '\n';
          for (const auto& st : b->statements) print_statement(os, st, "      ");
          os << "    }\n";
        }
        if (s.submachine) os << "    submachine " << *s.submachine << ";\n";
        os << "  }\n";
        break;
      }
    }
  }
  for (std::size_t i = initial_inline ? 1 : 0; i < m.transitions.size(); ++i) {
    const auto& t = m.transitions[i];
    os << "  transition " << t.name << ": " << t.source << " -> " << t.target;
    print_transition_tail(os, t);
    os << ";\n";
  }
  os << "}\n";
}

}  // namespace

std::string ParseError::message() const {
  if (found.empty()) return expected;
  return fmt::format("expected {}, found {}", expected, found);
}

std::string ParseError::format() const {
  return fmt::format("{}:{}:{}: error: {}", span.file.empty() ? "<input>" : span.file, span.line,
                     span.column_start, message());
}

ParseResult parse_model(std::string_view text, std::string file_name) {
  ParseResult result;
  try {
    Lexer lexer(text, file_name);
    Parser parser(lexer.run(), file_name);
    EnvironmentModel m = parser.parse();
    result.errors = std::move(parser.resolution_errors);
    if (result.errors.empty()) result.model = std::move(m);
  } catch (const SyntaxError& e) {
    result.errors.push_back(e.error);
  }
  return result;
}

std::string print_model(const EnvironmentModel& model) {
  std::ostringstream os;
  os << "model " << model.name << ";\n";
  if (!model.params.empty()) {
    os << '\n';
    for (const auto& p : model.params) os << "param " << p.name << " = " << value_to_string(p.value) << ";\n";
  }
  if (!model.signals.empty()) {
    os << '\n';
    for (const auto& s : model.signals) os << "signal " << s.label << ": " << to_string(s.category) << ";\n";
  }
  for (const auto& c : model.classes) {
    os << '\n';
    if (model.is_twin_class(c.name)) os << "twin ";
    os << "component " << c.name << stereotype_list(c.stereotypes) << " {\n";
    for (const auto& p : c.properties) {
      os << "  property " << p.name << ": " << to_string(p.type);
      if (p.type == PrimitiveType::Enum) {
        os << " {";
        for (std::size_t i = 0; i < p.enum_values.size(); ++i) os << (i ? ", " : "") << p.enum_values[i];
        os << '}';
      }
      if (p.range) os << " in [" << number(p.range->first) << ", " << number(p.range->second) << ']';
      if (p.unit) os << " unit " << quoted(*p.unit);
      os << ";\n";
    }
    for (const auto& r : c.receptions) os << "  reception " << r.display_name() << ";\n";
    if (c.owned_behavior) os << "  behavior " << *c.owned_behavior << ";\n";
    for (const auto& a : c.associations) {
      os << "  assoc " << a.role << " -> " << a.target << " [" << a.lower << ".." << a.upper << "];\n";
    }
    os << "}\n";
  }
  if (!model.constraints.empty()) {
    os << '\n';
    for (const auto& c : model.constraints) {
      os << "constraint " << c.id << " on " << c.context << ": " << print_expr(*c.expr) << ";\n";
    }
  }
  for (const auto& m : model.machines) {
    os << '\n';
    print_machine(os, m);
  }
  return os.str();
}

ModelLoadError::ModelLoadError(std::string what, std::vector<ParseError> errors, bool io_failure)
    : std::runtime_error(std::move(what)), errors_(std::move(errors)), io_failure_(io_failure) {}

EnvironmentModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelLoadError(fmt::format("cannot read {}", path.string()), {}, true);
  std::stringstream buf;
  buf << in.rdbuf();
  ParseResult r = parse_model(buf.str(), path.string());
  if (!r.ok()) {
    std::string what;
    for (const auto& e : r.errors) {
      if (!what.empty()) what += '\n';
      what += e.format();
    }
    throw ModelLoadError(what, std::move(r.errors), false);
  }
  return std::move(*r.model);
}

}  // namespace envdt
