#include "envdt/validation.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

namespace envdt {

namespace {

class Checker {
 public:
  explicit Checker(const EnvironmentModel& m) : model_(m) {}

  ValidationReport run() {
    check_names();
    for (const auto& c : model_.classes) check_class(c);
    for (const auto& t : model_.twin_classes) {
      if (!model_.find_class(t)) error("model", "twin class '" + t + "' is not declared");
    }
    for (const auto& m : model_.machines) check_machine(m);
    check_submachine_cycles();
    for (const auto& c : model_.constraints) check_constraint(c);
    return std::move(report_);
  }

 private:
  void error(std::string location, std::string message, const SourceSpan& span = {}) {
    report_.diagnostics.push_back({Severity::Error, std::move(location), std::move(message), span});
  }

  template <class Range, class Key>
  void check_unique(const Range& items, Key key, const std::string& what) {
    std::set<std::string> seen;
    for (const auto& item : items) {
      const std::string& k = key(item);
      if (!seen.insert(k).second) error("model", "duplicate " + what + " '" + k + "'");
    }
  }

  void check_names() {
    check_unique(model_.classes, [](const auto& c) -> const std::string& { return c.name; }, "class");
    check_unique(model_.machines, [](const auto& m) -> const std::string& { return m.name; }, "machine");
    check_unique(model_.constraints, [](const auto& c) -> const std::string& { return c.id; }, "constraint");
    check_unique(model_.params, [](const auto& p) -> const std::string& { return p.name; }, "parameter");
    check_unique(model_.signals, [](const auto& s) -> const std::string& { return s.label; }, "signal");
    for (const auto& s : model_.signals) {
      if (library_signal_from_string(s.label)) {
        error("model", "signal '" + s.label + "' shadows a library signal");
      }
    }
  }

  void check_class(const ComponentClass& c) {
    std::string loc = "class " + c.name;
    check_unique(c.properties, [](const auto& p) -> const std::string& { return p.name; }, "property in " + c.name);
    check_unique(c.associations, [](const auto& a) -> const std::string& { return a.role; }, "role in " + c.name);
    for (const auto& p : c.properties) {
      if (p.range) {
        if (p.type != PrimitiveType::Int && p.type != PrimitiveType::Real) {
          error(loc, "property '" + p.name + "' has a range but is not numeric", c.span);
        } else if (!(p.range->first <= p.range->second)) {
          error(loc, "property '" + p.name + "' has an empty range", c.span);
        }
      }
      if (p.type == PrimitiveType::Enum && p.enum_values.empty()) {
        error(loc, "enum property '" + p.name + "' has no literals", c.span);
      }
    }
    for (const auto& a : c.associations) {
      if (!model_.find_class(a.target)) {
        error(loc, "association '" + a.role + "' targets unknown class '" + a.target + "'", c.span);
      }
      if (a.lower < 0 || a.lower > a.upper) {
        error(loc, fmt::format("association '{}' multiplicity [{}..{}] violates 0 <= lower <= upper",
                               a.role, a.lower, a.upper),
              c.span);
      }
    }
    if (c.owned_behavior && !model_.find_machine(*c.owned_behavior)) {
      error(loc, "owned behavior '" + *c.owned_behavior + "' is not a declared machine", c.span);
    }
  }

  void check_block(const BehaviorMachine& m, const ComponentClass* owner, const State& s,
                   BehaviorSlot slot) {
    const auto& block = s.behavior(slot);
    if (!block || !owner) return;
    std::string loc = fmt::format("machine {}, state {}, {}", m.name, s.name, to_string(slot));
    for (const auto& st : block->statements) {
      switch (st.kind) {
        case StatementKind::Set:
        case StatementKind::Rand: {
          PathTarget t = resolve_path(model_, *owner, st.target);
          if (t.kind != PathTargetKind::Property) {
            error(loc, "target is not a property: " + (t.error.empty() ? "path" : t.error), s.span);
            break;
          }
          if (st.kind == StatementKind::Set) {
            check_expr(loc, *owner, st.value, {}, s.span);
          } else {
            if (!is_numeric(st.low) || !is_numeric(st.high) ||
                as_double(st.low) > as_double(st.high)) {
              error(loc, "rand bounds must be numeric with low <= high", s.span);
            }
            if (t.property->type != PrimitiveType::Int && t.property->type != PrimitiveType::Real) {
              error(loc, "rand target must be numeric", s.span);
            }
          }
          break;
        }
        case StatementKind::Wait:
          if (st.wait_ms < 0) error(loc, "wait must be non-negative", s.span);
          break;
        case StatementKind::Emit:
          if (!st.signal) error(loc, "emit without a signal", s.span);
          break;
        case StatementKind::Log:
          break;
      }
    }
  }

  void check_expr(const std::string& loc, const ComponentClass& context, const ExprPtr& e,
                  std::vector<std::pair<std::string, std::string>> bound, const SourceSpan& span) {
    if (!e) {
      error(loc, "missing expression", span);
      return;
    }
    switch (e->op) {
      case ExprOp::Literal:
        return;
      case ExprOp::Path: {
        PathTarget t = resolve_path(model_, context, e->path, bound);
        if (t.kind == PathTargetKind::Invalid) error(loc, t.error, span);
        return;
      }
      case ExprOp::Size: {
        PathTarget t = e->args[0]->op == ExprOp::Path
                           ? resolve_path(model_, context, e->args[0]->path, bound)
                           : PathTarget{};
        if (t.kind != PathTargetKind::Collection) error(loc, "size() requires a collection", span);
        return;
      }
      case ExprOp::ForAll: {
        PathTarget t = e->args[0]->op == ExprOp::Path
                           ? resolve_path(model_, context, e->args[0]->path, bound)
                           : PathTarget{};
        if (t.kind != PathTargetKind::Collection) {
          error(loc, "forAll() requires a collection", span);
          return;
        }
        if (e->vars.empty() || e->vars.size() > 2) error(loc, "forAll() takes one or two iterators", span);
        for (const auto& v : e->vars) bound.emplace_back(v, t.association->target);
        check_expr(loc, context, e->args[1], bound, span);
        return;
      }
      default:
        for (const auto& a : e->args) check_expr(loc, context, a, bound, span);
    }
  }

  void check_machine(const BehaviorMachine& m) {
    std::string loc = "machine " + m.name;
    const ComponentClass* owner = model_.find_class(m.owner);
    if (!owner) error(loc, "owner class '" + m.owner + "' is not declared", m.span);
    check_unique(m.states, [](const auto& s) -> const std::string& { return s.name; }, "state in " + m.name);
    check_unique(m.transitions, [](const auto& t) -> const std::string& { return t.name; }, "transition in " + m.name);

    int initials = 0;
    bool has_final = false;
    for (const auto& s : m.states) {
      std::string sloc = loc + ", state " + s.name;
      if (s.kind == StateKind::Initial) ++initials;
      if (s.kind == StateKind::Final) has_final = true;
      if (s.kind == StateKind::Initial && (s.has_behaviors() || s.submachine)) {
        error(sloc, "initial state must be bare", s.span);
      }
      if (s.kind == StateKind::Final && (s.has_behaviors() || s.submachine)) {
        error(sloc, "final state must be bare", s.span);
      }
      if (s.submachine && !model_.find_machine(*s.submachine)) {
        error(sloc, "submachine '" + *s.submachine + "' is not a declared machine", s.span);
      }
      for (BehaviorSlot slot : {BehaviorSlot::Entry, BehaviorSlot::Do, BehaviorSlot::Exit}) {
        check_block(m, owner, s, slot);
      }
    }
    if (initials != 1) {
      error(loc, fmt::format("machine must have exactly one initial state, found {}", initials), m.span);
    }

    for (const auto& t : m.transitions) {
      std::string tloc = loc + ", transition " + t.name;
      const State* src = m.find_state(t.source);
      const State* dst = m.find_state(t.target);
      if (!src) error(tloc, "unknown source state '" + t.source + "'", t.span);
      if (!dst) error(tloc, "unknown target state '" + t.target + "'", t.span);
      if (src && src->kind == StateKind::Final) error(tloc, "transition leaves a final state", t.span);
      if (dst && dst->kind == StateKind::Initial) error(tloc, "transition enters the initial state", t.span);
      if (t.belief && !(t.belief->degree >= 0.0 && t.belief->degree <= 1.0)) {
        error(tloc, "belief out of [0,1]", t.span);
      }
      if (t.dist) {
        try {
          check_parameters(*t.dist);
        } catch (const InvalidParameters& e) {
          error(tloc, e.what(), t.span);
        }
      }
    }

    if (!has_final && !has_cycle(m)) {
      error(loc, "machine has neither a final state nor a cycle", m.span);
    }
    if (const State* init = m.initial_state(); init && initials == 1) {
      std::set<std::string> reached{init->name};
      std::vector<std::string> work{init->name};
      while (!work.empty()) {
        std::string cur = work.back();
        work.pop_back();
        for (std::size_t i : m.outgoing(cur)) {
          if (reached.insert(m.transitions[i].target).second) work.push_back(m.transitions[i].target);
        }
      }
      for (const auto& s : m.states) {
        if (!reached.count(s.name)) {
          error(loc + ", state " + s.name, "state is unreachable from the initial state", s.span);
        }
      }
    }
  }

  static bool has_cycle(const BehaviorMachine& m) {
    std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
    std::function<bool(const std::string&)> visit = [&](const std::string& s) {
      color[s] = 1;
      for (std::size_t i : m.outgoing(s)) {
        const std::string& n = m.transitions[i].target;
        if (color[n] == 1) return true;
        if (color[n] == 0 && visit(n)) return true;
      }
      color[s] = 2;
      return false;
    };
    for (const auto& s : m.states) {
      if (color[s.name] == 0 && visit(s.name)) return true;
    }
    return false;
  }

  void check_submachine_cycles() {
    std::map<std::string, std::vector<std::string>> edges;
    for (const auto& m : model_.machines) {
      for (const auto& s : m.states) {
        if (s.submachine && model_.find_machine(*s.submachine)) edges[m.name].push_back(*s.submachine);
      }
    }
    std::map<std::string, int> color;
    std::set<std::string> reported;
    std::function<void(const std::string&)> visit = [&](const std::string& n) {
      color[n] = 1;
      for (const auto& next : edges[n]) {
        if (color[next] == 1) {
          if (reported.insert(next).second) {
            error("machine " + next, "submachine references form a cycle through '" + n + "'");
          }
        } else if (color[next] == 0) {
          visit(next);
        }
      }
      color[n] = 2;
    };
    for (const auto& m : model_.machines) {
      if (color[m.name] == 0) visit(m.name);
    }
  }

  void check_constraint(const Constraint& c) {
    std::string loc = "constraint " + c.id;
    const ComponentClass* ctx = model_.find_class(c.context);
    if (!ctx) {
      error(loc, "context class '" + c.context + "' is not declared", c.span);
      return;
    }
    check_expr(loc, *ctx, c.expr, {}, c.span);
  }

  const EnvironmentModel& model_;
  ValidationReport report_;
};

}  // namespace

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(), [](const auto& d) {
    return d.severity == Severity::Error;
  }));
}

ValidationReport validate_model(const EnvironmentModel& model) { return Checker(model).run(); }

std::string format_diagnostic(const Diagnostic& d) {
  std::string where;
  if (d.span.line > 0) {
    where = fmt::format("{}:{}:{}: ", d.span.file.empty() ? "<input>" : d.span.file, d.span.line,
                        d.span.column_start);
  }
  return fmt::format("{}{}: {}: {}", where, d.severity == Severity::Error ? "error" : "warning",
                     d.location, d.message);
}

}  // namespace envdt
