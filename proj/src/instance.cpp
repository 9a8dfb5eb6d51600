#include "envdt/instance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "envdt/stochastic.hpp"

namespace envdt {

namespace {

constexpr int kUniqueRetries = 1000;
constexpr std::size_t kMaxInstances = 100000;

using Bindings = std::vector<std::pair<std::string, std::string>>;

class Evaluator {
 public:
  Evaluator(const InstanceModel& im, const ParamTable& params) : im_(im), params_(params) {}

  Value eval(const Expr& e, std::string_view self_id, Bindings& bound) const {
    switch (e.op) {
      case ExprOp::Literal:
        return e.literal;
      case ExprOp::Path:
        return value_at(e.path, self_id, bound);
      case ExprOp::Not:
        return !as_bool(eval(*e.args[0], self_id, bound));
      case ExprOp::Neg: {
        Value v = eval(*e.args[0], self_id, bound);
        if (auto* i = std::get_if<std::int64_t>(&v)) return -*i;
        if (auto* d = std::get_if<double>(&v)) return -*d;
        throw EvalError("negation of a non-numeric value");
      }
      case ExprOp::And:
        return as_bool(eval(*e.args[0], self_id, bound)) && as_bool(eval(*e.args[1], self_id, bound));
      case ExprOp::Or:
        return as_bool(eval(*e.args[0], self_id, bound)) || as_bool(eval(*e.args[1], self_id, bound));
      case ExprOp::Implies:
        return !as_bool(eval(*e.args[0], self_id, bound)) || as_bool(eval(*e.args[1], self_id, bound));
      case ExprOp::Eq:
      case ExprOp::Ne:
      case ExprOp::Lt:
      case ExprOp::Le:
      case ExprOp::Gt:
      case ExprOp::Ge:
        return compare(e.op, eval(*e.args[0], self_id, bound), eval(*e.args[1], self_id, bound));
      case ExprOp::Add:
      case ExprOp::Sub:
      case ExprOp::Mul:
      case ExprOp::Div:
        return arith(e.op, eval(*e.args[0], self_id, bound), eval(*e.args[1], self_id, bound));
      case ExprOp::Size:
        return static_cast<std::int64_t>(collection(e.args[0]->path, self_id, bound).size());
      case ExprOp::ForAll:
        return for_all(e, self_id, bound);
    }
    throw EvalError("unknown operator");
  }

 private:
  static bool as_bool(const Value& v) {
    if (auto* b = std::get_if<bool>(&v)) return *b;
    throw EvalError("expected a boolean, got " + value_to_string(v));
  }

  static Value compare(ExprOp op, const Value& a, const Value& b) {
    int cmp = 0;
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
      auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else if (is_numeric(a) && is_numeric(b)) {
      double x = as_double(a), y = as_double(b);
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else if (a.index() == b.index()) {
      if (op != ExprOp::Eq && op != ExprOp::Ne) {
        if (!std::holds_alternative<std::string>(a)) throw EvalError("ordering of booleans");
      }
      cmp = a < b ? -1 : (b < a ? 1 : 0);
    } else {
      throw EvalError(fmt::format("cannot compare {} with {}", value_to_string(a), value_to_string(b)));
    }
    switch (op) {
      case ExprOp::Eq: return cmp == 0;
      case ExprOp::Ne: return cmp != 0;
      case ExprOp::Lt: return cmp < 0;
      case ExprOp::Le: return cmp <= 0;
      case ExprOp::Gt: return cmp > 0;
      default: return cmp >= 0;
    }
  }

  static Value arith(ExprOp op, const Value& a, const Value& b) {
    if (!is_numeric(a) || !is_numeric(b)) throw EvalError("arithmetic on a non-numeric value");
    if (op != ExprOp::Div && std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
      auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
      switch (op) {
        case ExprOp::Add: return x + y;
        case ExprOp::Sub: return x - y;
        default: return x * y;
      }
    }
    double x = as_double(a), y = as_double(b);
    switch (op) {
      case ExprOp::Add: return x + y;
      case ExprOp::Sub: return x - y;
      case ExprOp::Mul: return x * y;
      default:
        if (y == 0.0) throw EvalError("division by zero");
        return x / y;
    }
  }

  std::string start_of(const std::vector<std::string>& path, std::string_view self_id,
                       const Bindings& bound) const {
    if (path[0] == "self") return std::string(self_id);
    for (auto it = bound.rbegin(); it != bound.rend(); ++it) {
      if (it->first == path[0]) return it->second;
    }
    throw EvalError("unbound name '" + path[0] + "'");
  }

  std::string walk(const std::vector<std::string>& path, std::size_t upto, std::string_view self_id,
                   const Bindings& bound) const {
    std::string cur = start_of(path, self_id, bound);
    for (std::size_t i = 1; i < upto; ++i) {
      auto next = im_.targets(cur, path[i]);
      if (next.empty()) throw EvalError(fmt::format("{} has no '{}' link", cur, path[i]));
      cur = next.front();
    }
    return cur;
  }

  Value value_at(const std::vector<std::string>& path, std::string_view self_id, const Bindings& bound) const {
    if (path.size() == 1 && path[0] != "self") {
      bool is_var = std::any_of(bound.begin(), bound.end(), [&](const auto& b) { return b.first == path[0]; });
      if (!is_var) {
        if (auto it = params_.find(path[0]); it != params_.end()) return it->second;
      }
    }
    if (path.size() == 1) return start_of(path, self_id, bound);
    std::string owner = walk(path, path.size() - 1, self_id, bound);
    const Instance* inst = im_.find(owner);
    if (!inst) throw EvalError("dangling instance " + owner);
    if (auto it = inst->values.find(path.back()); it != inst->values.end()) return it->second;
    throw EvalError(fmt::format("{} has no property '{}'", owner, path.back()));
  }

  std::vector<std::string> collection(const std::vector<std::string>& path, std::string_view self_id,
                                      const Bindings& bound) const {
    if (path.size() < 2) throw EvalError("collection path needs a role");
    std::string owner = walk(path, path.size() - 1, self_id, bound);
    return im_.targets(owner, path.back());
  }

  Value for_all(const Expr& e, std::string_view self_id, Bindings& bound) const {
    auto items = collection(e.args[0]->path, self_id, bound);
    const Expr& body = *e.args[1];
    if (e.vars.size() == 1) {
      for (const auto& item : items) {
        bound.emplace_back(e.vars[0], item);
        bool ok = as_bool(eval(body, self_id, bound));
        bound.pop_back();
        if (!ok) return false;
      }
      return true;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = 0; j < items.size(); ++j) {
        if (i == j) continue;
        bound.emplace_back(e.vars[0], items[i]);
        bound.emplace_back(e.vars[1], items[j]);
        bool ok = as_bool(eval(body, self_id, bound));
        bound.pop_back();
        bound.pop_back();
        if (!ok) return false;
      }
    }
    return true;
  }

  const InstanceModel& im_;
  const ParamTable& params_;
};

// ---- constraint shapes -----------------------------------------------------

struct Bound {
  ExprOp op;
  double value;
};

std::optional<double> numeric_operand(const Expr& e, const ParamTable& params) {
  if (e.op == ExprOp::Literal && is_numeric(e.literal)) return as_double(e.literal);
  if (e.op == ExprOp::Path && e.path.size() == 1) {
    if (auto it = params.find(e.path[0]); it != params.end() && is_numeric(it->second)) {
      return as_double(it->second);
    }
  }
  return std::nullopt;
}

ExprOp flip(ExprOp op) {
  switch (op) {
    case ExprOp::Lt: return ExprOp::Gt;
    case ExprOp::Le: return ExprOp::Ge;
    case ExprOp::Gt: return ExprOp::Lt;
    case ExprOp::Ge: return ExprOp::Le;
    default: return op;
  }
}

bool is_comparison(ExprOp op) {
  return op == ExprOp::Eq || op == ExprOp::Lt || op == ExprOp::Le || op == ExprOp::Gt || op == ExprOp::Ge;
}

void conjuncts(const ExprPtr& e, std::vector<const Expr*>& out) {
  if (e->op == ExprOp::And) {
    conjuncts(e->args[0], out);
    conjuncts(e->args[1], out);
  } else {
    out.push_back(e.get());
  }
}

/// `subject OP number` with `subject` a property path (size == false) or a
/// size() of a collection (size == true).
struct BoundTerm {
  std::vector<std::string> path;
  bool size = false;
  Bound bound;
};

std::optional<BoundTerm> bound_term(const Expr& e, const ParamTable& params) {
  if (!is_comparison(e.op)) return std::nullopt;
  auto subject = [](const Expr& s) -> std::optional<std::pair<std::vector<std::string>, bool>> {
    if (s.op == ExprOp::Path && s.path.size() >= 2 && s.path[0] == "self") return std::pair{s.path, false};
    if (s.op == ExprOp::Size && s.args[0]->op == ExprOp::Path) return std::pair{s.args[0]->path, true};
    return std::nullopt;
  };
  if (auto s = subject(*e.args[0])) {
    if (auto v = numeric_operand(*e.args[1], params)) return BoundTerm{s->first, s->second, {e.op, *v}};
  }
  if (auto s = subject(*e.args[1])) {
    if (auto v = numeric_operand(*e.args[0], params)) return BoundTerm{s->first, s->second, {flip(e.op), *v}};
  }
  return std::nullopt;
}

void tighten(std::optional<double>& lo, std::optional<double>& hi, const Bound& b, bool integral) {
  double v = b.value;
  auto raise = [&](double x) { lo = lo ? std::max(*lo, x) : x; };
  auto lower = [&](double x) { hi = hi ? std::min(*hi, x) : x; };
  switch (b.op) {
    case ExprOp::Eq: raise(v); lower(v); break;
    case ExprOp::Ge: raise(integral ? std::ceil(v) : v); break;
    case ExprOp::Le: lower(integral ? std::floor(v) : v); break;
    case ExprOp::Gt:
      raise(integral ? std::floor(v) + 1 : std::nextafter(v, std::numeric_limits<double>::infinity()));
      break;
    case ExprOp::Lt:
      lower(integral ? std::ceil(v) - 1 : std::nextafter(v, -std::numeric_limits<double>::infinity()));
      break;
    default: break;
  }
}

struct Interval {
  std::optional<double> lo;
  std::optional<double> hi;
  std::vector<std::string> sources;
};

struct GenerationPlan {
  std::map<std::pair<std::string, std::string>, Interval> property_bounds;
  std::map<std::pair<std::string, std::string>, Interval> cardinality_bounds;
  struct UniqueRule {
    std::string id;
    std::string owner;
    std::string role;
    std::string property;
  };
  std::vector<UniqueRule> unique;
};

GenerationPlan plan_generation(const EnvironmentModel& model, const ParamTable& params) {
  GenerationPlan plan;
  for (const auto& c : model.constraints) {
    const ComponentClass* ctx = model.find_class(c.context);
    if (!ctx) continue;
    ConstraintShape shape = classify_constraint(c, params);
    if (shape.kind == ConstraintKind::BoolExpr) continue;
    PathTarget t = resolve_path(model, *ctx, shape.path);
    if (shape.kind == ConstraintKind::Range || shape.kind == ConstraintKind::Positive) {
      if (t.kind != PathTargetKind::Property) continue;
      auto& iv = plan.property_bounds[{t.owner->name, t.property->name}];
      if (shape.min) iv.lo = iv.lo ? std::max(*iv.lo, *shape.min) : *shape.min;
      if (shape.max) iv.hi = iv.hi ? std::min(*iv.hi, *shape.max) : *shape.max;
      iv.sources.push_back(c.id);
    } else if (shape.kind == ConstraintKind::Cardinality) {
      if (t.kind != PathTargetKind::Collection) continue;
      auto& iv = plan.cardinality_bounds[{t.owner->name, t.association->role}];
      if (shape.min) iv.lo = iv.lo ? std::max(*iv.lo, *shape.min) : *shape.min;
      if (shape.max) iv.hi = iv.hi ? std::min(*iv.hi, *shape.max) : *shape.max;
      iv.sources.push_back(c.id);
    } else if (shape.kind == ConstraintKind::Unique) {
      if (t.kind != PathTargetKind::Collection) continue;
      plan.unique.push_back({c.id, t.owner->name, t.association->role, shape.unique_property});
    }
  }
  return plan;
}

bool is_integral_type(PrimitiveType t) { return t == PrimitiveType::Int; }

}  // namespace

// ---- InstanceModel ---------------------------------------------------------

const Instance* InstanceModel::find(std::string_view id) const {
  for (const auto& i : instances_) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

Instance* InstanceModel::find(std::string_view id) {
  for (auto& i : instances_) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

std::vector<std::string> InstanceModel::targets(std::string_view id, std::string_view role) const {
  std::vector<std::string> out;
  for (const auto& l : links_) {
    if (l.source == id && l.role == role) out.push_back(l.target);
  }
  return out;
}

const Instance* InstanceModel::first_of(std::string_view cls) const {
  for (const auto& i : instances_) {
    if (i.cls == cls) return &i;
  }
  return nullptr;
}

const Instance* InstanceModel::nearest_of(std::string_view cls, std::string_view from) const {
  if (find(from)) {
    std::set<std::string, std::less<>> seen{std::string(from)};
    std::deque<std::string> queue{std::string(from)};
    while (!queue.empty()) {
      std::string cur = queue.front();
      queue.pop_front();
      const Instance* inst = find(cur);
      if (inst && inst->cls == cls) return inst;
      for (const auto& l : links_) {
        const std::string* next = nullptr;
        if (l.source == cur) next = &l.target;
        else if (l.target == cur) next = &l.source;
        if (next && seen.insert(*next).second) queue.push_back(*next);
      }
    }
  }
  return first_of(cls);
}

class InstanceBuilder {
 public:
  static std::vector<Instance>& instances(InstanceModel& m) { return m.instances_; }
  static std::vector<Link>& links(InstanceModel& m) { return m.links_; }
  static std::uint64_t& revision(InstanceModel& m) { return m.revision_; }
};

struct UpdateAccess : InstanceBuilder {};

UnsatisfiableConstraints::UnsatisfiableConstraints(std::vector<std::string> ids, const std::string& detail)
    : std::runtime_error(fmt::format("unsatisfiable constraints [{}]: {}", fmt::join(ids, ", "), detail)),
      ids_(std::move(ids)) {}

std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Range: return "range";
    case ConstraintKind::Positive: return "positive";
    case ConstraintKind::Cardinality: return "cardinality";
    case ConstraintKind::Unique: return "unique";
    case ConstraintKind::BoolExpr: return "bool";
  }
  return "?";
}

ParamTable param_table(const EnvironmentModel& model, const ParamTable& overrides) {
  ParamTable out;
  for (const auto& p : model.params) out[p.name] = p.value;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

ConstraintShape classify_constraint(const Constraint& c, const ParamTable& params) {
  ConstraintShape shape;
  std::vector<const Expr*> parts;
  conjuncts(c.expr, parts);

  if (parts.size() == 1 && parts[0]->op == ExprOp::ForAll && parts[0]->vars.size() == 2) {
    const Expr& body = *parts[0]->args[1];
    const auto& v = parts[0]->vars;
    if (body.op == ExprOp::Ne && body.args[0]->op == ExprOp::Path && body.args[1]->op == ExprOp::Path) {
      const auto& a = body.args[0]->path;
      const auto& b = body.args[1]->path;
      bool pair = a.size() == 2 && b.size() == 2 && a[1] == b[1] &&
                  ((a[0] == v[0] && b[0] == v[1]) || (a[0] == v[1] && b[0] == v[0]));
      if (pair) {
        shape.kind = ConstraintKind::Unique;
        shape.path = parts[0]->args[0]->path;
        shape.unique_property = a[1];
        return shape;
      }
    }
    return shape;
  }

  std::vector<BoundTerm> terms;
  for (const Expr* p : parts) {
    auto t = bound_term(*p, params);
    if (!t) return shape;
    terms.push_back(std::move(*t));
  }
  for (const auto& t : terms) {
    if (t.path != terms[0].path || t.size != terms[0].size) return shape;
  }
  shape.path = terms[0].path;
  shape.kind = terms[0].size ? ConstraintKind::Cardinality : ConstraintKind::Range;
  for (const auto& t : terms) tighten(shape.min, shape.max, t.bound, shape.kind == ConstraintKind::Cardinality);
  if (shape.kind == ConstraintKind::Range && terms.size() == 1 && terms[0].bound.op == ExprOp::Gt &&
      terms[0].bound.value == 0.0) {
    shape.kind = ConstraintKind::Positive;
  }
  return shape;
}

Value evaluate(const Expr& expr, const InstanceModel& instance, std::string_view self_id,
               const ParamTable& params) {
  Bindings bound;
  return Evaluator(instance, params).eval(expr, self_id, bound);
}

std::vector<Violation> check_constraints(const EnvironmentModel& model, const InstanceModel& instance,
                                         const ParamTable& params) {
  std::vector<Violation> out;
  Evaluator ev(instance, params);
  for (const auto& c : model.constraints) {
    for (const auto& inst : instance.instances()) {
      if (inst.cls != c.context) continue;
      Bindings bound;
      try {
        Value v = ev.eval(*c.expr, inst.id, bound);
        auto* b = std::get_if<bool>(&v);
        if (!b) {
          out.push_back({c.id, inst.id, "constraint is not boolean"});
        } else if (!*b) {
          out.push_back({c.id, inst.id, print_expr(*c.expr) + " is false"});
        }
      } catch (const EvalError& e) {
        out.push_back({c.id, inst.id, e.what()});
      }
    }
  }
  return out;
}

// ---- instantiate -----------------------------------------------------------

namespace {

class Generator {
 public:
  Generator(const EnvironmentModel& model, std::uint64_t seed, const ParamTable& params)
      : model_(model), params_(params), stream_(RandomStream(seed).split("instantiate")),
        plan_(plan_generation(model, params)), domains_(model, params) {}

  InstanceModel run() {
    check_bounds();
    InstanceModel im;
    std::set<std::string> targeted;
    for (const auto& c : model_.classes) {
      for (const auto& a : c.associations) targeted.insert(a.target);
    }
    std::deque<std::string> queue;
    for (const auto& c : model_.classes) {
      if (model_.is_twin_class(c.name) || targeted.count(c.name)) continue;
      queue.push_back(create(im, c));
    }
    while (!queue.empty()) {
      std::string id = queue.front();
      queue.pop_front();
      const ComponentClass& cls = *model_.find_class(im.find(id)->cls);
      for (const auto& a : cls.associations) {
        const ComponentClass* target = model_.find_class(a.target);
        if (!target) continue;
        auto [lo, hi] = cardinality(cls.name, a);
        int n = lo + static_cast<int>(std::floor(stream_.next_uniform() * (hi - lo + 1)));
        n = std::min(n, hi);
        for (int k = 0; k < n; ++k) {
          std::string child = create(im, *target);
          InstanceBuilder::links(im).push_back({id, a.role, child});
          queue.push_back(child);
        }
        if (InstanceBuilder::instances(im).size() > kMaxInstances) {
          throw UnsatisfiableConstraints({}, "association multiplicities generate too many instances");
        }
      }
    }
    enforce_unique(im);
    auto violations = check_constraints(model_, im, params_);
    if (!violations.empty()) {
      std::vector<std::string> ids;
      for (const auto& v : violations) {
        if (std::find(ids.begin(), ids.end(), v.constraint_id) == ids.end()) ids.push_back(v.constraint_id);
      }
      throw UnsatisfiableConstraints(ids, violations.front().instance_id + ": " + violations.front().explanation);
    }
    return im;
  }

 private:
  void check_bounds() const {
    for (const auto& [key, iv] : plan_.property_bounds) {
      auto [lo, hi] = property_interval(key.first, key.second);
      if (lo > hi) throw UnsatisfiableConstraints(iv.sources, fmt::format("{}.{} has an empty range", key.first, key.second));
    }
    for (const auto& c : model_.classes) {
      for (const auto& a : c.associations) {
        auto it = plan_.cardinality_bounds.find({c.name, a.role});
        auto [lo, hi] = cardinality(c.name, a);
        if (lo > hi) {
          std::vector<std::string> ids;
          if (it != plan_.cardinality_bounds.end()) ids = it->second.sources;
          throw UnsatisfiableConstraints(ids, fmt::format("{}.{} cardinality min > max", c.name, a.role));
        }
      }
    }
  }

  std::pair<int, int> cardinality(const std::string& cls, const Association& a) const {
    int lo = a.lower, hi = a.upper;
    if (auto it = plan_.cardinality_bounds.find({cls, a.role}); it != plan_.cardinality_bounds.end()) {
      if (it->second.lo) lo = std::max(lo, static_cast<int>(std::ceil(*it->second.lo)));
      if (it->second.hi) hi = std::min(hi, static_cast<int>(std::floor(*it->second.hi)));
    }
    return {lo, hi};
  }

  std::pair<double, double> property_interval(const std::string& cls, const std::string& prop) const {
    return domains_.interval(cls, prop);
  }

  Value draw(const ComponentClass& cls, const PropertyDecl& p, int ordinal) {
    double u = stream_.next_uniform();
    switch (p.type) {
      case PrimitiveType::Int: {
        auto [lo, hi] = property_interval(cls.name, p.name);
        auto v = static_cast<std::int64_t>(lo + std::floor(u * (hi - lo + 1)));
        return std::min(v, static_cast<std::int64_t>(hi));
      }
      case PrimitiveType::Real: {
        auto [lo, hi] = property_interval(cls.name, p.name);
        return std::min(lo + u * (hi - lo), hi);
      }
      case PrimitiveType::Bool:
        return u < 0.5;
      case PrimitiveType::Enum: {
        auto i = std::min(static_cast<std::size_t>(u * p.enum_values.size()), p.enum_values.size() - 1);
        return p.enum_values[i];
      }
      case PrimitiveType::String:
        return fmt::format("{}-{}", p.name, ordinal);
    }
    return std::int64_t{0};
  }

  std::string create(InstanceModel& im, const ComponentClass& cls) {
    int ordinal = ++counters_[cls.name];
    Instance inst;
    inst.id = fmt::format("{}#{}", cls.name, ordinal);
    inst.cls = cls.name;
    for (const auto& p : cls.properties) inst.values[p.name] = draw(cls, p, ordinal);
    InstanceBuilder::instances(im).push_back(std::move(inst));
    return InstanceBuilder::instances(im).back().id;
  }

  void enforce_unique(InstanceModel& im) {
    for (const auto& rule : plan_.unique) {
      for (const auto& owner : im.instances()) {
        if (owner.cls != rule.owner) continue;
        std::set<Value> used;
        for (const auto& tid : im.targets(owner.id, rule.role)) {
          Instance* t = im.find(tid);
          const ComponentClass* cls = model_.find_class(t->cls);
          const PropertyDecl* p = cls ? cls->find_property(rule.property) : nullptr;
          if (!p) break;
          auto ordinal = std::stoi(tid.substr(tid.find('#') + 1));
          int attempts = 0;
          while (used.count(t->values[p->name])) {
            if (++attempts > kUniqueRetries) {
              throw UnsatisfiableConstraints({rule.id},
                                             fmt::format("no unique {}.{} after {} draws", t->cls, p->name, kUniqueRetries));
            }
            t->values[p->name] = draw(*cls, *p, ordinal);
          }
          used.insert(t->values[p->name]);
        }
      }
    }
  }

  const EnvironmentModel& model_;
  const ParamTable& params_;
  RandomStream stream_;
  GenerationPlan plan_;
  PropertyDomains domains_;
  std::map<std::string, int> counters_;
};

std::optional<Value> coerce(const PropertyDecl& p, const Value& v) {
  switch (p.type) {
    case PrimitiveType::Int:
      if (std::holds_alternative<std::int64_t>(v)) return v;
      if (auto* d = std::get_if<double>(&v); d && std::isfinite(*d) && std::floor(*d) == *d) {
        return static_cast<std::int64_t>(*d);
      }
      return std::nullopt;
    case PrimitiveType::Real:
      if (is_numeric(v)) return as_double(v);
      return std::nullopt;
    case PrimitiveType::Bool:
      if (std::holds_alternative<bool>(v)) return v;
      return std::nullopt;
    case PrimitiveType::String:
      if (std::holds_alternative<std::string>(v)) return v;
      return std::nullopt;
    case PrimitiveType::Enum:
      if (auto* s = std::get_if<std::string>(&v);
          s && std::find(p.enum_values.begin(), p.enum_values.end(), *s) != p.enum_values.end()) {
        return v;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

PropertyDomains::PropertyDomains(const EnvironmentModel& model, const ParamTable& params) {
  GenerationPlan plan = plan_generation(model, params);
  for (const auto& c : model.classes) {
    for (const auto& p : c.properties) {
      if (p.type != PrimitiveType::Int && p.type != PrimitiveType::Real) continue;
      bool integral = is_integral_type(p.type);
      double lo = 0.0, hi = integral ? 100.0 : 1.0;
      if (p.range) std::tie(lo, hi) = *p.range;
      if (auto it = plan.property_bounds.find({c.name, p.name}); it != plan.property_bounds.end()) {
        if (it->second.lo) lo = std::max(lo, *it->second.lo);
        if (it->second.hi) hi = std::min(hi, *it->second.hi);
      }
      if (integral) {
        lo = std::ceil(lo);
        hi = std::floor(hi);
      }
      intervals_[{c.name, p.name}] = {lo, hi};
    }
  }
}

std::pair<double, double> PropertyDomains::interval(std::string_view cls, std::string_view prop) const {
  auto it = intervals_.find(std::pair<std::string, std::string>(cls, prop));
  if (it == intervals_.end()) return {0.0, 1.0};
  return it->second;
}

InstanceModel instantiate(const EnvironmentModel& model, std::uint64_t seed, const ParamTable& params) {
  return Generator(model, seed, params).run();
}

std::vector<std::string> UpdateOutcome::violated_ids() const {
  std::vector<std::string> ids;
  for (const auto& v : violations) {
    if (std::find(ids.begin(), ids.end(), v.constraint_id) == ids.end()) ids.push_back(v.constraint_id);
  }
  return ids;
}

UpdateOutcome apply_update(InstanceModel& instance, const EnvironmentModel& model, const Update& update,
                           const ParamTable& params) {
  UpdateOutcome out;
  auto finish = [&](auto&& revert) {
    auto violations = check_constraints(model, instance, params);
    out.violations.insert(out.violations.end(), violations.begin(), violations.end());
    if (!out.violations.empty()) {
      revert();
      return out;
    }
    ++UpdateAccess::revision(instance);
    out.committed = true;
    return out;
  };

  if (const auto* pu = std::get_if<PropertyUpdate>(&update)) {
    Instance* inst = instance.find(pu->instance_id);
    if (!inst) throw std::invalid_argument("no instance " + pu->instance_id);
    const ComponentClass* cls = model.find_class(inst->cls);
    const PropertyDecl* p = cls ? cls->find_property(pu->property) : nullptr;
    if (!p) throw std::invalid_argument(fmt::format("{} has no property '{}'", inst->cls, pu->property));
    std::string domain_id = fmt::format("domain:{}.{}", inst->cls, p->name);
    auto v = coerce(*p, pu->value);
    if (!v) {
      out.violations.push_back({domain_id, inst->id, "value " + value_to_string(pu->value) + " has the wrong type"});
      return out;
    }
    if (p->range && is_numeric(*v) && (as_double(*v) < p->range->first || as_double(*v) > p->range->second)) {
      out.violations.push_back({domain_id, inst->id, "value " + value_to_string(*v) + " is outside the declared range"});
    }
    Value old = inst->values[p->name];
    inst->values[p->name] = *v;
    return finish([&] { inst->values[p->name] = old; });
  }

  const auto& lu = std::get<LinkUpdate>(update);
  const Instance* src = instance.find(lu.link.source);
  const Instance* dst = instance.find(lu.link.target);
  if (!src || !dst) throw std::invalid_argument("link endpoint does not exist");
  const ComponentClass* cls = model.find_class(src->cls);
  const Association* a = cls ? cls->find_association(lu.link.role) : nullptr;
  if (!a) throw std::invalid_argument(fmt::format("{} has no role '{}'", src->cls, lu.link.role));
  if (a->target != dst->cls) throw std::invalid_argument(fmt::format("role '{}' expects {}", a->role, a->target));
  auto& links = UpdateAccess::links(instance);
  std::string mult_id = fmt::format("multiplicity:{}.{}", src->cls, a->role);
  int count = static_cast<int>(instance.targets(src->id, a->role).size());
  if (lu.add) {
    if (count + 1 > a->upper) out.violations.push_back({mult_id, src->id, "upper multiplicity exceeded"});
    links.push_back(lu.link);
    return finish([&] { links.pop_back(); });
  }
  auto it = std::find(links.begin(), links.end(), lu.link);
  if (it == links.end()) throw std::invalid_argument("no such link");
  if (count - 1 < a->lower) out.violations.push_back({mult_id, src->id, "lower multiplicity violated"});
  auto index = it - links.begin();
  Link removed = *it;
  links.erase(it);
  return finish([&] { links.insert(links.begin() + index, removed); });
}

namespace {

nlohmann::ordered_json to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, v);
}

}  // namespace

std::string instance_records(const InstanceModel& instance) {
  std::string out;
  nlohmann::ordered_json meta;
  meta["record"] = "meta";
  meta["revision"] = instance.revision();
  meta["instances"] = instance.instances().size();
  meta["links"] = instance.links().size();
  out += meta.dump() + "\n";
  for (const auto& i : instance.instances()) {
    nlohmann::ordered_json j;
    j["record"] = "instance";
    j["id"] = i.id;
    j["class"] = i.cls;
    j["values"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : i.values) j["values"][k] = to_json(v);
    out += j.dump() + "\n";
  }
  for (const auto& l : instance.links()) {
    nlohmann::ordered_json j;
    j["record"] = "link";
    j["source"] = l.source;
    j["role"] = l.role;
    j["target"] = l.target;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace envdt
