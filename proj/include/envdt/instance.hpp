#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "envdt/model.hpp"

namespace envdt {

using ParamTable = std::map<std::string, Value, std::less<>>;

/// Model parameters with command-line overrides applied.
ParamTable param_table(const EnvironmentModel& model, const ParamTable& overrides = {});

struct Instance {
  std::string id;  // "<Class>#<k>"
  std::string cls;
  std::map<std::string, Value, std::less<>> values;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Link {
  std::string source;
  std::string role;
  std::string target;

  friend bool operator==(const Link&, const Link&) = default;
};

class InstanceModel {
 public:
  const std::vector<Instance>& instances() const { return instances_; }
  const std::vector<Link>& links() const { return links_; }
  std::uint64_t revision() const { return revision_; }

  const Instance* find(std::string_view id) const;
  Instance* find(std::string_view id);
  /// Link targets of `id` under `role`, in link order.
  std::vector<std::string> targets(std::string_view id, std::string_view role) const;
  /// First instance of `cls`, in creation order.
  const Instance* first_of(std::string_view cls) const;

  /// Instance of `cls` closest to `from` by breadth-first search over links
  /// (both directions), falling back to the first instance of that class.
  const Instance* nearest_of(std::string_view cls, std::string_view from) const;

  friend bool operator==(const InstanceModel&, const InstanceModel&) = default;

 private:
  friend class InstanceBuilder;
  friend struct UpdateAccess;

  std::vector<Instance> instances_;
  std::vector<Link> links_;
  std::uint64_t revision_ = 0;
};

struct Violation {
  std::string constraint_id;
  std::string instance_id;
  std::string explanation;

  friend bool operator==(const Violation&, const Violation&) = default;
};

class UnsatisfiableConstraints : public std::runtime_error {
 public:
  explicit UnsatisfiableConstraints(std::vector<std::string> ids, const std::string& detail);
  const std::vector<std::string>& constraint_ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

/// Generation shape of a constraint, derived from its expression.
enum class ConstraintKind { Range, Positive, Cardinality, Unique, BoolExpr };

std::string_view to_string(ConstraintKind k);

struct ConstraintShape {
  ConstraintKind kind = ConstraintKind::BoolExpr;
  /// Range/Positive: property path; Cardinality/Unique: collection path.
  std::vector<std::string> path;
  std::string unique_property;  // Unique
  std::optional<double> min;
  std::optional<double> max;
};

ConstraintShape classify_constraint(const Constraint& c, const ParamTable& params);

/// Numeric interval of each property: declared range intersected with the
/// Range/Positive constraints that target it. Int properties get integral
/// bounds; unranged ints default to [0, 100], reals to [0, 1].
class PropertyDomains {
 public:
  PropertyDomains(const EnvironmentModel& model, const ParamTable& params);
  std::pair<double, double> interval(std::string_view cls, std::string_view prop) const;

 private:
  std::map<std::pair<std::string, std::string>, std::pair<double, double>, std::less<>> intervals_;
};

InstanceModel instantiate(const EnvironmentModel& model, std::uint64_t seed, const ParamTable& params);

std::vector<Violation> check_constraints(const EnvironmentModel& model, const InstanceModel& instance,
                                         const ParamTable& params);

/// Evaluates `expr` with `self` bound to `self_id`. Throws EvalError on type
/// errors or navigation through an empty role.
Value evaluate(const Expr& expr, const InstanceModel& instance, std::string_view self_id,
               const ParamTable& params);

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PropertyUpdate {
  std::string instance_id;
  std::string property;
  Value value;
};

struct LinkUpdate {
  bool add = true;
  Link link;
};

using Update = std::variant<PropertyUpdate, LinkUpdate>;

struct UpdateOutcome {
  bool committed = false;
  std::vector<Violation> violations;

  std::vector<std::string> violated_ids() const;
};

/// Commits `update` only if every constraint and declared domain still holds;
/// each commit bumps the revision by one. On rejection `instance` is unchanged.
/// Throws std::invalid_argument when the target instance or property is
/// missing.
UpdateOutcome apply_update(InstanceModel& instance, const EnvironmentModel& model, const Update& update,
                           const ParamTable& params);

/// Line-delimited records: one meta line, then one line per instance and per
/// link.
std::string instance_records(const InstanceModel& instance);

}  // namespace envdt
