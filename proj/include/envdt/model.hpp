#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "envdt/expr.hpp"
#include "envdt/stochastic.hpp"
#include "envdt/taxonomy.hpp"

namespace envdt {

/// Location in a model source file. Spans never take part in structural
/// equality, so parse(print(m)) == m compares content only.
struct SourceSpan {
  std::string file;
  int line = 0;
  int column_start = 0;
  int column_end = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) { return true; }
};

enum class PrimitiveType { Int, Real, Bool, String, Enum };

std::string_view to_string(PrimitiveType t);

struct PropertyDecl {
  std::string name;
  PrimitiveType type = PrimitiveType::Int;
  std::optional<std::string> unit;
  /// Declared value range for numeric properties (inclusive).
  std::optional<std::pair<double, double>> range;
  std::vector<std::string> enum_values;

  friend bool operator==(const PropertyDecl&, const PropertyDecl&) = default;
};

struct Association {
  std::string role;
  std::string target;
  int lower = 0;
  int upper = 1;

  friend bool operator==(const Association&, const Association&) = default;
};

struct ComponentClass {
  std::string name;
  std::vector<Stereotype> stereotypes;
  std::vector<PropertyDecl> properties;
  std::vector<SignalKind> receptions;
  std::optional<std::string> owned_behavior;
  std::vector<Association> associations;
  SourceSpan span;

  const PropertyDecl* find_property(std::string_view prop) const;
  const Association* find_association(std::string_view role) const;

  friend bool operator==(const ComponentClass&, const ComponentClass&) = default;
};

/// Tester's confidence that a transition fires.
struct BeliefAnnotation {
  double degree = 1.0;
  std::string description;

  friend bool operator==(const BeliefAnnotation&, const BeliefAnnotation&) = default;
};

enum class StatementKind { Set, Rand, Emit, Log, Wait };

/// One statement of the action language:
///   set <path> = <expr>; rand <path> in [lo, hi]; emit <Signal>;
///   log "<text>"; wait <ms>;
struct Statement {
  StatementKind kind = StatementKind::Log;
  std::vector<std::string> target;  // set / rand, always rooted at "self"
  ExprPtr value;                    // set
  Value low{std::int64_t{0}};       // rand
  Value high{std::int64_t{0}};      // rand
  std::optional<SignalKind> signal;  // emit
  std::string text;                  // log
  std::int64_t wait_ms = 0;          // wait

  friend bool operator==(const Statement& a, const Statement& b);
};

struct ActionBlock {
  std::vector<Statement> statements;

  bool empty() const { return statements.empty(); }
  friend bool operator==(const ActionBlock&, const ActionBlock&) = default;
};

enum class StateKind { Initial, Simple, Final };

std::string_view to_string(StateKind k);

enum class BehaviorSlot { Entry, Do, Exit };

std::string_view to_string(BehaviorSlot slot);

struct State {
  std::string name;
  StateKind kind = StateKind::Simple;
  std::vector<Stereotype> stereotypes;
  std::optional<ActionBlock> entry;
  std::optional<ActionBlock> do_activity;
  std::optional<ActionBlock> exit;
  std::optional<std::string> submachine;
  SourceSpan span;

  const std::optional<ActionBlock>& behavior(BehaviorSlot slot) const;
  bool has_behaviors() const { return entry || do_activity || exit; }

  friend bool operator==(const State&, const State&) = default;
};

struct Transition {
  std::string name;
  std::string source;
  std::string target;
  std::optional<SignalKind> trigger;
  std::optional<BeliefAnnotation> belief;
  /// Per-transition override of the simulation-wide distribution.
  std::optional<DistributionSpec> dist;
  SourceSpan span;

  bool uncertain() const { return belief.has_value(); }
  /// Belief degree, 1 for deterministic transitions.
  double probability() const { return belief ? belief->degree : 1.0; }

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct BehaviorMachine {
  std::string name;
  std::string owner;
  std::vector<State> states;
  std::vector<Transition> transitions;
  SourceSpan span;

  const State* find_state(std::string_view state) const;
  const State* initial_state() const;
  /// Indices into `transitions` leaving `state`, in declaration order.
  std::vector<std::size_t> outgoing(std::string_view state) const;

  friend bool operator==(const BehaviorMachine&, const BehaviorMachine&) = default;
};

struct Constraint {
  std::string id;
  std::string context;
  ExprPtr expr;
  SourceSpan span;

  friend bool operator==(const Constraint& a, const Constraint& b);
};

struct ModelParam {
  std::string name;
  Value value;
  friend bool operator==(const ModelParam&, const ModelParam&) = default;
};

/// Declaration of a user-interaction signal used by receptions and triggers.
struct SignalDecl {
  std::string label;
  SignalCategory category = SignalCategory::Info;
  friend bool operator==(const SignalDecl&, const SignalDecl&) = default;
};

struct EnvironmentModel {
  std::string name;
  std::vector<ModelParam> params;
  std::vector<SignalDecl> signals;
  std::vector<ComponentClass> classes;
  std::vector<BehaviorMachine> machines;
  std::vector<Constraint> constraints;
  /// Classes on the digital-twin side of the model; everything else is
  /// environment.
  std::vector<std::string> twin_classes;

  const ComponentClass* find_class(std::string_view name) const;
  const BehaviorMachine* find_machine(std::string_view name) const;
  const ModelParam* find_param(std::string_view name) const;
  bool is_twin_class(std::string_view name) const;

  /// The machine simulation starts from: the first declared machine that no
  /// state references as a submachine.
  const BehaviorMachine* root_machine() const;

  friend bool operator==(const EnvironmentModel&, const EnvironmentModel&) = default;
};

// ---------------------------------------------------------------------------
// Model element identities (coverage and traces)
// ---------------------------------------------------------------------------

enum class ElementKind { State, Transition, Event, Behavior };

std::string_view to_string(ElementKind k);

/// Textual forms:
///   state:M.S   transition:M.t   event:M.t.Signal   behavior:M.S.entry|do|exit
struct ModelElementId {
  ElementKind kind = ElementKind::State;
  std::string machine;
  std::string name;    // state or transition name
  std::string detail;  // event signal name, or behavior slot

  std::string str() const;
  static std::optional<ModelElementId> parse(std::string_view text);

  friend bool operator==(const ModelElementId&, const ModelElementId&) = default;
  friend auto operator<=>(const ModelElementId&, const ModelElementId&) = default;
};

ModelElementId state_id(const BehaviorMachine& m, const State& s);
ModelElementId transition_id(const BehaviorMachine& m, const Transition& t);
/// Requires t.trigger.
ModelElementId event_id(const BehaviorMachine& m, const Transition& t);
ModelElementId behavior_id(const BehaviorMachine& m, const State& s, BehaviorSlot slot);

}  // namespace envdt

namespace envdt {

enum class PathTargetKind { Invalid, Property, Collection, Param, Instance };

/// What a dotted path denotes relative to a context class. `self.a.b`
/// navigates associations until the last segment, which names a property
/// (Property) or a role (Collection). A lone `self` is the context instance;
/// a lone parameter name is a Param.
struct PathTarget {
  PathTargetKind kind = PathTargetKind::Invalid;
  const ComponentClass* owner = nullptr;  // class declaring the property/role
  const PropertyDecl* property = nullptr;
  const Association* association = nullptr;
  std::string error;
};

/// `bound` maps iterator variables to their class names.
PathTarget resolve_path(const EnvironmentModel& model, const ComponentClass& context,
                        const std::vector<std::string>& path,
                        const std::vector<std::pair<std::string, std::string>>& bound = {});

}  // namespace envdt
