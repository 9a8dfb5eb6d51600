#include "envdt/model.hpp"

#include <algorithm>

namespace envdt {

std::string_view to_string(PrimitiveType t) {
  switch (t) {
    case PrimitiveType::Int: return "int";
    case PrimitiveType::Real: return "real";
    case PrimitiveType::Bool: return "bool";
    case PrimitiveType::String: return "string";
    case PrimitiveType::Enum: return "enum";
  }
  return "?";
}

std::string_view to_string(StateKind k) {
  switch (k) {
    case StateKind::Initial: return "initial";
    case StateKind::Simple: return "simple";
    case StateKind::Final: return "final";
  }
  return "?";
}

std::string_view to_string(BehaviorSlot slot) {
  switch (slot) {
    case BehaviorSlot::Entry: return "entry";
    case BehaviorSlot::Do: return "do";
    case BehaviorSlot::Exit: return "exit";
  }
  return "?";
}

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::State: return "state";
    case ElementKind::Transition: return "transition";
    case ElementKind::Event: return "event";
    case ElementKind::Behavior: return "behavior";
  }
  return "?";
}

bool operator==(const Statement& a, const Statement& b) {
  return a.kind == b.kind && a.target == b.target && structurally_equal(a.value, b.value) &&
         a.low == b.low && a.high == b.high && a.signal == b.signal && a.text == b.text &&
         a.wait_ms == b.wait_ms;
}

bool operator==(const Constraint& a, const Constraint& b) {
  return a.id == b.id && a.context == b.context && structurally_equal(a.expr, b.expr);
}

const PropertyDecl* ComponentClass::find_property(std::string_view prop) const {
  for (const auto& p : properties) {
    if (p.name == prop) return &p;
  }
  return nullptr;
}

const Association* ComponentClass::find_association(std::string_view role) const {
  for (const auto& a : associations) {
    if (a.role == role) return &a;
  }
  return nullptr;
}

const std::optional<ActionBlock>& State::behavior(BehaviorSlot slot) const {
  switch (slot) {
    case BehaviorSlot::Entry: return entry;
    case BehaviorSlot::Do: return do_activity;
    case BehaviorSlot::Exit: return exit;
  }
  return entry;
}

const State* BehaviorMachine::find_state(std::string_view state) const {
  for (const auto& s : states) {
    if (s.name == state) return &s;
  }
  return nullptr;
}

const State* BehaviorMachine::initial_state() const {
  for (const auto& s : states) {
    if (s.kind == StateKind::Initial) return &s;
  }
  return nullptr;
}

std::vector<std::size_t> BehaviorMachine::outgoing(std::string_view state) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    if (transitions[i].source == state) out.push_back(i);
  }
  return out;
}

const ComponentClass* EnvironmentModel::find_class(std::string_view n) const {
  for (const auto& c : classes) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

const BehaviorMachine* EnvironmentModel::find_machine(std::string_view n) const {
  for (const auto& m : machines) {
    if (m.name == n) return &m;
  }
  return nullptr;
}

const ModelParam* EnvironmentModel::find_param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

bool EnvironmentModel::is_twin_class(std::string_view n) const {
  return std::find(twin_classes.begin(), twin_classes.end(), n) != twin_classes.end();
}

const BehaviorMachine* EnvironmentModel::root_machine() const {
  for (const auto& m : machines) {
    bool referenced = false;
    for (const auto& other : machines) {
      for (const auto& s : other.states) {
        if (s.submachine && *s.submachine == m.name) referenced = true;
      }
    }
    if (!referenced) return &m;
  }
  return nullptr;
}

std::string ModelElementId::str() const {
  std::string out(to_string(kind));
  out += ':';
  out += machine;
  out += '.';
  out += name;
  if (!detail.empty()) {
    out += '.';
    out += detail;
  }
  return out;
}

std::optional<ModelElementId> ModelElementId::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string_view kind = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t dot = rest.find('.', pos);
    parts.emplace_back(rest.substr(pos, dot - pos));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  for (const auto& p : parts) {
    if (p.empty()) return std::nullopt;
  }
  ModelElementId id;
  if (kind == "state" && parts.size() == 2) {
    id.kind = ElementKind::State;
  } else if (kind == "transition" && parts.size() == 2) {
    id.kind = ElementKind::Transition;
  } else if (kind == "event" && parts.size() == 3) {
    id.kind = ElementKind::Event;
  } else if (kind == "behavior" && parts.size() == 3 &&
             (parts[2] == "entry" || parts[2] == "do" || parts[2] == "exit")) {
    id.kind = ElementKind::Behavior;
  } else {
    return std::nullopt;
  }
  id.machine = parts[0];
  id.name = parts[1];
  if (parts.size() == 3) id.detail = parts[2];
  return id;
}

ModelElementId state_id(const BehaviorMachine& m, const State& s) {
  return {ElementKind::State, m.name, s.name, {}};
}

ModelElementId transition_id(const BehaviorMachine& m, const Transition& t) {
  return {ElementKind::Transition, m.name, t.name, {}};
}

ModelElementId event_id(const BehaviorMachine& m, const Transition& t) {
  return {ElementKind::Event, m.name, t.name, t.trigger->display_name()};
}

ModelElementId behavior_id(const BehaviorMachine& m, const State& s, BehaviorSlot slot) {
  return {ElementKind::Behavior, m.name, s.name, std::string(to_string(slot))};
}

}  // namespace envdt

namespace envdt {

PathTarget resolve_path(const EnvironmentModel& model, const ComponentClass& context,
                        const std::vector<std::string>& path,
                        const std::vector<std::pair<std::string, std::string>>& bound) {
  PathTarget out;
  if (path.empty()) {
    out.error = "empty path";
    return out;
  }
  const ComponentClass* cls = nullptr;
  if (path[0] == "self") {
    cls = &context;
  } else {
    for (const auto& [var, cname] : bound) {
      if (var == path[0]) cls = model.find_class(cname);
    }
    if (!cls) {
      if (path.size() == 1 && model.find_param(path[0])) {
        out.kind = PathTargetKind::Param;
        return out;
      }
      out.error = "unknown name '" + path[0] + "'";
      return out;
    }
  }
  if (path.size() == 1) {
    out.kind = PathTargetKind::Instance;
    out.owner = cls;
    return out;
  }
  for (size_t i = 1; i < path.size(); ++i) {
    const std::string& seg = path[i];
    bool last = i + 1 == path.size();
    if (last) {
      if (const auto* p = cls->find_property(seg)) {
        out.kind = PathTargetKind::Property;
        out.owner = cls;
        out.property = p;
        return out;
      }
    }
    const auto* a = cls->find_association(seg);
    if (!a) {
      out.error = "class " + cls->name + " has no " + (last ? "property or role" : "role") +
                  " '" + seg + "'";
      return out;
    }
    if (last) {
      out.kind = PathTargetKind::Collection;
      out.owner = cls;
      out.association = a;
      return out;
    }
    cls = model.find_class(a->target);
    if (!cls) {
      out.error = "association target '" + a->target + "' is not a class";
      return out;
    }
  }
  return out;
}

}  // namespace envdt
