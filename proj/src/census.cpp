#include "envdt/census.hpp"

#include <set>

namespace envdt {

Census element_census(const EnvironmentModel& model) {
  Census c;
  for (const auto& cls : model.classes) {
    if (model.is_twin_class(cls.name)) continue;
    ++c.classes;
    c.properties += static_cast<int>(cls.properties.size());
    c.class_stereotypes += static_cast<int>(cls.stereotypes.size());
    c.receptions += static_cast<int>(cls.receptions.size());
  }
  c.constraints = static_cast<int>(model.constraints.size());
  c.machines = static_cast<int>(model.machines.size());
  std::set<Stereotype> kinds;
  for (const auto& m : model.machines) {
    for (const auto& s : m.states) {
      kinds.insert(s.stereotypes.begin(), s.stereotypes.end());
      if (s.kind == StateKind::Initial) continue;
      ++c.states;
      for (BehaviorSlot slot : {BehaviorSlot::Entry, BehaviorSlot::Do, BehaviorSlot::Exit}) {
        const auto& b = s.behavior(slot);
        if (b && !b->empty()) ++c.opaque_behaviors;
      }
    }
    for (const auto& t : m.transitions) {
      ++c.transitions;
      if (t.trigger) {
        ++c.all_events;
        if (t.uncertain()) ++c.uncertain_events;
      }
    }
  }
  c.machine_stereotypes = static_cast<int>(kinds.size());
  return c;
}

std::vector<ModelElementId> flatten_elements(const EnvironmentModel& model) {
  std::vector<ModelElementId> out;
  for (const auto& m : model.machines) {
    for (const auto& s : m.states) {
      if (s.kind == StateKind::Initial) continue;
      out.push_back(state_id(m, s));
    }
    for (const auto& t : m.transitions) out.push_back(transition_id(m, t));
    for (const auto& t : m.transitions) {
      if (t.trigger) out.push_back(event_id(m, t));
    }
    for (const auto& s : m.states) {
      if (s.kind == StateKind::Initial) continue;
      for (BehaviorSlot slot : {BehaviorSlot::Entry, BehaviorSlot::Do, BehaviorSlot::Exit}) {
        const auto& b = s.behavior(slot);
        if (b && !b->empty()) out.push_back(behavior_id(m, s, slot));
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, int>> census_rows(const Census& c) {
  return {{"Classes", c.classes},
          {"Properties", c.properties},
          {"Class stereotypes", c.class_stereotypes},
          {"Receptions", c.receptions},
          {"Constraints", c.constraints},
          {"Machines", c.machines},
          {"SM stereotypes", c.machine_stereotypes},
          {"States", c.states},
          {"Transitions", c.transitions},
          {"All events", c.all_events},
          {"Uncertain events", c.uncertain_events},
          {"Opaque behaviors", c.opaque_behaviors}};
}

}  // namespace envdt
