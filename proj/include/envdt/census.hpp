#pragma once

#include <string>
#include <vector>

#include "envdt/model.hpp"

namespace envdt {

struct Census {
  int classes = 0;
  int properties = 0;
  int class_stereotypes = 0;
  int receptions = 0;
  int constraints = 0;
  int machines = 0;
  int machine_stereotypes = 0;
  int states = 0;
  int transitions = 0;
  int all_events = 0;
  int uncertain_events = 0;
  int opaque_behaviors = 0;

  /// Size of the coverage denominator.
  int element_total() const { return states + transitions + all_events + opaque_behaviors; }

  friend bool operator==(const Census&, const Census&) = default;
};

/// Class-level counts (classes, properties, stereotypes, receptions) cover the
/// environment side only; twin classes are excluded. States exclude initial
/// pseudostates, machine stereotypes are distinct kinds applied to states.
Census element_census(const EnvironmentModel& model);

/// States, transitions, events and behaviors in declaration order.
std::vector<ModelElementId> flatten_elements(const EnvironmentModel& model);

/// (label, value) pairs in table order.
std::vector<std::pair<std::string, int>> census_rows(const Census& c);

}  // namespace envdt
