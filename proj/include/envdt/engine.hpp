#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "envdt/instance.hpp"
#include "envdt/model.hpp"
#include "envdt/stochastic.hpp"
#include "envdt/trace.hpp"

namespace envdt {

enum class SchedulerMode { DeterministicInterleave, Parallel };

struct WaitMode {
  enum class Kind { Skip, Scaled, Real };
  Kind kind = Kind::Skip;
  double factor = 1.0;  // Scaled only

  static WaitMode skip() { return {}; }
  static WaitMode scaled(double f) { return {Kind::Scaled, f}; }
  static WaitMode real() { return {Kind::Real, 1.0}; }
};

struct SimulationConfig {
  std::uint64_t seed = 0;
  DistributionSpec distribution = UniformDist{};
  bool once_only = false;
  std::int64_t max_steps = 1000;
  SchedulerMode scheduler = SchedulerMode::DeterministicInterleave;
  WaitMode wait;
  std::string run_id = "run";
  ParamTable params;
};

/// A signal leaving the environment: a transition trigger or an `emit`.
struct SignalEvent {
  std::string run_id;
  std::uint64_t seq = 0;  // trace seq of the event/emit record
  std::string machine;    // runtime name
  SignalKind signal = SignalKind::library(SignalName::LowBattery);
  std::string instance;
  std::int64_t t_ms = 0;
  /// Property values committed by this runtime since its previous signal,
  /// keyed "<instance>.<property>".
  std::map<std::string, Value> payload;
};

/// Called from the engine's execution context, once per signal, in trace
/// order per machine. Must not block.
using SignalSink = std::function<void(const SignalEvent&)>;

class RuntimeFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  ExecutionTrace trace;
  InstanceModel instance;
  std::int64_t steps = 0;
  bool root_final = false;
  int faults = 0;
  /// Wall time spent executing, waits excluded.
  double core_ms = 0.0;
};

/// Selection weight for each outgoing transition is belief (1 if
/// deterministic) times a unit likelihood draw (1 if deterministic); the
/// argmax wins, earlier declaration on ties. Under onceOnly, `visited`
/// transitions weigh 0. Returns an index into m.transitions, or nothing when
/// no weight is positive. Draws happen only for eligible uncertain candidates.
std::optional<std::size_t> find_transition(const BehaviorMachine& m, std::string_view state,
                                           const SimulationConfig& config, RandomStream& stream,
                                           const std::function<bool(const Transition&)>& visited = {});

/// Runs the root machine and its submachines until the root reaches a final
/// state, no runtime can move, or max_steps transitions have executed.
RunResult run(const EnvironmentModel& model, InstanceModel instance, const SimulationConfig& config,
              const SignalSink& sink = {});

}  // namespace envdt
