#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "envdt/analytics.hpp"
#include "envdt/engine.hpp"
#include "support.hpp"

using namespace envdt;
using envdt::testing::fixture;
using envdt::testing::parse_or_die;

namespace {

RunResult simulate(const EnvironmentModel& m, SimulationConfig cfg, const SignalSink& sink = {}) {
  if (cfg.params.empty()) cfg.params = param_table(m);
  return run(m, instantiate(m, cfg.seed, cfg.params), cfg, sink);
}

SimulationConfig config(std::uint64_t seed, DistributionSpec dist = UniformDist{}, bool once_only = true) {
  SimulationConfig c;
  c.seed = seed;
  c.distribution = dist;
  c.once_only = once_only;
  c.max_steps = 2000;
  return c;
}

const char* kLamp = R"(model Lamp;
component Lamp <<Power>> {
  property level: int in [0, 100];
  property lit: bool;
  behavior LampMachine;
}
constraint L1 on Lamp: self.level >= 0 and self.level <= 100;
machine LampMachine for Lamp {
  initial -> Off;
  state Off <<Power>> { entry { set lit = false; } }
  state On <<Power>> { entry { set lit = true; set level = 150; } }
  state Dim;
  final Broken;
  transition press: Off -> On on LowBattery;
  transition fade: On -> Dim;
  transition burn: Dim -> Broken on DeadBattery;
}
)";

Value parse_value(const PropertyDecl& p, const std::string& text) {
  switch (p.type) {
    case PrimitiveType::Int: return std::int64_t{std::stoll(text)};
    case PrimitiveType::Real: return std::stod(text);
    case PrimitiveType::Bool: return text == "true";
    default: return text;
  }
}

}  // namespace

TEST(Engine, OnceOnlyNeverRepeatsAnElement) {
  for (const auto& d : envdt::testing::devices()) {
    for (auto kind : kAllDistributionKinds) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = simulate(fixture(d), config(seed, default_spec(kind)));
        std::set<std::string> seen;
        for (const auto& rec : r.trace.records) {
          if (!is_element_kind(rec.kind)) continue;
          ASSERT_TRUE(seen.insert(rec.element).second) << d << " seed " << seed << " repeats " << rec.element;
        }
      }
    }
  }
}

TEST(Engine, SeededRunsAreByteIdentical) {
  auto a = simulate(fixture("karie"), config(77, ExponentialDist{}));
  auto b = simulate(fixture("karie"), config(77, ExponentialDist{}));
  EXPECT_EQ(a.trace.to_jsonl(), b.trace.to_jsonl());
  auto c = simulate(fixture("karie"), config(78, ExponentialDist{}));
  EXPECT_NE(a.trace.to_jsonl(), c.trace.to_jsonl());
}

TEST(Engine, MaxStepsZeroGivesEmptyTrace) {
  auto cfg = config(1);
  cfg.max_steps = 0;
  auto r = simulate(fixture("pilly"), cfg);
  EXPECT_TRUE(r.trace.records.empty());
  EXPECT_EQ(r.steps, 0);
}

TEST(Engine, MaxStepsBoundsTransitionsAcrossMachines) {
  for (std::int64_t bound : {1, 3, 10, 25}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto cfg = config(seed, UniformDist{}, false);
      cfg.max_steps = bound;
      auto r = simulate(fixture("karie"), cfg);
      auto transitions = std::count_if(r.trace.records.begin(), r.trace.records.end(),
                                       [](const TraceRecord& x) { return x.kind == TraceKind::Transition; });
      EXPECT_LE(transitions, bound);
      EXPECT_EQ(r.steps, transitions);
    }
  }
}

TEST(Engine, TriggerIsNotifiedBeforeTargetIsEntered) {
  auto m = parse_or_die(kLamp);
  std::vector<SignalEvent> seen;
  auto r = simulate(m, config(1), [&](const SignalEvent& e) { seen.push_back(e); });
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.front().signal, SignalKind::library(SignalName::LowBattery));
  std::uint64_t entered_on = 0;
  for (const auto& rec : r.trace.records) {
    if (rec.kind == TraceKind::State && rec.element == "state:LampMachine.On") entered_on = rec.seq;
  }
  EXPECT_LT(seen.front().seq, entered_on);
}

TEST(Engine, TriggerlessTransitionAdvancesSilently) {
  auto m = parse_or_die(kLamp);
  std::vector<std::string> signals;
  auto r = simulate(m, config(1), [&](const SignalEvent& e) { signals.push_back(e.signal.display_name()); });
  EXPECT_EQ(signals, (std::vector<std::string>{"LowBattery", "DeadBattery"}));
  bool dim = std::any_of(r.trace.records.begin(), r.trace.records.end(),
                         [](const TraceRecord& x) { return x.element == "state:LampMachine.Dim"; });
  EXPECT_TRUE(dim);
}

TEST(Engine, FinalStateIsMarkedAndStopsTheRun) {
  auto m = parse_or_die(kLamp);
  auto r = simulate(m, config(1));
  ASSERT_FALSE(r.trace.records.empty());
  EXPECT_TRUE(r.root_final);
  EXPECT_EQ(r.trace.records.back().kind, TraceKind::Final);
  EXPECT_EQ(r.trace.records.back().detail, "state:LampMachine.Broken");
}

TEST(Engine, RejectedUpdateIsLoggedAndNotCommitted) {
  auto m = parse_or_die(kLamp);
  auto r = simulate(m, config(1));
  int updates = 0, rejects = 0;
  for (const auto& rec : r.trace.records) {
    updates += rec.kind == TraceKind::Update;
    rejects += rec.kind == TraceKind::Reject;
  }
  EXPECT_EQ(rejects, 1);
  EXPECT_EQ(r.instance.revision(), static_cast<std::uint64_t>(updates));
  EXPECT_LE(as_double(r.instance.first_of("Lamp")->values.at("level")), 100.0);
}

TEST(Engine, SetStatementBumpsRevision) {
  auto m = parse_or_die(R"(model Cfg;
component Device { property config_loaded: bool; behavior D; }
machine D for Device {
  initial -> Loading;
  state Loading { do { set config_loaded = true; } }
  final Ready;
  transition loaded: Loading -> Ready;
}
)");
  auto r = simulate(m, config(1));
  EXPECT_EQ(r.instance.revision(), 1u);
  EXPECT_EQ(std::get<bool>(r.instance.first_of("Device")->values.at("config_loaded")), true);
}

TEST(Engine, SettingUpSpawnsBattery) {
  auto cfg = config(3);
  cfg.max_steps = 4;
  auto r = simulate(fixture("karie"), cfg);
  bool spawned = false, battery_ran = false;
  for (const auto& rec : r.trace.records) {
    if (rec.kind == TraceKind::Spawn && rec.detail == "BatteryStateMachine") {
      spawned = true;
      EXPECT_EQ(rec.machine, "DeviceStateMachine");
    }
    battery_ran |= rec.machine == "BatteryStateMachine";
  }
  EXPECT_TRUE(spawned);
  EXPECT_TRUE(battery_ran);
}

TEST(Engine, ReplayReproducesVisitedSet) {
  for (const auto& d : envdt::testing::devices()) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      for (bool once : {true, false}) {
        auto r = simulate(fixture(d), config(seed, GammaDist{}, once));
        auto replay = replay_trace(fixture(d), r.trace);
        auto cov = coverage(r.trace, fixture(d));
        EXPECT_EQ(replay.visited, cov.covered);
      }
    }
  }
}

TEST(Engine, ReplayRejectsForeignTrace) {
  auto r = simulate(fixture("karie"), config(5));
  EXPECT_THROW(replay_trace(fixture("pilly"), r.trace), TraceModelMismatch);
}

TEST(Engine, EveryCommittedRevisionSatisfiesConstraints) {
  for (const auto& d : envdt::testing::devices()) {
    const auto& m = fixture(d);
    auto params = param_table(m);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto cfg = config(seed, ExponentialDist{}, false);
      auto inst = instantiate(m, seed, params);
      auto r = run(m, inst, cfg);
      for (const auto& rec : r.trace.records) {
        if (rec.kind != TraceKind::Update) continue;
        auto dot = rec.element.find('.');
        Instance* target = inst.find(rec.element.substr(0, dot));
        ASSERT_NE(target, nullptr);
        std::string prop = rec.element.substr(dot + 1);
        target->values[prop] = parse_value(*m.find_class(target->cls)->find_property(prop), rec.detail);
        ASSERT_TRUE(check_constraints(m, inst, params).empty()) << d << " seed " << seed << " at " << rec.seq;
      }
    }
  }
}

TEST(Engine, SinkSeesEventsInTraceOrderPerMachine) {
  std::map<std::string, std::vector<std::uint64_t>> by_machine;
  auto r = simulate(fixture("medido"), config(12, UniformDist{}, false),
                    [&](const SignalEvent& e) { by_machine[e.machine].push_back(e.seq); });
  std::map<std::string, std::vector<std::uint64_t>> expected;
  for (const auto& rec : r.trace.records) {
    if (is_signal_kind(rec.kind)) expected[rec.machine].push_back(rec.seq);
  }
  EXPECT_EQ(by_machine, expected);
}

TEST(Engine, TransitionsLeaveTheRecordedState) {
  auto r = simulate(fixture("karie"), config(21, UniformDist{}, false));
  std::map<std::string, std::string> current;
  const auto& m = fixture("karie");
  for (const auto& rec : r.trace.records) {
    if (rec.kind == TraceKind::State) current[rec.machine] = ModelElementId::parse(rec.element)->name;
    if (rec.kind == TraceKind::Reenter) current[rec.machine] = ModelElementId::parse(rec.detail)->name;
    if (rec.kind != TraceKind::Transition) continue;
    auto id = ModelElementId::parse(rec.element);
    const auto* sm = m.find_machine(id->machine);
    auto t = std::find_if(sm->transitions.begin(), sm->transitions.end(),
                          [&](const Transition& x) { return x.name == id->name; });
    ASSERT_NE(t, sm->transitions.end());
    if (t->source == "initial") EXPECT_FALSE(current.count(rec.machine) && current[rec.machine] != "initial");
    else EXPECT_EQ(current[rec.machine], t->source) << rec.seq;
  }
}

TEST(Engine, ParallelSchedulerKeepsPerMachineContracts) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = config(seed, TriangularDist{});
    cfg.scheduler = SchedulerMode::Parallel;
    auto r = simulate(fixture("karie"), cfg);
    EXPECT_NO_THROW(replay_trace(fixture("karie"), r.trace));
    std::set<std::string> seen;
    for (const auto& rec : r.trace.records) {
      if (is_element_kind(rec.kind)) {
        EXPECT_TRUE(seen.insert(rec.element).second);
      }
    }
  }
}

TEST(Engine, ScaledWaitsDoNotChangeTheTrace) {
  auto cfg = config(9);
  auto skip = simulate(fixture("pilly"), cfg);
  cfg.wait = WaitMode::scaled(0.0001);
  auto scaled = simulate(fixture("pilly"), cfg);
  EXPECT_EQ(skip.trace.to_jsonl(), scaled.trace.to_jsonl());
}

// Transition selection -------------------------------------------------------

namespace {

BehaviorMachine branch_machine(std::vector<std::optional<double>> beliefs) {
  BehaviorMachine m;
  m.name = "B";
  m.owner = "X";
  State a;
  a.name = "A";
  m.states.push_back(a);
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    State s;
    s.name = "T" + std::to_string(i);
    m.states.push_back(s);
    Transition t;
    t.name = "t" + std::to_string(i);
    t.source = "A";
    t.target = s.name;
    if (beliefs[i]) t.belief = BeliefAnnotation{*beliefs[i], ""};
    m.transitions.push_back(t);
  }
  return m;
}

}  // namespace

TEST(Selection, SingleDeterministicAlwaysChosen) {
  auto m = branch_machine({std::nullopt});
  RandomStream s(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(find_transition(m, "A", config(0), s), 0u);
  EXPECT_EQ(s.position(), 0u) << "no draw for deterministic candidates";
}

TEST(Selection, BernoulliBranchMatchesRuleOracle) {
  auto m = branch_machine({0.8, 0.2});
  auto cfg = config(0, BernoulliDist{});
  int first = 0;
  constexpr int trials = 10'000;
  for (int i = 0; i < trials; ++i) {
    RandomStream s(static_cast<std::uint64_t>(i) * 7919 + 1);
    auto pick = find_transition(m, "A", cfg, s);
    first += pick && *pick == 0;
  }
  // Bernoulli draws are 0/1: the 0.8 branch wins exactly when its own draw is 1.
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.5);
  int oracle = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    double x1 = coin(rng), x2 = coin(rng);
    double w1 = 0.8 * x1, w2 = 0.2 * x2;
    oracle += w1 > 0 && w1 >= w2;
  }
  EXPECT_NEAR(static_cast<double>(first) / trials, oracle / 1e6, 0.02);
}

TEST(Selection, OnceOnlyExhaustionHalts) {
  auto m = branch_machine({0.8, 0.2});
  RandomStream s(1);
  auto pick = find_transition(m, "A", config(0), s, [](const Transition&) { return true; });
  EXPECT_FALSE(pick);
}

TEST(Selection, ZeroWeightsMeanNoTransition) {
  auto m = branch_machine({0.0, 0.0});
  RandomStream s(1);
  EXPECT_FALSE(find_transition(m, "A", config(0), s));
}

TEST(Selection, DeterministicBeatsUncertainSiblings) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::optional<double>> beliefs{std::nullopt};
    int extra = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < extra; ++i) beliefs.push_back(std::uniform_real_distribution<double>(0.0, 0.999)(rng));
    auto m = branch_machine(beliefs);
    RandomStream s(static_cast<std::uint64_t>(trial));
    auto kind = kAllDistributionKinds[static_cast<std::size_t>(trial % 10)];
    EXPECT_EQ(find_transition(m, "A", config(0, default_spec(kind)), s), 0u);
  }
}

TEST(Selection, ArgmaxOfBeliefTimesDraw) {
  // Recompute each weight from a copy of the stream and compare the winner.
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::optional<double>> beliefs;
    int n = std::uniform_int_distribution<int>(2, 5)(rng);
    for (int i = 0; i < n; ++i) beliefs.push_back(std::uniform_int_distribution<int>(0, 10)(rng) / 10.0);
    auto m = branch_machine(beliefs);
    auto kind = kAllDistributionKinds[static_cast<std::size_t>(trial % 10)];
    RandomStream s(static_cast<std::uint64_t>(trial) + 100);
    RandomStream copy = s;
    auto pick = find_transition(m, "A", config(0, default_spec(kind)), s);
    std::optional<std::size_t> expected;
    double best = 0.0;
    for (std::size_t i = 0; i < beliefs.size(); ++i) {
      double w = *beliefs[i] * unit_likelihood(default_spec(kind), copy);
      if (w > best) best = w, expected = i;
    }
    EXPECT_EQ(pick, expected);
    EXPECT_EQ(s.position(), copy.position());
  }
}
