#include "envdt/engine.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace envdt {

std::optional<std::size_t> find_transition(const BehaviorMachine& m, std::string_view state,
                                           const SimulationConfig& config, RandomStream& stream,
                                           const std::function<bool(const Transition&)>& visited) {
  std::optional<std::size_t> best;
  double best_weight = 0.0;
  for (std::size_t i = 0; i < m.transitions.size(); ++i) {
    const Transition& t = m.transitions[i];
    if (t.source != state) continue;
    if (config.once_only && visited && visited(t)) continue;
    double likelihood = 1.0;
    if (t.uncertain()) likelihood = unit_likelihood(t.dist ? *t.dist : config.distribution, stream);
    double w = t.probability() * likelihood;
    if (w > best_weight) {
      best_weight = w;
      best = i;
    }
  }
  return best;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Runtime {
  std::string name;
  const BehaviorMachine* machine = nullptr;
  std::string instance;
  std::string state = "initial";
  std::int64_t clock = 0;
  RandomStream select{0};
  RandomStream action{0};
  std::atomic<bool> done{false};
  std::map<std::string, Value> pending;
};

class Simulation {
 public:
  Simulation(const EnvironmentModel& model, InstanceModel instance, const SimulationConfig& config,
             const SignalSink& sink)
      : model_(model), config_(config), sink_(sink), run_stream_(config.seed),
        domains_(model, config.params) {
    result_.instance = std::move(instance);
  }

  RunResult execute() {
    auto start = Clock::now();
    const BehaviorMachine* root = model_.root_machine();
    if (root) {
      const ComponentClass* owner = model_.find_class(root->owner);
      const Instance* inst = owner ? result_.instance.first_of(owner->name) : nullptr;
      if (!inst) {
        record(root->name, 0, TraceKind::Fault, {}, fmt::format("no instance of {}", root->owner));
        ++result_.faults;
      } else {
        std::lock_guard lock(mu_);
        root_ = add_runtime(*root, inst->id, 0);
      }
    }
    if (root_) {
      if (config_.scheduler == SchedulerMode::Parallel) {
        run_parallel();
      } else {
        run_interleaved();
      }
    }
    result_.steps = steps_.load();
    double wall = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result_.core_ms = std::max(0.0, wall - slept_ms_.load());
    return std::move(result_);
  }

 private:
  // ---- scheduling ----------------------------------------------------------

  void run_interleaved() {
    while (!stop_) {
      bool moved = false;
      for (std::size_t i = 0; i < runtimes_.size() && !stop_; ++i) {
        Runtime& rt = *runtimes_[i];
        if (rt.done) continue;
        moved = true;
        step(rt);
      }
      if (!moved) break;
    }
  }

  void run_parallel() {
    {
      std::lock_guard lock(mu_);
      threads_.emplace_back([this, rt = root_] { drive(*rt); });
    }
    std::size_t joined = 0;
    while (true) {
      std::thread next;
      {
        std::lock_guard lock(mu_);
        if (joined == threads_.size()) break;
        next = std::move(threads_[joined]);
      }
      next.join();
      ++joined;
    }
  }

  void drive(Runtime& rt) {
    while (!stop_ && !rt.done) step(rt);
  }

  // ---- one step ------------------------------------------------------------

  void step(Runtime& rt) {
    std::optional<std::size_t> chosen;
    {
      std::lock_guard lock(mu_);
      chosen = find_transition(*rt.machine, rt.state, config_, rt.select, [&](const Transition& t) {
        return visited_.count(transition_id(*rt.machine, t).str()) > 0;
      });
    }
    if (!chosen) {
      record(rt, TraceKind::Halt, {}, state_id(*rt.machine, *rt.machine->find_state(rt.state)).str());
      rt.done = true;
      return;
    }
    if (steps_.fetch_add(1) >= config_.max_steps) {
      steps_.fetch_sub(1);
      stop_ = true;
      return;
    }
    try {
      execute_transition(rt, rt.machine->transitions[*chosen]);
    } catch (const RuntimeFault& e) {
      record(rt, TraceKind::Fault, {}, e.what());
      rt.done = true;
      std::lock_guard lock(mu_);
      ++result_.faults;
    }
    if (config_.max_steps <= steps_.load()) stop_ = true;
  }

  void execute_transition(Runtime& rt, const Transition& t) {
    record_element(rt, TraceKind::Transition, transition_id(*rt.machine, t), {});
    if (t.trigger) {
      std::lock_guard lock(mu_);
      auto seq = append(rt.name, rt.clock, TraceKind::Event, event_id(*rt.machine, t).str(),
                        t.trigger->display_name());
      notify(rt, *t.trigger, seq);
    }
    rt.state = t.target;
    execute_state(rt, *rt.machine->find_state(t.target));
  }

  void execute_state(Runtime& rt, const State& s) {
    std::string sid = state_id(*rt.machine, s).str();
    bool seen = false;
    {
      std::lock_guard lock(mu_);
      seen = config_.once_only && visited_.count(sid);
    }
    if (s.kind == StateKind::Final) {
      if (!seen) record_element(rt, TraceKind::State, state_id(*rt.machine, s), {});
      record(rt, TraceKind::Final, {}, sid);
      rt.done = true;
      if (&rt == root_) {
        result_.root_final = true;
        stop_ = true;
      }
      return;
    }
    if (seen) {
      record(rt, TraceKind::Reenter, {}, sid);
      return;
    }
    record_element(rt, TraceKind::State, state_id(*rt.machine, s), {});
    for (BehaviorSlot slot : {BehaviorSlot::Entry, BehaviorSlot::Do, BehaviorSlot::Exit}) {
      const auto& block = s.behavior(slot);
      if (!block || block->empty()) continue;
      record_element(rt, TraceKind::Behavior, behavior_id(*rt.machine, s, slot), {});
      for (const auto& st : block->statements) run_statement(rt, st);
    }
    if (s.submachine) spawn(rt, *s.submachine);
  }

  // ---- actions -------------------------------------------------------------

  void run_statement(Runtime& rt, const Statement& st) {
    switch (st.kind) {
      case StatementKind::Set: {
        std::lock_guard lock(mu_);
        auto [owner, prop] = locate(rt, st.target);
        Value v;
        try {
          v = evaluate(*st.value, result_.instance, rt.instance, config_.params);
        } catch (const EvalError& e) {
          throw RuntimeFault(fmt::format("set {}.{}: {}", owner, prop, e.what()));
        }
        commit(rt, owner, prop, v);
        break;
      }
      case StatementKind::Rand: {
        std::lock_guard lock(mu_);
        auto [owner, prop] = locate(rt, st.target);
        commit(rt, owner, prop, draw(rt, owner, prop, st));
        break;
      }
      case StatementKind::Emit: {
        std::lock_guard lock(mu_);
        auto seq = append(rt.name, rt.clock, TraceKind::Emit, {}, st.signal->display_name());
        notify(rt, *st.signal, seq);
        break;
      }
      case StatementKind::Log:
        record(rt, TraceKind::Log, {}, st.text);
        break;
      case StatementKind::Wait: {
        record(rt, TraceKind::Wait, {}, std::to_string(st.wait_ms));
        rt.clock += st.wait_ms;
        double ms = 0;
        if (config_.wait.kind == WaitMode::Kind::Real) ms = static_cast<double>(st.wait_ms);
        if (config_.wait.kind == WaitMode::Kind::Scaled) ms = static_cast<double>(st.wait_ms) * config_.wait.factor;
        if (ms > 0) {
          auto t0 = Clock::now();
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
          double slept = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
          double cur = slept_ms_.load();
          while (!slept_ms_.compare_exchange_weak(cur, cur + slept)) {
          }
        }
        break;
      }
    }
  }

  /// Owner instance and property name of a `self.a.b.prop` target.
  std::pair<std::string, std::string> locate(const Runtime& rt, const std::vector<std::string>& path) {
    std::string cur = rt.instance;
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      auto next = result_.instance.targets(cur, path[i]);
      if (next.empty()) throw RuntimeFault(fmt::format("{} has no '{}' link", cur, path[i]));
      cur = next.front();
    }
    return {cur, path.back()};
  }

  Value draw(Runtime& rt, const std::string& owner, const std::string& prop, const Statement& st) {
    const Instance* inst = result_.instance.find(owner);
    const ComponentClass* cls = model_.find_class(inst->cls);
    const PropertyDecl* p = cls ? cls->find_property(prop) : nullptr;
    if (!p) throw RuntimeFault(fmt::format("{} has no property '{}'", owner, prop));
    auto [dlo, dhi] = domains_.interval(inst->cls, prop);
    double lo = std::max(as_double(st.low), dlo);
    double hi = std::min(as_double(st.high), dhi);
    double u = rt.action.next_uniform();
    if (p->type == PrimitiveType::Int) {
      lo = std::ceil(lo);
      hi = std::floor(hi);
      if (lo > hi) throw RuntimeFault(fmt::format("rand {}.{}: empty interval", owner, prop));
      auto v = static_cast<std::int64_t>(lo + std::floor(u * (hi - lo + 1)));
      return std::min(v, static_cast<std::int64_t>(hi));
    }
    if (lo > hi) throw RuntimeFault(fmt::format("rand {}.{}: empty interval", owner, prop));
    return std::min(lo + u * (hi - lo), hi);
  }

  void commit(Runtime& rt, const std::string& owner, const std::string& prop, const Value& v) {
    std::string element = owner + "." + prop;
    UpdateOutcome outcome;
    try {
      outcome = apply_update(result_.instance, model_, PropertyUpdate{owner, prop, v}, config_.params);
    } catch (const std::invalid_argument& e) {
      throw RuntimeFault(e.what());
    }
    if (outcome.committed) {
      const Value& stored = result_.instance.find(owner)->values.at(prop);
      append(rt.name, rt.clock, TraceKind::Update, element, value_to_string(stored));
      rt.pending[element] = stored;
    } else {
      append(rt.name, rt.clock, TraceKind::Reject, element,
             fmt::format("{} <- {}", fmt::join(outcome.violated_ids(), ","), value_to_string(v)));
    }
  }

  // ---- submachines ---------------------------------------------------------

  void spawn(Runtime& parent, const std::string& machine_name) {
    std::lock_guard lock(mu_);
    const BehaviorMachine* m = model_.find_machine(machine_name);
    if (!m) throw RuntimeFault("unknown submachine " + machine_name);
    int started = started_[machine_name];
    if (config_.once_only && started > 0) return;
    for (const auto& rt : runtimes_) {
      if (rt->machine == m && !rt->done) return;
    }
    const Instance* inst = result_.instance.nearest_of(m->owner, parent.instance);
    if (!inst) throw RuntimeFault(fmt::format("no instance of {} for {}", m->owner, machine_name));
    Runtime* rt = add_runtime(*m, inst->id, parent.clock);
    append(parent.name, parent.clock, TraceKind::Spawn, {}, rt->name);
    if (config_.scheduler == SchedulerMode::Parallel) {
      threads_.emplace_back([this, rt] { drive(*rt); });
    }
  }

  Runtime* add_runtime(const BehaviorMachine& m, const std::string& instance, std::int64_t clock) {
    int n = ++started_[m.name];
    auto rt = std::make_unique<Runtime>();
    rt->name = n == 1 ? m.name : fmt::format("{}#{}", m.name, n);
    rt->machine = &m;
    rt->instance = instance;
    rt->clock = clock;
    rt->select = run_stream_.split("select/" + rt->name);
    rt->action = run_stream_.split("action/" + rt->name);
    runtimes_.push_back(std::move(rt));
    return runtimes_.back().get();
  }

  // ---- trace ---------------------------------------------------------------

  std::uint64_t append(const std::string& machine, std::int64_t clock, TraceKind kind, std::string element,
                       std::string detail) {
    TraceRecord r;
    r.seq = result_.trace.records.size() + 1;
    r.t_ms = clock;
    r.machine = machine;
    r.kind = kind;
    r.element = std::move(element);
    r.detail = std::move(detail);
    result_.trace.records.push_back(std::move(r));
    return result_.trace.records.back().seq;
  }

  void record(const std::string& machine, std::int64_t clock, TraceKind kind, std::string element,
              std::string detail) {
    std::lock_guard lock(mu_);
    append(machine, clock, kind, std::move(element), std::move(detail));
  }

  void record(Runtime& rt, TraceKind kind, std::string element, std::string detail) {
    record(rt.name, rt.clock, kind, std::move(element), std::move(detail));
  }

  void record_element(Runtime& rt, TraceKind kind, const ModelElementId& id, std::string detail) {
    std::lock_guard lock(mu_);
    std::string s = id.str();
    visited_.insert(s);
    append(rt.name, rt.clock, kind, std::move(s), std::move(detail));
  }

  void notify(Runtime& rt, const SignalKind& signal, std::uint64_t seq) {
    if (!sink_) {
      rt.pending.clear();
      return;
    }
    SignalEvent ev;
    ev.run_id = config_.run_id;
    ev.seq = seq;
    ev.machine = rt.name;
    ev.signal = signal;
    ev.instance = rt.instance;
    ev.t_ms = rt.clock;
    ev.payload = std::move(rt.pending);
    rt.pending.clear();
    sink_(ev);
  }

  const EnvironmentModel& model_;
  const SimulationConfig& config_;
  const SignalSink& sink_;
  RandomStream run_stream_;
  PropertyDomains domains_;
  RunResult result_;

  std::mutex mu_;
  std::vector<std::unique_ptr<Runtime>> runtimes_;
  std::vector<std::thread> threads_;
  std::map<std::string, int> started_;
  std::set<std::string> visited_;
  Runtime* root_ = nullptr;
  std::atomic<bool> stop_{false};
  std::atomic<std::int64_t> steps_{0};
  std::atomic<double> slept_ms_{0.0};
};

}  // namespace

RunResult run(const EnvironmentModel& model, InstanceModel instance, const SimulationConfig& config,
              const SignalSink& sink) {
  return Simulation(model, std::move(instance), config, sink).execute();
}

}  // namespace envdt
