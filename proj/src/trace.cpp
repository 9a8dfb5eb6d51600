#include "envdt/trace.hpp"

#include <array>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "envdt/census.hpp"

namespace envdt {

namespace {

constexpr std::array<std::pair<TraceKind, std::string_view>, 14> kKindNames{{
    {TraceKind::Transition, "transition"},
    {TraceKind::Event, "event"},
    {TraceKind::State, "state"},
    {TraceKind::Reenter, "reenter"},
    {TraceKind::Behavior, "behavior"},
    {TraceKind::Update, "update"},
    {TraceKind::Reject, "reject"},
    {TraceKind::Emit, "emit"},
    {TraceKind::Log, "log"},
    {TraceKind::Wait, "wait"},
    {TraceKind::Spawn, "spawn"},
    {TraceKind::Final, "final"},
    {TraceKind::Halt, "halt"},
    {TraceKind::Fault, "fault"},
}};

}  // namespace

std::string_view to_string(TraceKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<TraceKind> trace_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

bool is_element_kind(TraceKind k) {
  return k == TraceKind::State || k == TraceKind::Transition || k == TraceKind::Event ||
         k == TraceKind::Behavior;
}

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["seq"] = r.seq;
  j["t_ms"] = r.t_ms;
  j["machine"] = r.machine;
  j["kind"] = to_string(r.kind);
  j["element"] = r.element;
  j["detail"] = r.detail;
  return j.dump();
}

TraceRecord trace_record_from_json(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  TraceRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.t_ms = j.at("t_ms").get<std::int64_t>();
  r.machine = j.at("machine").get<std::string>();
  auto kind = trace_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown trace kind in: " + std::string(line));
  r.kind = *kind;
  r.element = j.at("element").get<std::string>();
  r.detail = j.at("detail").get<std::string>();
  return r;
}

std::string ExecutionTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  return out;
}

ExecutionTrace ExecutionTrace::from_jsonl(std::string_view text) {
  ExecutionTrace t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty()) t.records.push_back(trace_record_from_json(line));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return t;
}

std::string machine_of_runtime(std::string_view runtime) {
  return std::string(runtime.substr(0, runtime.find('#')));
}

ReplayResult replay_trace(const EnvironmentModel& model, const ExecutionTrace& trace) {
  std::set<ModelElementId> known;
  for (auto& id : flatten_elements(model)) known.insert(std::move(id));

  ReplayResult out;
  std::map<std::string, std::string> current;
  std::vector<std::string> order;
  for (const auto& r : trace.records) {
    if (!current.count(r.machine)) {
      current[r.machine] = "initial";
      order.push_back(r.machine);
    }
    if (!is_element_kind(r.kind)) continue;
    auto id = ModelElementId::parse(r.element);
    if (!id) throw TraceModelMismatch(fmt::format("seq {}: malformed element '{}'", r.seq, r.element));
    if (!known.count(*id)) throw TraceModelMismatch(fmt::format("seq {}: element {} is not in the model", r.seq, r.element));
    if (id->machine != machine_of_runtime(r.machine)) {
      throw TraceModelMismatch(fmt::format("seq {}: {} recorded by runtime {}", r.seq, r.element, r.machine));
    }
    if (r.kind == TraceKind::Transition) {
      const BehaviorMachine* m = model.find_machine(id->machine);
      const Transition* t = nullptr;
      for (const auto& cand : m->transitions) {
        if (cand.name == id->name) t = &cand;
      }
      if (t->source != current[r.machine]) {
        throw TraceModelMismatch(fmt::format("seq {}: transition {} leaves {} but runtime {} is in {}", r.seq,
                                             t->name, t->source, r.machine, current[r.machine]));
      }
      current[r.machine] = t->target;
    } else if (r.kind == TraceKind::State && id->name != current[r.machine]) {
      throw TraceModelMismatch(fmt::format("seq {}: state {} entered but runtime {} moved to {}", r.seq, id->name,
                                           r.machine, current[r.machine]));
    }
    out.occurrences.push_back(*id);
    out.visited.insert(*id);
  }
  for (const auto& rt : order) out.final_states.emplace_back(rt, current[rt]);
  return out;
}

}  // namespace envdt
