#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "envdt/model.hpp"

namespace envdt {

enum class TraceKind {
  Transition,
  Event,
  State,
  Reenter,
  Behavior,
  Update,
  Reject,
  Emit,
  Log,
  Wait,
  Spawn,
  Final,
  Halt,
  Fault,
};

std::string_view to_string(TraceKind k);
std::optional<TraceKind> trace_kind_from_string(std::string_view s);

/// Kinds whose `element` field is a ModelElementId.
bool is_element_kind(TraceKind k);

/// Kinds that carry a signal to the twin (`detail` holds the signal name).
inline bool is_signal_kind(TraceKind k) { return k == TraceKind::Event || k == TraceKind::Emit; }

struct TraceRecord {
  std::uint64_t seq = 0;
  std::int64_t t_ms = 0;  // logical clock of the emitting runtime
  std::string machine;    // runtime name, "M" or "M#2"
  TraceKind kind = TraceKind::Log;
  std::string element;
  std::string detail;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

std::string to_json_line(const TraceRecord& r);
TraceRecord trace_record_from_json(std::string_view line);

struct ExecutionTrace {
  std::vector<TraceRecord> records;

  /// One JSON object per line, fields in schema order.
  std::string to_jsonl() const;
  static ExecutionTrace from_jsonl(std::string_view text);
};

class TraceModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Machine name of a runtime name ("BatterySM#2" -> "BatterySM").
std::string machine_of_runtime(std::string_view runtime);

struct ReplayResult {
  /// Element occurrences in trace order.
  std::vector<ModelElementId> occurrences;
  std::set<ModelElementId> visited;
  /// Current state per runtime at the end of the trace.
  std::vector<std::pair<std::string, std::string>> final_states;
};

/// Re-walks the trace against the model: each transition must leave the
/// runtime's current state, and every element must exist in the model.
/// Throws TraceModelMismatch otherwise.
ReplayResult replay_trace(const EnvironmentModel& model, const ExecutionTrace& trace);

}  // namespace envdt
