#include "envdt/analytics.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "envdt/census.hpp"

namespace envdt {

CoverageReport coverage(const ExecutionTrace& trace, const EnvironmentModel& model, std::string run_id) {
  std::set<ModelElementId> known;
  for (auto& id : flatten_elements(model)) known.insert(std::move(id));
  CoverageReport r;
  r.run_id = std::move(run_id);
  r.total = static_cast<int>(known.size());
  for (const auto& rec : trace.records) {
    if (rec.kind == TraceKind::Update) ++r.instance_updates;
    if (rec.kind == TraceKind::Reject) ++r.rejected_updates;
    if (!is_element_kind(rec.kind)) continue;
    auto id = ModelElementId::parse(rec.element);
    if (!id || !known.count(*id)) {
      throw TraceModelMismatch(fmt::format("seq {}: element '{}' is not in model {}", rec.seq, rec.element, model.name));
    }
    r.covered.insert(std::move(*id));
  }
  r.percent = r.total == 0 ? 0.0 : 100.0 * static_cast<double>(r.covered.size()) / r.total;
  return r;
}

double simpson_index(const std::vector<int>& counts) {
  double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 1) return 0.0;
  double same = 0.0;
  for (int c : counts) same += static_cast<double>(c) * (c - 1);
  return 1.0 - same / (n * (n - 1));
}

double simpson_plugin_index(const std::vector<int>& counts) {
  double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0) return 0.0;
  double sum = 0.0;
  for (int c : counts) sum += (c / n) * (c / n);
  return 1.0 - sum;
}

DiversityReport diversity(const ExecutionTrace& trace, const EnvironmentModel& model, std::string run_id) {
  DiversityReport r;
  r.run_id = std::move(run_id);
  for (const auto& rec : trace.records) {
    if (rec.kind != TraceKind::Event) continue;
    auto id = ModelElementId::parse(rec.element);
    if (!id) continue;
    const BehaviorMachine* m = model.find_machine(id->machine);
    if (!m) continue;
    for (const auto& t : m->transitions) {
      if (t.name == id->name && t.uncertain()) {
        ++r.event_counts[rec.detail];
        ++r.total;
        break;
      }
    }
  }
  std::vector<int> counts;
  for (const auto& [k, v] : r.event_counts) counts.push_back(v);
  r.simpson = simpson_index(counts);
  r.simpson_plugin = simpson_plugin_index(counts);
  return r;
}

CellStats summarize(const std::vector<double>& values) {
  CellStats s;
  s.n = static_cast<int>(values.size());
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

AggregateTable::AggregateTable(std::string metric, std::vector<std::string> devices,
                               std::vector<std::string> distributions)
    : metric_(std::move(metric)), devices_(std::move(devices)), distributions_(std::move(distributions)) {}

void AggregateTable::add(const std::string& device, const std::string& distribution, double value) {
  values_[{device, distribution}].push_back(value);
}

CellStats AggregateTable::cell(const std::string& device, const std::string& distribution) const {
  auto it = values_.find({device, distribution});
  if (it == values_.end()) return {};
  return summarize(it->second);
}

std::string AggregateTable::to_csv(int precision) const {
  std::string out = "distribution";
  for (const auto& d : devices_) out += fmt::format(",{0}_mean,{0}_std,{0}_n", d);
  out += '\n';
  for (const auto& dist : distributions_) {
    out += dist;
    for (const auto& d : devices_) {
      CellStats c = cell(d, dist);
      out += fmt::format(",{:.{}f},{:.{}f},{}", c.mean, precision, c.std, precision, c.n);
    }
    out += '\n';
  }
  return out;
}

}  // namespace envdt
