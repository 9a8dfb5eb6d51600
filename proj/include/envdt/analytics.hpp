#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "envdt/model.hpp"
#include "envdt/trace.hpp"

namespace envdt {

struct CoverageReport {
  std::string run_id;
  std::set<ModelElementId> covered;
  int total = 0;
  double percent = 0.0;
  /// Auxiliary columns, not part of the percentage.
  int instance_updates = 0;
  int rejected_updates = 0;
};

/// Throws TraceModelMismatch on elements the model does not declare.
CoverageReport coverage(const ExecutionTrace& trace, const EnvironmentModel& model, std::string run_id = {});

struct DiversityReport {
  std::string run_id;
  /// Occurrences of uncertain events, keyed by signal name.
  std::map<std::string, int> event_counts;
  int total = 0;
  double simpson = 0.0;         // unbiased form
  double simpson_plugin = 0.0;  // 1 - sum p^2
};

/// 1 - sum n(n-1) / (N(N-1)); 0 when N <= 1.
double simpson_index(const std::vector<int>& counts);
/// 1 - sum (n/N)^2; 0 when N == 0.
double simpson_plugin_index(const std::vector<int>& counts);

/// Counts event records whose transition carries a belief annotation.
DiversityReport diversity(const ExecutionTrace& trace, const EnvironmentModel& model, std::string run_id = {});

struct CellStats {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) form, 0 when n == 1
  int n = 0;

  friend bool operator==(const CellStats&, const CellStats&) = default;
};

CellStats summarize(const std::vector<double>& values);

/// Rows are distributions, columns are (mean, std, n) per device.
class AggregateTable {
 public:
  AggregateTable(std::string metric, std::vector<std::string> devices, std::vector<std::string> distributions);

  void add(const std::string& device, const std::string& distribution, double value);
  CellStats cell(const std::string& device, const std::string& distribution) const;

  const std::string& metric() const { return metric_; }
  const std::vector<std::string>& devices() const { return devices_; }
  const std::vector<std::string>& distributions() const { return distributions_; }

  /// Fixed-point CSV with `precision` decimals.
  std::string to_csv(int precision = 4) const;

 private:
  std::string metric_;
  std::vector<std::string> devices_;
  std::vector<std::string> distributions_;
  std::map<std::pair<std::string, std::string>, std::vector<double>> values_;
};

}  // namespace envdt
