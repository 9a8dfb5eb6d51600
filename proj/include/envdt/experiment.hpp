#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "envdt/analytics.hpp"
#include "envdt/engine.hpp"

namespace envdt {

struct ExperimentPlan {
  std::vector<std::filesystem::path> fixtures;
  std::vector<DistributionSpec> distributions;
  int repetitions = 30;
  std::uint64_t seed = 0;
  bool once_only = true;
  std::int64_t max_steps = 500;
  std::filesystem::path out = "out";
  ParamTable params;
};

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// YAML plan; fixture paths are relative to the plan file. Missing keys take
/// the defaults above, distributions default to all ten in table order.
ExperimentPlan load_plan(const std::filesystem::path& path, std::uint64_t default_seed = 0);

std::uint64_t run_seed(std::uint64_t base, std::string_view device, std::string_view distribution, int repetition);
std::string run_id(std::string_view device, std::string_view distribution, int repetition);
/// Lower-cased model name.
std::string device_key(const EnvironmentModel& model);

struct RunSummary {
  std::string run_id;
  std::string device;
  std::string distribution;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  int events = 0;
  double coverage = 0.0;
  int covered = 0;
  int total = 0;
  double simpson = 0.0;
  int uncertain_events = 0;
  int updates = 0;
  int rejected = 0;
  int faults = 0;
  bool root_final = false;
  double core_ms = 0.0;
};

std::string summary_json(const RunSummary& s);
RunSummary summary_from_json(std::string_view text);

struct SingleRun {
  RunResult result;
  CoverageReport coverage;
  DiversityReport diversity;
  RunSummary summary;
};

/// instantiate -> run -> metrics for one (model, seed, config).
SingleRun simulate_once(const EnvironmentModel& model, const SimulationConfig& config, const SignalSink& sink = {});

struct ExperimentOutcome {
  int executed = 0;
  int skipped = 0;
  bool complete = false;
  std::vector<RunSummary> runs;
};

/// Runs the matrix in plan order. Runs whose summary file already exists are
/// skipped; `limit` caps the number of newly executed runs. CSV tables are
/// written once every run has a summary.
ExperimentOutcome run_experiment(const ExperimentPlan& plan, std::optional<int> limit = std::nullopt);

struct ReportTables {
  AggregateTable coverage;
  AggregateTable diversity;
  AggregateTable simtime;
};

ReportTables build_tables(const std::vector<RunSummary>& runs, std::vector<std::string> devices = {});
void write_tables(const ReportTables& tables, const std::filesystem::path& dir);

/// Reads every *.summary.json below `dir`.
std::vector<RunSummary> load_summaries(const std::filesystem::path& dir);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace envdt
