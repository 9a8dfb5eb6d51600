#include "envdt/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "envdt/dsl.hpp"
#include "envdt/validation.hpp"

namespace envdt {

namespace fs = std::filesystem;

ExperimentPlan load_plan(const fs::path& path, std::uint64_t default_seed) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw PlanError("cannot read plan " + path.string());
  } catch (const YAML::Exception& e) {
    throw PlanError(fmt::format("{}: {}", path.string(), e.what()));
  }
  ExperimentPlan plan;
  plan.seed = default_seed;
  try {
    fs::path base = path.parent_path();
    if (auto f = root["fixtures"]) {
      for (const auto& n : f) plan.fixtures.push_back(base / n.as<std::string>());
    }
    if (auto d = root["distributions"]) {
      for (const auto& n : d) plan.distributions.push_back(parse_distribution(n.as<std::string>()));
    } else {
      for (auto k : kAllDistributionKinds) plan.distributions.push_back(default_spec(k));
    }
    if (auto n = root["repetitions"]) plan.repetitions = n.as<int>();
    if (auto n = root["seed"]) plan.seed = n.as<std::uint64_t>();
    if (auto n = root["once_only"]) plan.once_only = n.as<bool>();
    if (auto n = root["max_steps"]) plan.max_steps = n.as<std::int64_t>();
    if (auto n = root["out"]) plan.out = n.as<std::string>();
    if (auto n = root["devices_per_patient"]) plan.params["N"] = n.as<std::int64_t>();
  } catch (const YAML::Exception& e) {
    throw PlanError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const InvalidParameters& e) {
    throw PlanError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (plan.fixtures.empty()) throw PlanError(path.string() + ": no fixtures");
  if (plan.repetitions < 1) throw PlanError(path.string() + ": repetitions must be >= 1");
  if (plan.max_steps < 0) throw PlanError(path.string() + ": max_steps must be >= 0");
  return plan;
}

std::uint64_t run_seed(std::uint64_t base, std::string_view device, std::string_view distribution, int repetition) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ fnv1a64(device));
  h = splitmix64(h ^ fnv1a64(distribution));
  return splitmix64(h ^ static_cast<std::uint64_t>(repetition));
}

std::string run_id(std::string_view device, std::string_view distribution, int repetition) {
  return fmt::format("{}-{}-r{:02}", device, distribution, repetition);
}

std::string device_key(const EnvironmentModel& model) {
  std::string out = model.name;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["runId"] = s.run_id;
  j["device"] = s.device;
  j["distribution"] = s.distribution;
  j["repetition"] = s.repetition;
  j["seed"] = s.seed;
  j["steps"] = s.steps;
  j["events"] = s.events;
  j["coverage"] = s.coverage;
  j["covered"] = s.covered;
  j["total"] = s.total;
  j["simpson"] = s.simpson;
  j["uncertainEvents"] = s.uncertain_events;
  j["updates"] = s.updates;
  j["rejected"] = s.rejected;
  j["faults"] = s.faults;
  j["rootFinal"] = s.root_final;
  j["coreMs"] = s.core_ms;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  RunSummary s;
  s.run_id = j.at("runId");
  s.device = j.at("device");
  s.distribution = j.at("distribution");
  s.repetition = j.at("repetition");
  s.seed = j.at("seed");
  s.steps = j.at("steps");
  s.events = j.at("events");
  s.coverage = j.at("coverage");
  s.covered = j.at("covered");
  s.total = j.at("total");
  s.simpson = j.at("simpson");
  s.uncertain_events = j.at("uncertainEvents");
  s.updates = j.at("updates");
  s.rejected = j.at("rejected");
  s.faults = j.at("faults");
  s.root_final = j.at("rootFinal");
  s.core_ms = j.at("coreMs");
  return s;
}

SingleRun simulate_once(const EnvironmentModel& model, const SimulationConfig& config, const SignalSink& sink) {
  SingleRun out;
  InstanceModel inst = instantiate(model, config.seed, config.params);
  out.result = run(model, std::move(inst), config, sink);
  out.coverage = coverage(out.result.trace, model, config.run_id);
  out.diversity = diversity(out.result.trace, model, config.run_id);
  auto& s = out.summary;
  s.run_id = config.run_id;
  s.device = device_key(model);
  s.distribution = std::string(to_string(kind_of(config.distribution)));
  s.seed = config.seed;
  s.steps = out.result.steps;
  s.events = static_cast<int>(std::count_if(out.result.trace.records.begin(), out.result.trace.records.end(),
                                            [](const TraceRecord& r) { return is_signal_kind(r.kind); }));
  s.coverage = out.coverage.percent;
  s.covered = static_cast<int>(out.coverage.covered.size());
  s.total = out.coverage.total;
  s.simpson = out.diversity.simpson;
  s.uncertain_events = out.diversity.total;
  s.updates = out.coverage.instance_updates;
  s.rejected = out.coverage.rejected_updates;
  s.faults = out.result.faults;
  s.root_final = out.result.root_final;
  s.core_ms = out.result.core_ms;
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentPlan& plan, std::optional<int> limit) {
  ExperimentOutcome outcome;
  fs::path runs_dir = plan.out / "runs";
  fs::create_directories(runs_dir);
  std::vector<std::string> devices;
  bool stopped = false;
  for (const auto& fixture : plan.fixtures) {
    EnvironmentModel model = load_model(fixture);
    if (auto report = validate_model(model); !report.ok()) {
      throw ModelLoadError(fmt::format("{}: {}", fixture.string(), format_diagnostic(report.diagnostics.front())),
                           {}, false);
    }
    std::string device = device_key(model);
    devices.push_back(device);
    ParamTable params = param_table(model, plan.params);
    for (const auto& dist : plan.distributions) {
      std::string dist_name(to_string(kind_of(dist)));
      for (int rep = 1; rep <= plan.repetitions; ++rep) {
        std::string id = run_id(device, dist_name, rep);
        fs::path summary_path = runs_dir / (id + ".summary.json");
        if (fs::exists(summary_path)) {
          outcome.runs.push_back(summary_from_json(read_text(summary_path)));
          ++outcome.skipped;
          continue;
        }
        if (stopped || (limit && outcome.executed >= *limit)) {
          stopped = true;
          continue;
        }
        SimulationConfig config;
        config.seed = run_seed(plan.seed, device, dist_name, rep);
        config.distribution = dist;
        config.once_only = plan.once_only;
        config.max_steps = plan.max_steps;
        config.run_id = id;
        config.params = params;
        SingleRun r = simulate_once(model, config);
        r.summary.repetition = rep;
        write_file_atomic(runs_dir / (id + ".trace.jsonl"), r.result.trace.to_jsonl());
        write_file_atomic(summary_path, summary_json(r.summary));
        outcome.runs.push_back(r.summary);
        ++outcome.executed;
      }
    }
  }
  outcome.complete = !stopped;
  if (outcome.complete) write_tables(build_tables(outcome.runs, devices), plan.out);
  return outcome;
}

ReportTables build_tables(const std::vector<RunSummary>& runs, std::vector<std::string> devices) {
  if (devices.empty()) {
    for (const auto& r : runs) devices.push_back(r.device);
    std::sort(devices.begin(), devices.end());
    devices.erase(std::unique(devices.begin(), devices.end()), devices.end());
  }
  std::vector<std::string> dists;
  for (auto k : kAllDistributionKinds) {
    std::string name(to_string(k));
    if (std::any_of(runs.begin(), runs.end(), [&](const RunSummary& r) { return r.distribution == name; })) {
      dists.push_back(name);
    }
  }
  ReportTables t{AggregateTable("coverage", devices, dists), AggregateTable("diversity", devices, dists),
                 AggregateTable("simtime", devices, dists)};
  for (const auto& r : runs) {
    t.coverage.add(r.device, r.distribution, r.coverage);
    t.diversity.add(r.device, r.distribution, r.simpson);
    t.simtime.add(r.device, r.distribution, r.core_ms);
  }
  return t;
}

void write_tables(const ReportTables& tables, const fs::path& dir) {
  write_file_atomic(dir / "coverage.csv", tables.coverage.to_csv(4));
  write_file_atomic(dir / "diversity.csv", tables.diversity.to_csv(4));
  write_file_atomic(dir / "simtime.csv", tables.simtime.to_csv(3));
}

std::vector<RunSummary> load_summaries(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 13 && name.ends_with(".summary.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> out;
  for (const auto& f : files) out.push_back(summary_from_json(read_text(f)));
  return out;
}

}  // namespace envdt
