#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "envdt/bridge.hpp"
#include "envdt/census.hpp"
#include "envdt/dsl.hpp"
#include "envdt/experiment.hpp"
#include "envdt/instance.hpp"
#include "envdt/validation.hpp"

namespace fs = std::filesystem;
using namespace envdt;

namespace {

constexpr int kOk = 0;
constexpr int kSemantic = 1;
constexpr int kIo = 2;

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t env_seed() {
  if (const char* s = std::getenv("ENVDT_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric ENVDT_SEED\n";
    }
  }
  return 0;
}

Value parse_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  try {
    std::size_t used = 0;
    long long i = std::stoll(text, &used);
    if (used == text.size()) return static_cast<std::int64_t>(i);
    double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

ParamTable parse_params(const std::vector<std::string>& raw) {
  ParamTable out;
  for (const auto& p : raw) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--param expects name=value, got '" + p + "'");
    out[p.substr(0, eq)] = parse_value(p.substr(eq + 1));
  }
  return out;
}

EnvironmentModel load_valid(const fs::path& path) {
  EnvironmentModel model = load_model(path);
  auto report = validate_model(model);
  for (const auto& d : report.diagnostics) std::cerr << format_diagnostic(d) << '\n';
  if (!report.ok()) throw std::invalid_argument(fmt::format("{}: {} error(s)", path.string(), report.error_count()));
  return model;
}

void write_output(const fs::path& path, std::string_view content) {
  try {
    write_file_atomic(path, content);
  } catch (const std::exception& e) {
    throw IoFailure(e.what());
  }
}

int cmd_validate(const fs::path& path) {
  EnvironmentModel model = load_model(path);
  auto report = validate_model(model);
  for (const auto& d : report.diagnostics) std::cerr << format_diagnostic(d) << '\n';
  if (!report.ok()) return kSemantic;
  std::cout << fmt::format("{}: ok ({} warning(s))\n", path.string(), report.diagnostics.size());
  return kOk;
}

int cmd_census(const fs::path& path, bool as_json) {
  EnvironmentModel model = load_valid(path);
  Census c = element_census(model);
  auto rows = census_rows(c);
  if (as_json) {
    nlohmann::ordered_json j;
    j["model"] = model.name;
    for (const auto& [label, n] : rows) j[label] = n;
    j["Total"] = c.element_total();
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
  std::cout << model.name << '\n';
  for (const auto& [label, n] : rows) std::cout << fmt::format("  {:<18}{:>5}\n", label, n);
  return kOk;
}

int cmd_instantiate(const fs::path& path, std::uint64_t seed, const std::vector<std::string>& params,
                    const std::optional<fs::path>& out) {
  EnvironmentModel model = load_valid(path);
  InstanceModel inst = instantiate(model, seed, param_table(model, parse_params(params)));
  std::string text = instance_records(inst);
  if (out) {
    write_output(*out, text);
    std::cout << fmt::format("{} instances, {} links -> {}\n", inst.instances().size(), inst.links().size(),
                             out->string());
  } else {
    std::cout << text;
  }
  return kOk;
}

struct SimulateOptions {
  fs::path model;
  std::uint64_t seed = 0;
  std::string dist = "uniform";
  bool once_only = false;
  std::int64_t max_steps = 1000;
  std::string twin;
  std::optional<fs::path> trace;
  std::vector<std::string> params;
  std::string run_id = "run";
  std::string scheduler = "deterministic";
  std::string wait = "skip";
};

WaitMode parse_wait(const std::string& text) {
  if (text == "skip") return WaitMode::skip();
  if (text == "real") return WaitMode::real();
  if (text.starts_with("scaled:")) return WaitMode::scaled(std::stod(text.substr(7)));
  throw std::invalid_argument("--wait expects skip, real or scaled:<factor>");
}

int cmd_simulate(const SimulateOptions& o) {
  EnvironmentModel model = load_valid(o.model);
  SimulationConfig config;
  config.seed = o.seed;
  config.distribution = parse_distribution(o.dist);
  config.once_only = o.once_only;
  config.max_steps = o.max_steps;
  config.run_id = o.run_id;
  config.params = param_table(model, parse_params(o.params));
  config.scheduler = o.scheduler == "parallel" ? SchedulerMode::Parallel : SchedulerMode::DeterministicInterleave;
  config.wait = parse_wait(o.wait);

  TwinService service;
  std::unique_ptr<Endpoint> endpoint;
  if (o.twin == "inproc") {
    endpoint = std::make_unique<InProcessEndpoint>(service);
  } else if (!o.twin.empty()) {
    endpoint = TcpEndpoint::from_uri(o.twin);
  }
  std::optional<Dispatcher> dispatcher;
  SignalSink sink;
  if (endpoint) {
    dispatcher.emplace(*endpoint);
    sink = dispatcher->sink();
  }

  SingleRun r = simulate_once(model, config, sink);
  std::vector<DeliveryReceipt> receipts;
  if (dispatcher) {
    try {
      receipts = dispatcher->flush();
    } catch (const EndpointUnavailable& e) {
      throw IoFailure(e.what());
    }
  }
  if (o.trace) write_output(*o.trace, r.result.trace.to_jsonl());

  const auto& s = r.summary;
  std::cout << fmt::format("{}: steps={} events={} coverage={:.2f}% diversity={:.4f} core_ms={:.3f}\n", s.run_id,
                           s.steps, s.events, s.coverage, s.simpson, s.core_ms);
  if (o.twin == "inproc") {
    auto st = service.state(o.run_id);
    std::cout << fmt::format("twin: delivered={} state={}\n", receipts.size(), st ? st->label : "idle");
  } else if (endpoint) {
    std::cout << fmt::format("twin: delivered={}\n", receipts.size());
  }
  return kOk;
}

int cmd_experiment(const fs::path& plan_path, const std::optional<fs::path>& out, std::optional<int> limit,
                   std::uint64_t seed, bool seed_given) {
  if (!fs::exists(plan_path)) throw IoFailure("cannot read plan " + plan_path.string());
  ExperimentPlan plan = load_plan(plan_path, seed);
  if (seed_given) plan.seed = seed;
  if (out) plan.out = *out;
  ExperimentOutcome o = run_experiment(plan, limit);
  std::size_t total = plan.fixtures.size() * plan.distributions.size() * static_cast<std::size_t>(plan.repetitions);
  std::cout << fmt::format("executed {} run(s), skipped {}, {} of {} complete\n", o.executed, o.skipped,
                           o.executed + o.skipped, total);
  if (o.complete) std::cout << fmt::format("tables written to {}\n", plan.out.string());
  return kOk;
}

int cmd_report(const fs::path& dir, const std::optional<fs::path>& out) {
  if (!fs::is_directory(dir)) throw IoFailure("not a directory: " + dir.string());
  auto runs = load_summaries(dir);
  if (runs.empty()) throw std::invalid_argument("no run summaries under " + dir.string());
  fs::path target = out.value_or(dir);
  write_tables(build_tables(runs), target);
  std::cout << fmt::format("{} run(s) aggregated into {}\n", runs.size(), target.string());
  return kOk;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_twin_stub(int port) {
  TwinService service;
  std::optional<TwinServer> server;
  try {
    server.emplace(service, port);
  } catch (const std::runtime_error& e) {
    throw IoFailure(e.what());
  }
  std::cout << fmt::format("twin-stub listening on 127.0.0.1:{}\n", server->port()) << std::flush;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server->stop();
  for (const auto& run : service.runs()) {
    auto st = service.state(run);
    std::cout << fmt::format("{}: {} signal(s), state={}\n", run, st->log.size(), st->label);
  }
  std::cout << fmt::format("duplicates={}\n", service.duplicates());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"envdt: environment model simulator for digital twin testing"};
  app.require_subcommand(1);

  std::uint64_t seed = env_seed();
  fs::path model_path;
  std::optional<fs::path> out;
  std::vector<std::string> params;

  auto* validate = app.add_subcommand("validate", "check a model file");
  validate->add_option("model", model_path, "model file")->required();

  bool census_json = false;
  auto* census = app.add_subcommand("census", "count model elements");
  census->add_option("model", model_path, "model file")->required();
  census->add_flag("--json", census_json, "emit JSON");

  auto* inst = app.add_subcommand("instantiate", "generate an instance model");
  inst->add_option("model", model_path, "model file")->required();
  inst->add_option("--seed", seed, "random seed");
  inst->add_option("--param", params, "name=value override");
  inst->add_option("--out", out, "output JSONL file");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run one simulation");
  simulate->add_option("model", sim.model, "model file")->required();
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--dist", sim.dist, "distribution, e.g. exponential or gamma(k=2,theta=1)");
  simulate->add_flag("--once-only", sim.once_only, "visit each state and transition at most once");
  simulate->add_option("--max-steps", sim.max_steps, "step bound")->check(CLI::NonNegativeNumber);
  simulate->add_option("--twin", sim.twin, "inproc or tcp://host:port");
  simulate->add_option("--trace", sim.trace, "trace output file");
  simulate->add_option("--param", sim.params, "name=value override");
  simulate->add_option("--run-id", sim.run_id, "run identifier");
  simulate->add_option("--scheduler", sim.scheduler, "deterministic or parallel")
      ->check(CLI::IsMember({"deterministic", "parallel"}));
  simulate->add_option("--wait", sim.wait, "skip, real or scaled:<factor>");

  fs::path plan_path;
  std::optional<int> limit;
  auto* experiment = app.add_subcommand("experiment", "run an experiment plan");
  experiment->add_option("plan", plan_path, "YAML plan file")->required();
  auto* exp_seed = experiment->add_option("--seed", seed, "base seed");
  experiment->add_option("--out", out, "output directory");
  experiment->add_option("--limit", limit, "execute at most this many new runs")->check(CLI::NonNegativeNumber);

  fs::path report_dir;
  auto* report = app.add_subcommand("report", "rebuild CSV tables from run summaries");
  report->add_option("dir", report_dir, "experiment output directory")->required();
  report->add_option("--out", out, "table output directory");

  int port = 0;
  auto* twin = app.add_subcommand("twin-stub", "serve the twin stub over TCP");
  twin->add_option("--listen", port, "TCP port")->required()->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kSemantic;
  }

  try {
    if (*validate) return cmd_validate(model_path);
    if (*census) return cmd_census(model_path, census_json);
    if (*inst) return cmd_instantiate(model_path, seed, params, out);
    if (*simulate) {
      sim.seed = seed;
      return cmd_simulate(sim);
    }
    if (*experiment) return cmd_experiment(plan_path, out, limit, seed, exp_seed->count() > 0);
    if (*report) return cmd_report(report_dir, out);
    if (*twin) return cmd_twin_stub(port);
  } catch (const ModelLoadError& e) {
    for (const auto& err : e.errors()) std::cerr << err.format() << '\n';
    if (e.errors().empty()) std::cerr << "error: " << e.what() << '\n';
    return e.io_failure() ? kIo : kSemantic;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const EndpointUnavailable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::system_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSemantic;
  }
  return kOk;
}
