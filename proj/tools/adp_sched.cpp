// Copyright 2026 The adp-sched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// adp-sched: command-line front end for solving, learning, baselines and
// parameter sweeps.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "adpsched/errors.hpp"
#include "adpsched/harness.hpp"

namespace {

namespace harness = adpsched::harness;

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void SetUpLogging() {
  auto logger = spdlog::stderr_color_mt("adp-sched");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("ADP_SCHED_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only honour real level names.
    if (parsed != spdlog::level::off || std::string(level) == "off") {
      spdlog::set_level(parsed);
    } else {
      spdlog::warn("ignoring unknown ADP_SCHED_LOG level '{}'", level);
    }
  }
}

// Output file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) {
        throw adpsched::ConfigError("cannot write '" + path + "'", "out");
      }
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::unique_ptr<std::ofstream> OpenOptional(const std::string& path,
                                            const char* what) {
  if (path.empty()) return nullptr;
  auto out = std::make_unique<std::ofstream>(path);
  if (!*out) throw adpsched::ConfigError("cannot write '" + path + "'", what);
  return out;
}

void LogRecord(const harness::MetricsRecord& m) {
  spdlog::info(
      "{}: avg queue {:.6g}, delay {:.6g} slots, power {:.6g}, lambda {:.6g}, "
      "n_delta {:.4g}, ops/slot {:.4g}",
      m.method, m.avg_queue, m.avg_delay, m.avg_power, m.lambda_final,
      m.mean_n_delta, m.ops_per_slot);
}

struct Options {
  std::string config;
  std::string out;
  std::string trace;
  std::string checkpoints;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string lambda_mode;
};

harness::ExperimentConfig Load(const Options& o) {
  harness::ExperimentConfig config = harness::LoadConfig(o.config, o.seed);
  for (const auto& w : config.warnings) spdlog::warn("{}", w);
  return config;
}

int RunSimulation(harness::ExperimentConfig config, const Options& o) {
  config.Validate();
  Sink out(o.out);
  auto trace = OpenOptional(o.trace, "trace");
  auto checkpoints = OpenOptional(o.checkpoints, "checkpoints");
  spdlog::debug("running {} for {} slots (seed {})",
                harness::ToString(config.method), config.slots, config.seed);
  const harness::MetricsRecord record =
      harness::run(config, {trace.get(), checkpoints.get()});
  LogRecord(record);
  harness::WriteCsv(out.stream(), {record});
  return 0;
}

int Dispatch(const std::string& command, const Options& o) {
  harness::ExperimentConfig config = Load(o);
  if (command == "solve") {
    const harness::SolveReport report = harness::solve(config);
    Sink out(o.out);
    harness::WriteSolveCsv(out.stream(), report);
    if (auto trace = OpenOptional(o.trace, "trace")) {
      harness::WriteSearchTrace(*trace, report);
    }
    spdlog::info("value iteration: {} sweeps, converged: {}",
                 report.solution.iterations, report.solution.converged);
    if (report.search) {
      spdlog::info("lambda* {:.9g}, cost {:.9g}, mix weight {:.6g}",
                   report.search->lambda, report.search->cost,
                   report.search->mix_weight);
    }
    if (!report.solution.converged) {
      spdlog::warn("value iteration hit max_iters before reaching tol");
    }
    return 0;
  }
  if (command == "learn") {
    config.method = harness::Method::kLearner;
    return RunSimulation(std::move(config), o);
  }
  if (command == "learn-priority") {
    config.method = harness::Method::kPriority;
    return RunSimulation(std::move(config), o);
  }
  if (command == "baseline") {
    if (!o.method.empty()) config.method = harness::ParseMethod(o.method);
    if (config.method != harness::Method::kStability &&
        config.method != harness::Method::kQLearning) {
      throw adpsched::ConfigError("baseline needs --method stability|qlearning",
                                  "scheduler.method");
    }
    if (o.lambda_mode == "virtual") {
      config.stability.mode = adpsched::baselines::LambdaMode::kVirtual;
    } else if (o.lambda_mode == "fixed") {
      config.stability.mode = adpsched::baselines::LambdaMode::kFixed;
    }
    return RunSimulation(std::move(config), o);
  }
  // sweep
  Sink out(o.out);
  const auto rows = harness::sweep(config);
  for (const auto& r : rows) {
    spdlog::info("{} = {}", r.parameter, r.value);
    LogRecord(r);
  }
  harness::WriteCsv(out.stream(), rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  SetUpLogging();
  CLI::App app{"Energy-efficient transmission scheduling: planning, online "
               "learning and baselines"};
  app.name("adp-sched");
  app.require_subcommand(1);

  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment configuration (INI)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "CSV output file (default: stdout)");
    sub->add_option("--trace", o.trace, "Per-slot trace CSV");
    sub->add_option("--seed", o.seed, "Seed override");
  };
  auto* solve = app.add_subcommand("solve", "Dynamic programming with known dynamics");
  auto* learn = app.add_subcommand("learn", "Online post-decision learning");
  auto* learn_priority =
      app.add_subcommand("learn-priority", "Online learning for prioritized queues");
  auto* baseline = app.add_subcommand("baseline", "Stability or Q-learning baseline");
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep, one CSV row per value");
  for (auto* sub : {solve, learn, learn_priority, baseline, sweep}) add_common(sub);
  for (auto* sub : {learn, learn_priority}) {
    sub->add_option("--checkpoints", o.checkpoints,
                    "Value-function checkpoints (needs run.checkpoint_every)");
  }
  baseline->add_option("--method", o.method, "stability or qlearning")
      ->check(CLI::IsMember({"stability", "qlearning"}));
  baseline->add_option("--lambda-mode", o.lambda_mode, "virtual or fixed")
      ->check(CLI::IsMember({"virtual", "fixed"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return Dispatch(command, o);
  } catch (const adpsched::ConfigError& e) {
    spdlog::error("config error in '{}': {}", e.field(), e.what());
    return kConfigError;
  } catch (const adpsched::ConcavityError& e) {
    spdlog::error("numerical assumption violated: {}", e.what());
    return kNumericalError;
  } catch (const adpsched::DomainError& e) {
    spdlog::error("numerical assumption violated: {}", e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
