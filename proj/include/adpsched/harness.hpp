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


// Experiment configuration, simulation runs, parameter sweeps and CSV
// output.
//
// Configurations are INI files with the sections [environment],
// [scheduler], [run] and [sweep]. `preset = desk` or `preset = paper` in
// [environment] fills in defaults that explicit keys override. See
// README.md for the full key list.

#ifndef ADPSCHED_HARNESS_HPP_
#define ADPSCHED_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adpsched/baselines.hpp"
#include "adpsched/env.hpp"
#include "adpsched/learner.hpp"
#include "adpsched/oracle.hpp"

namespace adpsched::harness {

enum class Method { kOracle, kLearner, kPriority, kStability, kQLearning };

std::string ToString(Method method);
Method ParseMethod(const std::string& text);

struct ExperimentConfig {
  // [environment]
  env::EnvironmentSpec environment;
  std::uint64_t seed = 0;

  // [scheduler]
  Method method = Method::kLearner;
  // "backlog": u = -(x - y); "throughput": u = y.
  std::string utility = "backlog";
  std::optional<double> overflow_penalty;
  // delta, T, grid and action steps, schedules. The multiplier fields are
  // filled from `lambda` and `cbar` when a scheduler is built.
  learner::LearnerOptions learner;
  double lambda = 0.0;
  // Discounted energy budget; when set the multiplier adapts online (or is
  // searched for, for the oracle).
  std::optional<double> cbar;
  std::vector<double> weights;
  baselines::StabilityOptions stability;
  baselines::QLearningOptions qlearning;
  oracle::SolveOptions solve;
  std::optional<oracle::StartState> start;

  // [run]
  std::size_t slots = 50000;
  double warmup_fraction = 0.2;
  std::size_t checkpoint_every = 0;

  // [sweep]
  std::string sweep_parameter;
  std::vector<std::string> sweep_values;

  // Non-fatal findings at load time, e.g. a periodic channel chain.
  std::vector<std::string> warnings;

  std::size_t queues() const { return environment.traffic.size(); }
  // Throws ConfigError naming the offending field.
  void Validate() const;
};

// A seed override satisfies the mandatory seed key.
ExperimentConfig LoadConfig(const std::string& path,
                            std::optional<std::uint64_t> seed = std::nullopt);
ExperimentConfig ParseConfig(std::istream& in,
                             std::optional<std::uint64_t> seed = std::nullopt);
ExperimentConfig ParseConfigString(
    const std::string& text, std::optional<std::uint64_t> seed = std::nullopt);

// Copy of `config` with one sweepable parameter set from text:
// delta, T, lambda, cbar, V_param or weights.
ExperimentConfig WithParameter(const ExperimentConfig& config,
                               const std::string& parameter,
                               const std::string& value);

env::RewardModel MakeReward(const ExperimentConfig& config);

struct MetricsRecord {
  std::string parameter;
  std::string value;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t slots = 0;
  double avg_queue = 0.0;
  double avg_delay = 0.0;
  double avg_power = 0.0;
  double discounted_utility = 0.0;
  double discounted_cost = 0.0;
  double lambda_final = 0.0;
  double lambda_mean = 0.0;
  double mean_n_delta = 0.0;
  double ops_per_slot = 0.0;
  // 1 + mean n_delta / T for the learner, zero for methods without PWL
  // approximations.
  double work_bound = 0.0;
  // Priority runs only.
  std::vector<double> class_queue;
  std::vector<double> class_delay;
  std::vector<double> class_utility;
  double max_slackness = 0.0;
};

struct RunOutputs {
  // Per-slot rows: t, x, h, y, energy, lambda, n_delta.
  std::ostream* trace = nullptr;
  // Value functions every checkpoint_every slots: t, queue, channel, row.
  std::ostream* checkpoints = nullptr;
};

MetricsRecord run(const ExperimentConfig& config, const RunOutputs& outputs = {});

// One row per sweep value, all with the config's seed, sorted by value.
std::vector<MetricsRecord> sweep(const ExperimentConfig& config);

void WriteCsv(std::ostream& out, const std::vector<MetricsRecord>& rows);

struct SolveReport {
  oracle::DiscreteMdp mdp;
  oracle::ExactSolution solution;
  std::optional<oracle::LagrangeResult> search;
  oracle::StartState start;
};

// Plans with known dynamics. Uses the Lagrange search when cbar is set.
SolveReport solve(const ExperimentConfig& config);

// backlog, channel, post_value, normal_value, action.
void WriteSolveCsv(std::ostream& out, const SolveReport& report);
// iteration, lambda, cost, utility.
void WriteSearchTrace(std::ostream& out, const SolveReport& report);

// 12 significant digits.
std::string FormatNumber(double value);

}  // namespace adpsched::harness

#endif  // ADPSCHED_HARNESS_HPP_
