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


// Comparison schedulers: Lyapunov drift-plus-penalty with a virtual cost
// queue, and tabular Q-learning that updates one state-action pair per slot.

#ifndef ADPSCHED_BASELINES_HPP_
#define ADPSCHED_BASELINES_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adpsched/env.hpp"
#include "adpsched/learner.hpp"
#include "adpsched/oracle.hpp"
#include "adpsched/scheduler.hpp"

namespace adpsched::baselines {

// argmin over y in {0, s, 2s, ...} ∩ [0, x] of
//   lambda c(h, y) + (x - y)^2 - x^2,
// ties to the largest y.
double stability_step(double backlog, int channel, double lambda,
                      const env::EnergyCost& cost, double action_step);

enum class LambdaMode { kVirtual, kFixed };

struct StabilityOptions {
  LambdaMode mode = LambdaMode::kVirtual;
  // Trade-off parameter; lambda_t = Q_t / v_param.
  double v_param = 1.0;
  // Used in fixed mode.
  double lambda = 0.0;
  // Discounted budget; the virtual queue serves (1 - alpha) * cost_budget
  // per slot.
  double cost_budget = 0.0;
  double action_step = 1.0;

  void Validate() const;
};

class StabilityScheduler final : public Scheduler {
 public:
  StabilityScheduler(env::EnergyCost cost, double alpha,
                     StabilityOptions options);

  double Decide(double backlog, int channel) override;
  void Observe(double arrival, int next_channel, double energy) override;
  double lambda() const override;
  WorkCounters counters() const override { return counters_; }

  double virtual_queue() const { return queue_; }

 private:
  env::EnergyCost cost_;
  double per_slot_budget_;
  StabilityOptions options_;
  double queue_ = 0.0;
  WorkCounters counters_;
};

struct QLearningOptions {
  double epsilon0 = 1.0;  // epsilon_t = min(1, epsilon0 / sqrt(t))
  // Indexed by the visit count of the updated state-action pair.
  learner::StepSchedule beta = learner::StepSchedule::Polynomial(1.0, 0.6);
  double lambda = 0.0;
  bool adapt_lambda = false;
  double cost_budget = 0.0;
  learner::StepSchedule gamma = learner::StepSchedule::Harmonic(1.0);
  std::size_t lambda_window = 100;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Tabular Q-learning on the unit backlog and action grids.
class QLearningScheduler final : public Scheduler {
 public:
  QLearningScheduler(const env::SystemParams& params, env::RewardModel reward,
                     std::size_t channels, QLearningOptions options);

  double Decide(double backlog, int channel) override;
  void Observe(double arrival, int next_channel, double energy) override;
  double lambda() const override { return lambda_; }
  WorkCounters counters() const override { return counters_; }

  double q(std::size_t backlog, std::size_t channel, std::size_t action) const;
  double exploration_rate() const;
  // Greedy action per grid state (ties to the largest action).
  oracle::Policy GreedyPolicy() const;
  std::size_t last_updated_entry() const { return last_entry_; }

 private:
  std::size_t Entry(std::size_t i, std::size_t h, std::size_t k) const;
  std::size_t GreedyAction(std::size_t i, std::size_t h) const;
  double MaxQ(std::size_t i, std::size_t h) const;

  env::SystemParams params_;
  env::RewardModel reward_;
  std::size_t channels_;
  std::size_t grid_;
  QLearningOptions options_;
  env::Rng rng_;
  std::vector<double> table_;
  std::vector<std::size_t> visits_;
  double lambda_;
  std::size_t t_ = 0;
  // The pending state-action pair.
  std::size_t state_i_ = 0;
  std::size_t state_h_ = 0;
  std::size_t action_k_ = 0;
  double reward_now_ = 0.0;
  bool pending_ = false;
  std::size_t last_entry_ = 0;
  std::size_t windows_ = 0;
  std::size_t window_slots_ = 0;
  double window_cost_ = 0.0;
  WorkCounters counters_;
};

}  // namespace adpsched::baselines

#endif  // ADPSCHED_BASELINES_HPP_
