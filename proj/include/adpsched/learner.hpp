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

// Online learning of post-decision value functions with adaptive PWL
// approximation.
//
// The learner keeps one concave PWL function V(., h) per channel state. Each
// slot it solves the foresighted problem
//
//   max_{0 <= y <= x}  u(x, y) - lambda * c(h, y) + alpha * V(x - y, h)
//
// to act, and (every `period` slots) blends V(., h_prev) toward the
// realized normal-state value J(min(x~ + a, B), h) at all backlogs at once,
// re-approximating the result with the sandwich operator. Arrival and
// channel statistics are never used.

#ifndef ADPSCHED_LEARNER_HPP_
#define ADPSCHED_LEARNER_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "adpsched/env.hpp"
#include "adpsched/pwl.hpp"
#include "adpsched/scheduler.hpp"

namespace adpsched::learner {

// Pieces of the per-slot objective shared by every foresighted call.
struct Objective {
  const env::Utility& utility;
  const env::EnergyCost& cost;
  double lambda = 0.0;
  double alpha = 0.0;
  // Positive: actions restricted to multiples of action_step.
  double action_step = 0.0;
};

struct ForesightedResult {
  double action = 0.0;
  double value = 0.0;
};

// Maximizes g(y) = u(x, y) - lambda * c(h, y + cost_offset)
//                  + alpha * future(x - y)
// over 0 <= y <= x. The objective is concave, so the maximizing kink of the
// PWL term is located by bisection and the adjacent segments are searched in
// closed form (linear utility, exponential cost) or by golden section. Ties
// go to the larger action. Throws ConcavityError if a 3-point check shows g
// is not concave.
ForesightedResult foresighted_optimize(const Objective& objective,
                                       double backlog, int channel,
                                       const pwl::PwlConcave& future,
                                       double cost_offset = 0.0);

class StepSchedule {
 public:
  static StepSchedule Harmonic(double scale);                // c / n
  static StepSchedule Polynomial(double scale, double power);  // c / n^p
  static StepSchedule Constant(double value);

  // "harmonic C", "poly C P" or "const C".
  static StepSchedule Parse(std::string_view text);

  double operator()(std::size_t n) const;
  // Sum diverges, sum of squares converges.
  bool SatisfiesRobbinsMonro() const;
  std::string ToString() const;

 private:
  enum class Kind { kHarmonic, kPolynomial, kConstant };
  StepSchedule(Kind kind, double scale, double power)
      : kind_(kind), scale_(scale), power_(power) {}

  Kind kind_;
  double scale_;
  double power_;
};

struct LearnerOptions {
  double delta = 0.1;
  // Update V every `period` slots (T).
  std::size_t period = 1;
  // Sandwich grid; delta = 0 evaluates every grid point.
  double grid_step = 1.0;
  double action_step = 0.0;
  std::size_t max_evals = 100000;
  // Value step size, indexed by the number of updates of the channel slice.
  StepSchedule beta = StepSchedule::Polynomial(1.0, 0.6);
  // Multiplier step size, indexed by window.
  StepSchedule gamma = StepSchedule::Harmonic(1.0);
  double lambda = 0.0;
  bool adapt_lambda = false;
  // Discounted cost budget; the per-slot budget is (1 - alpha) * cost_budget.
  double cost_budget = 0.0;
  std::size_t lambda_window = 100;
  double initial_backlog = 0.0;
  int initial_channel = 0;

  void Validate() const;
};

// Extra terms of a batch update used by the priority learner: energy already
// committed by higher-priority queues, their (constant) utility, and whether
// this queue is blocked because a higher-priority queue was not drained.
struct UpdateContext {
  double cost_offset = 0.0;
  double constant = 0.0;
  bool blocked = false;
};

struct PostDecisionState {
  double backlog = 0.0;
  int channel = 0;
};

class Learner final : public Scheduler {
 public:
  Learner(const env::SystemParams& params, env::RewardModel reward,
          std::size_t channels, LearnerOptions options);

  // One step of the online algorithm from the learner's own post-decision
  // state: forms x = min(x~ + a, B), refreshes V(., h_prev) when the period
  // fires, then acts.
  double LearnStep(double arrival, int channel);

  // Blends V(., h_old) toward x~ -> J(min(x~ + a, B), h_new). Returns n_delta.
  std::size_t BatchUpdate(double arrival, int h_old, int h_new);
  std::size_t BatchUpdate(double arrival, int h_old, int h_new,
                          const UpdateContext& context);

  // lambda <- max(lambda + gamma_n (avg_cost - (1 - alpha) c_bar), 0).
  double LambdaUpdate(double average_cost);

  // Greedy action for a normal state under the current V.
  ForesightedResult Act(double backlog, int channel, double cost_offset = 0.0);

  double Decide(double backlog, int channel) override;
  void Observe(double arrival, int next_channel, double energy) override;
  double lambda() const override { return lambda_; }
  WorkCounters counters() const override { return counters_; }

  const std::vector<pwl::PwlConcave>& values() const { return values_; }
  void set_values(std::vector<pwl::PwlConcave> values);
  void set_lambda(double lambda) { lambda_ = lambda; }
  const PostDecisionState& post_state() const { return post_; }
  std::size_t slot() const { return t_; }
  std::size_t last_evaluations() const override { return last_evaluations_; }
  const LearnerOptions& options() const { return options_; }
  const env::RewardModel& reward() const { return reward_; }

 private:
  Objective MakeObjective() const;

  env::SystemParams params_;
  env::RewardModel reward_;
  LearnerOptions options_;
  std::vector<pwl::PwlConcave> values_;
  std::vector<std::size_t> slice_updates_;
  double lambda_;
  std::size_t t_ = 0;
  PostDecisionState post_;
  bool pending_ = false;
  double pending_arrival_ = 0.0;
  std::size_t windows_ = 0;
  std::size_t window_slots_ = 0;
  double window_cost_ = 0.0;
  std::size_t last_evaluations_ = 0;
  WorkCounters counters_;
};

}  // namespace adpsched::learner

#endif  // ADPSCHED_LEARNER_HPP_
