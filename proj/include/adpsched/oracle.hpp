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


// Dynamic-programming solvers for the scheduling MDP on a backlog grid.
//
// The model is known here: arrivals follow a finite pmf and the channel a
// Markov matrix. Values are kept both for normal states (x, h) and for
// post-decision states (x~, h); the two are tied together by
//
//   J(x, h)  = max_y  u(x, y) - lambda c(h, y) + alpha V(x - y, h)
//   V(x~, h) = E[ J(min(x~ + a, B), h') - kappa (x~ + a - B)^+ ]
//
// where kappa is the overflow penalty of the reward model.

#ifndef ADPSCHED_ORACLE_HPP_
#define ADPSCHED_ORACLE_HPP_

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "adpsched/env.hpp"
#include "adpsched/learner.hpp"
#include "adpsched/pwl.hpp"
#include "adpsched/scheduler.hpp"

namespace adpsched::oracle {

struct DiscreteMdp {
  double buffer_capacity = 8.0;
  double grid_step = 1.0;
  env::Matrix channel_transition;
  // (amount, probability); amounts are multiples of grid_step.
  std::vector<std::pair<double, double>> arrival_pmf;
  double lambda = 0.0;
  double alpha = 0.9;
  env::RewardModel reward;

  // Builds the MDP of a single-queue environment. The channel must be FSMC
  // or IID.
  static DiscreteMdp FromEnvironment(const env::EnvironmentSpec& spec,
                                     env::RewardModel reward, double lambda,
                                     double grid_step);

  std::size_t grid_size() const;
  std::size_t channels() const { return channel_transition.size(); }
  double grid_point(std::size_t i) const {
    return static_cast<double>(i) * grid_step;
  }
  // Index of a grid point; throws std::invalid_argument if x is off-grid.
  std::size_t GridIndex(double x) const;
  DiscreteMdp WithLambda(double lambda) const;
  void Validate() const;
};

// Values indexed by (grid point, channel state).
class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(std::size_t grid_size, std::size_t channels, double fill = 0.0);

  std::size_t grid_size() const { return grid_size_; }
  std::size_t channels() const { return channels_; }
  double& at(std::size_t i, std::size_t h) { return data_[h * grid_size_ + i]; }
  double at(std::size_t i, std::size_t h) const {
    return data_[h * grid_size_ + i];
  }
  // The slice of one channel state, ordered by backlog.
  std::vector<double> Column(std::size_t h) const;

  double SupDistance(const ValueTable& other) const;
  double Range() const;

 private:
  std::size_t grid_size_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

// Actions (in data units) per normal state.
using Policy = ValueTable;

struct StartState {
  double backlog = 0.0;
  int channel = 0;
};

// Zero backlog and the most likely channel state.
StartState DefaultStartState(const DiscreteMdp& mdp);

// One synchronous sweep of the normal-state Bellman operator, maximizing by
// enumeration of the action grid.
ValueTable bellman_normal_iterate(const DiscreteMdp& mdp, const ValueTable& j);

// J and its greedy policy from a post-decision table (ties: largest action).
std::pair<ValueTable, Policy> normal_from_post(const DiscreteMdp& mdp,
                                               const ValueTable& v);

// The post-decision operator on a table. Throws ConcavityError if a channel
// slice of v is not concave.
ValueTable pd_operator_T(const DiscreteMdp& mdp, const ValueTable& v);

// A_delta composed with the post-decision operator, one PWL per channel.
// The inner maximization runs foresighted_optimize on the action grid.
std::vector<pwl::PwlConcave> pd_operator_T(
    const DiscreteMdp& mdp, const std::vector<pwl::PwlConcave>& v,
    double delta);

struct SolveOptions {
  double tol = 1e-8;
  std::size_t max_iters = 100000;
};

struct ExactSolution {
  ValueTable post_values;    // V*
  ValueTable normal_values;  // J*
  Policy policy;
  std::size_t iterations = 0;
  bool converged = false;
};

ExactSolution solve_exact(const DiscreteMdp& mdp, const SolveOptions& options);

// Value iteration directly on J; used to cross-check solve_exact.
ExactSolution solve_normal(const DiscreteMdp& mdp, const SolveOptions& options);

struct ApproxSolution {
  std::vector<pwl::PwlConcave> values;
  std::size_t iterations = 0;
  bool converged = false;
};

// Iterates V <- A_delta T V from `start` (zero by default).
ApproxSolution solve_approx(
    const DiscreteMdp& mdp, double delta, const SolveOptions& options,
    const std::optional<std::vector<pwl::PwlConcave>>& start = std::nullopt);

// Samples PWL value functions on the grid.
ValueTable Tabulate(const DiscreteMdp& mdp,
                    const std::vector<pwl::PwlConcave>& values);

// Greedy policy of a post-decision table (ties: largest action).
Policy greedy_policy(const DiscreteMdp& mdp, const ValueTable& v);

// Discounted utility and cost of a stationary policy from every normal
// state. Utility includes the overflow penalty.
struct PolicyValues {
  ValueTable utility;
  ValueTable cost;
  std::size_t iterations = 0;

  double Lagrangian(std::size_t i, std::size_t h, double lambda) const {
    return utility.at(i, h) - lambda * cost.at(i, h);
  }
};

PolicyValues evaluate_policy(const DiscreteMdp& mdp, const Policy& policy,
                             const SolveOptions& options);

double policy_cost(const DiscreteMdp& mdp, const Policy& policy,
                   const StartState& s0, const SolveOptions& options);

struct LagrangeOptions {
  learner::StepSchedule gamma = learner::StepSchedule::Harmonic(1.0);
  double tol = 1e-3;
  std::size_t max_iters = 200;
  // Bisection steps on the final bracket when the subgradient iteration
  // does not settle.
  std::size_t refine_iters = 60;
  SolveOptions solve;
};

struct LagrangeStep {
  double lambda = 0.0;
  double cost = 0.0;
  double utility = 0.0;
};

struct LagrangeResult {
  double lambda = 0.0;
  bool converged = false;
  // Lambdas whose policies over- and under-spend the budget.
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  // The returned policy uses `policy` with probability mix_weight and
  // `alternate` otherwise, drawn once at the start of a trajectory.
  Policy policy;
  Policy alternate;
  double mix_weight = 1.0;
  double cost = 0.0;
  double utility = 0.0;
  std::vector<LagrangeStep> trace;
};

// lambda <- max(lambda + gamma_n (C(lambda) - budget), 0), followed by
// bisection and a two-policy mixture when the cost curve jumps over the
// budget.
LagrangeResult lagrange_search(const DiscreteMdp& mdp, double budget,
                               const StartState& s0,
                               const LagrangeOptions& options);

// Plays a fixed grid policy in the simulator.
class PolicyScheduler final : public Scheduler {
 public:
  PolicyScheduler(const DiscreteMdp& mdp, Policy policy, double lambda);

  double Decide(double backlog, int channel) override;
  void Observe(double, int, double) override {}
  double lambda() const override { return lambda_; }
  WorkCounters counters() const override { return counters_; }

 private:
  double grid_step_;
  Policy policy_;
  double lambda_;
  WorkCounters counters_;
};

}  // namespace adpsched::oracle

#endif  // ADPSCHED_ORACLE_HPP_
