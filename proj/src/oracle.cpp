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

#include "adpsched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "adpsched/errors.hpp"

namespace adpsched::oracle {
namespace {

constexpr double kGridSlack = 1e-9;

bool IsGridMultiple(double value, double step) {
  const double k = value / step;
  return std::abs(k - std::round(k)) <= kGridSlack * std::max(1.0, k);
}

std::size_t StepsOf(double value, double step) {
  return static_cast<std::size_t>(std::llround(value / step));
}

// Rewards that do not depend on the value function, tabulated once.
class RewardTable {
 public:
  explicit RewardTable(const DiscreteMdp& mdp)
      : grid_(mdp.grid_size()), utility_(grid_ * grid_, 0.0) {
    for (std::size_t i = 0; i < grid_; ++i) {
      for (std::size_t k = 0; k <= i; ++k) {
        utility_[i * grid_ + k] =
            mdp.reward.utility(mdp.grid_point(i), mdp.grid_point(k));
      }
    }
    cost_.resize(mdp.channels() * grid_);
    for (std::size_t h = 0; h < mdp.channels(); ++h) {
      for (std::size_t k = 0; k < grid_; ++k) {
        cost_[h * grid_ + k] =
            mdp.reward.cost(static_cast<int>(h), mdp.grid_point(k));
      }
    }
  }

  double utility(std::size_t i, std::size_t k) const {
    return utility_[i * grid_ + k];
  }
  double cost(std::size_t h, std::size_t k) const {
    return cost_[h * grid_ + k];
  }

 private:
  std::size_t grid_;
  std::vector<double> utility_;
  std::vector<double> cost_;
};

// E[ next(min(x~ + a, B), h') - penalty (x~ + a - B)^+ | h ] for every
// post-decision grid point x~.
ValueTable ExpectPost(const DiscreteMdp& mdp, const ValueTable& next,
                      double penalty) {
  const std::size_t grid = mdp.grid_size();
  const std::size_t channels = mdp.channels();
  ValueTable averaged(grid, channels);
  for (std::size_t hn = 0; hn < channels; ++hn) {
    for (std::size_t i = 0; i < grid; ++i) {
      double sum = 0.0;
      for (const auto& [amount, p] : mdp.arrival_pmf) {
        const std::size_t raw = i + StepsOf(amount, mdp.grid_step);
        const std::size_t capped = std::min(raw, grid - 1);
        const double dropped = static_cast<double>(raw - capped) * mdp.grid_step;
        sum += p * (next.at(capped, hn) - penalty * dropped);
      }
      averaged.at(i, hn) = sum;
    }
  }
  ValueTable out(grid, channels);
  for (std::size_t h = 0; h < channels; ++h) {
    for (std::size_t hn = 0; hn < channels; ++hn) {
      const double p = mdp.channel_transition[h][hn];
      if (p == 0.0) continue;
      for (std::size_t i = 0; i < grid; ++i) {
        out.at(i, h) += p * averaged.at(i, hn);
      }
    }
  }
  return out;
}

// Maximizes over the action grid; ties go to the largest action.
std::pair<ValueTable, Policy> MaximizeNormal(const DiscreteMdp& mdp,
                                             const RewardTable& rewards,
                                             const ValueTable& v) {
  const std::size_t grid = mdp.grid_size();
  const std::size_t channels = mdp.channels();
  ValueTable j(grid, channels);
  Policy policy(grid, channels);
  for (std::size_t h = 0; h < channels; ++h) {
    for (std::size_t i = 0; i < grid; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t k = 0; k <= i; ++k) {
        const double value = rewards.utility(i, k) -
                             mdp.lambda * rewards.cost(h, k) +
                             mdp.alpha * v.at(i - k, h);
        if (value >= best - 1e-12 * (1.0 + std::abs(best))) {
          if (value > best) best = value;
          best_k = k;
        }
      }
      j.at(i, h) = best;
      policy.at(i, h) = mdp.grid_point(best_k);
    }
  }
  return {std::move(j), std::move(policy)};
}

void CheckConcaveTable(const ValueTable& v) {
  for (std::size_t h = 0; h < v.channels(); ++h) {
    for (std::size_t i = 1; i + 1 < v.grid_size(); ++i) {
      const double second = v.at(i + 1, h) - 2.0 * v.at(i, h) + v.at(i - 1, h);
      const double scale = std::max({std::abs(v.at(i - 1, h)),
                                     std::abs(v.at(i, h)),
                                     std::abs(v.at(i + 1, h)), 1.0});
      if (second > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "value table is not concave at grid index " << i
            << " of channel " << h;
        throw ConcavityError(msg.str());
      }
    }
  }
}

ValueTable PostOperator(const DiscreteMdp& mdp, const RewardTable& rewards,
                        const ValueTable& v) {
  return ExpectPost(mdp, MaximizeNormal(mdp, rewards, v).first,
                    mdp.reward.overflow_penalty);
}

}  // namespace

DiscreteMdp DiscreteMdp::FromEnvironment(const env::EnvironmentSpec& spec,
                                         env::RewardModel reward,
                                         double lambda, double grid_step) {
  spec.Validate();
  if (spec.traffic.size() != 1) {
    throw ConfigError("the planner handles a single queue", "traffic");
  }
  DiscreteMdp mdp;
  mdp.buffer_capacity = spec.params.buffer_capacity;
  mdp.grid_step = grid_step;
  mdp.channel_transition = env::TransitionMatrix(spec.channel);
  mdp.arrival_pmf = env::ArrivalPmf(spec.traffic.front());
  mdp.lambda = lambda;
  mdp.alpha = spec.params.alpha;
  mdp.reward = std::move(reward);
  mdp.Validate();
  return mdp;
}

std::size_t DiscreteMdp::grid_size() const {
  return StepsOf(buffer_capacity, grid_step) + 1;
}

std::size_t DiscreteMdp::GridIndex(double x) const {
  if (x < -kGridSlack || x > buffer_capacity * (1.0 + kGridSlack) ||
      !IsGridMultiple(x, grid_step)) {
    std::ostringstream msg;
    msg << "backlog " << x << " is not on the grid of step " << grid_step;
    throw std::invalid_argument(msg.str());
  }
  return std::min(StepsOf(std::max(x, 0.0), grid_step), grid_size() - 1);
}

DiscreteMdp DiscreteMdp::WithLambda(double new_lambda) const {
  DiscreteMdp copy = *this;
  copy.lambda = new_lambda;
  return copy;
}

void DiscreteMdp::Validate() const {
  if (!(buffer_capacity > 0.0)) {
    throw ConfigError("must be positive", "buffer_capacity");
  }
  if (!(grid_step > 0.0) || !IsGridMultiple(buffer_capacity, grid_step)) {
    throw ConfigError("must divide the buffer capacity", "grid_step");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("must lie in [0, 1)", "alpha");
  }
  if (!(lambda >= 0.0)) throw ConfigError("must be >= 0", "lambda");
  const std::size_t h = channel_transition.size();
  if (h == 0) throw ConfigError("no channel states", "channel");
  for (const auto& row : channel_transition) {
    if (row.size() != h) throw ConfigError("matrix is not square", "channel");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ConfigError("negative probability", "channel");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("rows must sum to 1", "channel");
    }
  }
  if (arrival_pmf.empty()) throw ConfigError("empty arrival pmf", "traffic");
  double total = 0.0;
  for (const auto& [amount, p] : arrival_pmf) {
    if (!(amount >= 0.0) || !IsGridMultiple(amount, grid_step)) {
      throw ConfigError("arrival amounts must be grid multiples", "traffic");
    }
    if (!(p >= 0.0)) throw ConfigError("negative probability", "traffic");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("arrival pmf must sum to 1", "traffic");
  }
  if (reward.cost.channels() != h) {
    throw ConfigError("cost must cover every channel state", "channel");
  }
  if (!(reward.overflow_penalty >= 0.0)) {
    throw ConfigError("must be >= 0", "overflow_penalty");
  }
}

ValueTable::ValueTable(std::size_t grid_size, std::size_t channels,
                       double fill)
    : grid_size_(grid_size),
      channels_(channels),
      data_(grid_size * channels, fill) {}

std::vector<double> ValueTable::Column(std::size_t h) const {
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(h * grid_size_);
  return {first, first + static_cast<std::ptrdiff_t>(grid_size_)};
}

double ValueTable::SupDistance(const ValueTable& other) const {
  if (other.grid_size_ != grid_size_ || other.channels_ != channels_) {
    throw std::invalid_argument("value tables have different shapes");
  }
  double sup = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    sup = std::max(sup, std::abs(data_[k] - other.data_[k]));
  }
  return sup;
}

double ValueTable::Range() const {
  if (data_.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
  return *hi - *lo;
}

StartState DefaultStartState(const DiscreteMdp& mdp) {
  const std::vector<double> pi =
      env::StationaryDistribution(mdp.channel_transition);
  const auto best = std::max_element(pi.begin(), pi.end());
  return {0.0, static_cast<int>(best - pi.begin())};
}

ValueTable bellman_normal_iterate(const DiscreteMdp& mdp,
                                  const ValueTable& j) {
  const RewardTable rewards(mdp);
  return MaximizeNormal(
             mdp, rewards,
             ExpectPost(mdp, j, mdp.reward.overflow_penalty))
      .first;
}

std::pair<ValueTable, Policy> normal_from_post(const DiscreteMdp& mdp,
                                               const ValueTable& v) {
  return MaximizeNormal(mdp, RewardTable(mdp), v);
}

ValueTable pd_operator_T(const DiscreteMdp& mdp, const ValueTable& v) {
  CheckConcaveTable(v);
  return PostOperator(mdp, RewardTable(mdp), v);
}

std::vector<pwl::PwlConcave> pd_operator_T(
    const DiscreteMdp& mdp, const std::vector<pwl::PwlConcave>& v,
    double delta) {
  const std::size_t grid = mdp.grid_size();
  const std::size_t channels = mdp.channels();
  if (v.size() != channels) {
    throw std::invalid_argument("need one value function per channel state");
  }
  const learner::Objective objective{mdp.reward.utility, mdp.reward.cost,
                                     mdp.lambda, mdp.alpha, mdp.grid_step};
  // J(x_i, h') on demand.
  std::vector<std::vector<double>> normal(
      channels, std::vector<double>(grid, std::numeric_limits<double>::quiet_NaN()));
  auto normal_value = [&](std::size_t i, std::size_t hn) {
    double& slot = normal[hn][i];
    if (std::isnan(slot)) {
      slot = learner::foresighted_optimize(objective, mdp.grid_point(i),
                                           static_cast<int>(hn), v[hn])
                 .value;
    }
    return slot;
  };

  std::vector<pwl::PwlConcave> out;
  out.reserve(channels);
  const pwl::SandwichOptions options{delta, std::numeric_limits<std::size_t>::max(),
                                     mdp.grid_step};
  for (std::size_t h = 0; h < channels; ++h) {
    auto expected = [&](double post) {
      const std::size_t i = mdp.GridIndex(post);
      double sum = 0.0;
      for (std::size_t hn = 0; hn < channels; ++hn) {
        const double ph = mdp.channel_transition[h][hn];
        if (ph == 0.0) continue;
        double inner = 0.0;
        for (const auto& [amount, p] : mdp.arrival_pmf) {
          const std::size_t raw = i + StepsOf(amount, mdp.grid_step);
          const std::size_t capped = std::min(raw, grid - 1);
          const double dropped =
              static_cast<double>(raw - capped) * mdp.grid_step;
          inner += p * (normal_value(capped, hn) -
                        mdp.reward.overflow_penalty * dropped);
        }
        sum += ph * inner;
      }
      return sum;
    };
    out.push_back(pwl::sandwich_approximate(expected, 0.0,
                                            mdp.buffer_capacity, options)
                      .function);
  }
  return out;
}

ExactSolution solve_exact(const DiscreteMdp& mdp, const SolveOptions& options) {
  mdp.Validate();
  if (!(options.tol > 0.0)) throw ConfigError("must be positive", "tol");
  const RewardTable rewards(mdp);
  ExactSolution solution;
  solution.post_values = ValueTable(mdp.grid_size(), mdp.channels());
  while (solution.iterations < options.max_iters) {
    ValueTable next = PostOperator(mdp, rewards, solution.post_values);
    const double change = next.SupDistance(solution.post_values);
    solution.post_values = std::move(next);
    ++solution.iterations;
    if (change < options.tol) {
      solution.converged = true;
      break;
    }
  }
  auto [j, policy] = MaximizeNormal(mdp, rewards, solution.post_values);
  solution.normal_values = std::move(j);
  solution.policy = std::move(policy);
  return solution;
}

ExactSolution solve_normal(const DiscreteMdp& mdp,
                           const SolveOptions& options) {
  mdp.Validate();
  if (!(options.tol > 0.0)) throw ConfigError("must be positive", "tol");
  const RewardTable rewards(mdp);
  ExactSolution solution;
  solution.normal_values = ValueTable(mdp.grid_size(), mdp.channels());
  while (solution.iterations < options.max_iters) {
    ValueTable next = MaximizeNormal(
        mdp, rewards,
        ExpectPost(mdp, solution.normal_values, mdp.reward.overflow_penalty))
        .first;
    const double change = next.SupDistance(solution.normal_values);
    solution.normal_values = std::move(next);
    ++solution.iterations;
    if (change < options.tol) {
      solution.converged = true;
      break;
    }
  }
  solution.post_values = ExpectPost(mdp, solution.normal_values,
                                    mdp.reward.overflow_penalty);
  solution.policy = MaximizeNormal(mdp, rewards, solution.post_values).second;
  return solution;
}

ApproxSolution solve_approx(
    const DiscreteMdp& mdp, double delta, const SolveOptions& options,
    const std::optional<std::vector<pwl::PwlConcave>>& start) {
  mdp.Validate();
  if (!(delta >= 0.0)) throw ConfigError("must be >= 0", "delta");
  if (!(options.tol > 0.0)) throw ConfigError("must be positive", "tol");
  ApproxSolution solution;
  if (start) {
    solution.values = *start;
  } else {
    solution.values.assign(
        mdp.channels(),
        pwl::PwlConcave::Constant(0.0, mdp.buffer_capacity, 0.0));
  }
  ValueTable previous = Tabulate(mdp, solution.values);
  while (solution.iterations < options.max_iters) {
    solution.values = pd_operator_T(mdp, solution.values, delta);
    ++solution.iterations;
    ValueTable current = Tabulate(mdp, solution.values);
    const double change = current.SupDistance(previous);
    previous = std::move(current);
    if (change < options.tol) {
      solution.converged = true;
      break;
    }
  }
  return solution;
}

ValueTable Tabulate(const DiscreteMdp& mdp,
                    const std::vector<pwl::PwlConcave>& values) {
  if (values.size() != mdp.channels()) {
    throw std::invalid_argument("need one value function per channel state");
  }
  ValueTable table(mdp.grid_size(), mdp.channels());
  for (std::size_t h = 0; h < mdp.channels(); ++h) {
    for (std::size_t i = 0; i < mdp.grid_size(); ++i) {
      table.at(i, h) = values[h](mdp.grid_point(i));
    }
  }
  return table;
}

Policy greedy_policy(const DiscreteMdp& mdp, const ValueTable& v) {
  return MaximizeNormal(mdp, RewardTable(mdp), v).second;
}

PolicyValues evaluate_policy(const DiscreteMdp& mdp, const Policy& policy,
                             const SolveOptions& options) {
  mdp.Validate();
  const std::size_t grid = mdp.grid_size();
  const std::size_t channels = mdp.channels();
  if (policy.grid_size() != grid || policy.channels() != channels) {
    throw std::invalid_argument("policy does not match the MDP grid");
  }
  const RewardTable rewards(mdp);
  std::vector<std::size_t> action(grid * channels);
  for (std::size_t h = 0; h < channels; ++h) {
    for (std::size_t i = 0; i < grid; ++i) {
      const std::size_t k = mdp.GridIndex(policy.at(i, h));
      if (k > i) throw InvalidActionError("policy transmits more than x");
      action[h * grid + i] = k;
    }
  }
  PolicyValues values{ValueTable(grid, channels), ValueTable(grid, channels),
                      0};
  while (values.iterations < options.max_iters) {
    const ValueTable next_u =
        ExpectPost(mdp, values.utility, mdp.reward.overflow_penalty);
    const ValueTable next_c = ExpectPost(mdp, values.cost, 0.0);
    ValueTable u(grid, channels);
    ValueTable c(grid, channels);
    for (std::size_t h = 0; h < channels; ++h) {
      for (std::size_t i = 0; i < grid; ++i) {
        const std::size_t k = action[h * grid + i];
        u.at(i, h) = rewards.utility(i, k) + mdp.alpha * next_u.at(i - k, h);
        c.at(i, h) = rewards.cost(h, k) + mdp.alpha * next_c.at(i - k, h);
      }
    }
    const double change = std::max(u.SupDistance(values.utility),
                                   c.SupDistance(values.cost));
    values.utility = std::move(u);
    values.cost = std::move(c);
    ++values.iterations;
    if (change < options.tol) break;
  }
  return values;
}

double policy_cost(const DiscreteMdp& mdp, const Policy& policy,
                   const StartState& s0, const SolveOptions& options) {
  const PolicyValues values = evaluate_policy(mdp, policy, options);
  return values.cost.at(mdp.GridIndex(s0.backlog),
                        static_cast<std::size_t>(s0.channel));
}

LagrangeResult lagrange_search(const DiscreteMdp& mdp, double budget,
                               const StartState& s0,
                               const LagrangeOptions& options) {
  if (!(budget > 0.0)) throw ConfigError("must be positive", "cbar");
  mdp.Validate();
  const std::size_t i0 = mdp.GridIndex(s0.backlog);
  if (s0.channel < 0 || static_cast<std::size_t>(s0.channel) >= mdp.channels()) {
    throw ConfigError("start channel out of range", "s0_channel");
  }
  const auto h0 = static_cast<std::size_t>(s0.channel);

  struct Point {
    double lambda;
    double cost;
    double utility;
    Policy policy;
  };
  LagrangeResult result;
  auto evaluate = [&](double lambda) {
    ExactSolution solution =
        solve_exact(mdp.WithLambda(lambda), options.solve);
    const PolicyValues values =
        evaluate_policy(mdp, solution.policy, options.solve);
    Point point{lambda, values.cost.at(i0, h0), values.utility.at(i0, h0),
                std::move(solution.policy)};
    result.trace.push_back({lambda, point.cost, point.utility});
    return point;
  };
  auto finish = [&](Point point, bool converged) {
    result.lambda = point.lambda;
    result.converged = converged;
    result.bracket_low = result.bracket_high = point.lambda;
    result.cost = point.cost;
    result.utility = point.utility;
    result.alternate = point.policy;
    result.policy = std::move(point.policy);
    result.mix_weight = 1.0;
    return result;
  };

  std::optional<Point> over;   // largest lambda seen with C > budget
  std::optional<Point> under;  // smallest lambda seen with C < budget
  auto record = [&](Point& point) {
    if (point.cost > budget) {
      if (!over || point.lambda > over->lambda) over = point;
    } else if (!under || point.lambda < under->lambda) {
      under = point;
    }
  };

  double lambda = mdp.lambda;
  for (std::size_t n = 1; n <= options.max_iters; ++n) {
    Point point = evaluate(lambda);
    if (std::abs(point.cost - budget) <= options.tol) {
      return finish(std::move(point), true);
    }
    if (lambda == 0.0 && point.cost < budget) {
      return finish(std::move(point), true);
    }
    record(point);
    lambda = std::max(lambda + options.gamma(n) * (point.cost - budget), 0.0);
  }

  if (!over || !under) {
    // The iteration never crossed the budget: look at the ends.
    if (!under || under->lambda > 0.0) {
      Point zero = evaluate(0.0);
      if (zero.cost <= budget + options.tol) {
        return finish(std::move(zero), true);
      }
      record(zero);
    }
    double probe = std::max({1.0, mdp.lambda, over ? over->lambda : 0.0});
    for (int k = 0; !under && k < 200; ++k, probe *= 2.0) {
      Point point = evaluate(probe);
      if (std::abs(point.cost - budget) <= options.tol) {
        return finish(std::move(point), true);
      }
      record(point);
    }
    if (!under) {
      throw ConfigError("no multiplier meets the cost budget", "cbar");
    }
  }

  for (std::size_t k = 0; k < options.refine_iters; ++k) {
    const double mid = 0.5 * (over->lambda + under->lambda);
    if (!(mid > over->lambda && mid < under->lambda)) break;
    Point point = evaluate(mid);
    if (std::abs(point.cost - budget) <= options.tol) {
      return finish(std::move(point), true);
    }
    record(point);
  }

  // C(lambda) jumps across the budget inside the bracket; both end policies
  // are Lagrangian-optimal at the jump, so mixing them meets the budget.
  const double q = (budget - under->cost) / (over->cost - under->cost);
  result.lambda = 0.5 * (over->lambda + under->lambda);
  result.converged = false;
  result.bracket_low = over->lambda;
  result.bracket_high = under->lambda;
  result.mix_weight = q;
  result.cost = q * over->cost + (1.0 - q) * under->cost;
  result.utility = q * over->utility + (1.0 - q) * under->utility;
  result.policy = std::move(over->policy);
  result.alternate = std::move(under->policy);
  return result;
}

PolicyScheduler::PolicyScheduler(const DiscreteMdp& mdp, Policy policy,
                                 double lambda)
    : grid_step_(mdp.grid_step), policy_(std::move(policy)), lambda_(lambda) {
  if (policy_.grid_size() != mdp.grid_size() ||
      policy_.channels() != mdp.channels()) {
    throw std::invalid_argument("policy does not match the MDP grid");
  }
}

double PolicyScheduler::Decide(double backlog, int channel) {
  ++counters_.slots;
  const double k = backlog / grid_step_;
  const auto i = static_cast<std::size_t>(std::llround(k));
  if (std::abs(k - std::round(k)) > 1e-6 || i >= policy_.grid_size()) {
    std::ostringstream msg;
    msg << "backlog " << backlog << " is not on the policy grid";
    throw std::invalid_argument(msg.str());
  }
  return policy_.at(i, static_cast<std::size_t>(channel));
}

}  // namespace adpsched::oracle
