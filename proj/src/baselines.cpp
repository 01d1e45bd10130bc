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

#include "adpsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adpsched/errors.hpp"

namespace adpsched::baselines {
namespace {

std::size_t GridSteps(double backlog, double step) {
  return static_cast<std::size_t>(std::floor(backlog / step + 1e-9));
}

}  // namespace

double stability_step(double backlog, int channel, double lambda,
                      const env::EnergyCost& cost, double action_step) {
  if (!(action_step > 0.0)) {
    throw std::invalid_argument("action step must be positive");
  }
  const double x = std::max(backlog, 0.0);
  const std::size_t top = GridSteps(x, action_step);
  double best = std::numeric_limits<double>::infinity();
  double best_y = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    const double y = std::min(static_cast<double>(k) * action_step, x);
    const double value =
        lambda * cost(channel, y) + (x - y) * (x - y) - x * x;
    if (value <= best + 1e-12 * (1.0 + std::abs(best))) {
      best = std::min(best, value);
      best_y = y;
    }
  }
  return best_y;
}

void StabilityOptions::Validate() const {
  if (!(action_step > 0.0)) throw ConfigError("must be positive", "action_step");
  if (mode == LambdaMode::kVirtual) {
    if (!(v_param > 0.0)) throw ConfigError("must be positive", "V_param");
    if (!(cost_budget > 0.0)) {
      throw ConfigError("the virtual queue needs a positive budget", "cbar");
    }
  } else if (!(lambda >= 0.0)) {
    throw ConfigError("must be >= 0", "lambda");
  }
}

StabilityScheduler::StabilityScheduler(env::EnergyCost cost, double alpha,
                                       StabilityOptions options)
    : cost_(std::move(cost)),
      per_slot_budget_((1.0 - alpha) * options.cost_budget),
      options_(options) {
  options_.Validate();
}

double StabilityScheduler::lambda() const {
  return options_.mode == LambdaMode::kVirtual ? queue_ / options_.v_param
                                               : options_.lambda;
}

double StabilityScheduler::Decide(double backlog, int channel) {
  ++counters_.slots;
  return stability_step(backlog, channel, lambda(), cost_,
                        options_.action_step);
}

void StabilityScheduler::Observe(double /*arrival*/, int /*next_channel*/,
                                 double energy) {
  if (options_.mode == LambdaMode::kVirtual) {
    queue_ = std::max(queue_ + energy - per_slot_budget_, 0.0);
  }
}

void QLearningOptions::Validate() const {
  if (!(epsilon0 >= 0.0)) throw ConfigError("must be >= 0", "epsilon0");
  if (!(lambda >= 0.0)) throw ConfigError("must be >= 0", "lambda");
  if (lambda_window < 1) throw ConfigError("must be >= 1", "lambda_window");
  if (adapt_lambda && !(cost_budget > 0.0)) {
    throw ConfigError("adaptive lambda needs a positive budget", "cbar");
  }
}

QLearningScheduler::QLearningScheduler(const env::SystemParams& params,
                                       env::RewardModel reward,
                                       std::size_t channels,
                                       QLearningOptions options)
    : params_(params),
      reward_(std::move(reward)),
      channels_(channels),
      grid_(GridSteps(params.buffer_capacity, 1.0) + 1),
      options_(std::move(options)),
      rng_(env::MakeRng(options_.seed, 0x51)),
      table_(grid_ * channels_ * grid_, 0.0),
      visits_(table_.size(), 0),
      lambda_(options_.lambda) {
  params_.Validate();
  options_.Validate();
  if (channels_ == 0 || reward_.cost.channels() != channels_) {
    throw ConfigError("cost must cover every channel state", "channel");
  }
}

std::size_t QLearningScheduler::Entry(std::size_t i, std::size_t h,
                                      std::size_t k) const {
  return (h * grid_ + i) * grid_ + k;
}

double QLearningScheduler::q(std::size_t backlog, std::size_t channel,
                             std::size_t action) const {
  if (action > backlog) throw InvalidActionError("action exceeds backlog");
  return table_.at(Entry(backlog, channel, action));
}

double QLearningScheduler::exploration_rate() const {
  const double t = static_cast<double>(std::max<std::size_t>(t_, 1));
  return std::min(1.0, options_.epsilon0 / std::sqrt(t));
}

std::size_t QLearningScheduler::GreedyAction(std::size_t i,
                                             std::size_t h) const {
  std::size_t best = 0;
  double best_value = table_[Entry(i, h, 0)];
  for (std::size_t k = 1; k <= i; ++k) {
    const double v = table_[Entry(i, h, k)];
    if (v >= best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

double QLearningScheduler::MaxQ(std::size_t i, std::size_t h) const {
  return table_[Entry(i, h, GreedyAction(i, h))];
}

oracle::Policy QLearningScheduler::GreedyPolicy() const {
  oracle::Policy policy(grid_, channels_);
  for (std::size_t h = 0; h < channels_; ++h) {
    for (std::size_t i = 0; i < grid_; ++i) {
      policy.at(i, h) = static_cast<double>(GreedyAction(i, h));
    }
  }
  return policy;
}

double QLearningScheduler::Decide(double backlog, int channel) {
  ++t_;
  ++counters_.slots;
  const double rounded = std::round(backlog);
  if (std::abs(backlog - rounded) > 1e-9 || rounded < 0.0 ||
      rounded >= static_cast<double>(grid_)) {
    std::ostringstream msg;
    msg << "Q-learning needs integer backlogs, got " << backlog;
    throw std::invalid_argument(msg.str());
  }
  const auto i = static_cast<std::size_t>(rounded);
  const auto h = static_cast<std::size_t>(channel);
  std::size_t k;
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
      exploration_rate()) {
    k = std::uniform_int_distribution<std::size_t>(0, i)(rng_);
  } else {
    k = GreedyAction(i, h);
  }
  state_i_ = i;
  state_h_ = h;
  action_k_ = k;
  const double y = static_cast<double>(k);
  reward_now_ = reward_.utility(rounded, y) - lambda_ * reward_.cost(channel, y);
  pending_ = true;
  return y;
}

void QLearningScheduler::Observe(double arrival, int next_channel,
                                 double energy) {
  if (pending_) {
    const double raw =
        static_cast<double>(state_i_ - action_k_) + std::round(arrival);
    const double capped = std::min(raw, static_cast<double>(grid_ - 1));
    const double dropped = raw - capped;
    const double target =
        reward_now_ +
        params_.alpha * (MaxQ(static_cast<std::size_t>(capped),
                               static_cast<std::size_t>(next_channel)) -
                         reward_.overflow_penalty * dropped);
    const std::size_t e = Entry(state_i_, state_h_, action_k_);
    const double beta = std::clamp(options_.beta(++visits_[e]), 0.0, 1.0);
    table_[e] = (1.0 - beta) * table_[e] + beta * target;
    last_entry_ = e;
    ++counters_.updates;
    ++counters_.evaluations;
    pending_ = false;
  }
  if (!options_.adapt_lambda) return;
  window_cost_ += energy;
  if (++window_slots_ == options_.lambda_window) {
    ++windows_;
    const double per_slot_budget = (1.0 - params_.alpha) * options_.cost_budget;
    const double average = window_cost_ / static_cast<double>(window_slots_);
    lambda_ = std::max(
        lambda_ + options_.gamma(windows_) * (average - per_slot_budget), 0.0);
    window_cost_ = 0.0;
    window_slots_ = 0;
  }
}

}  // namespace adpsched::baselines
