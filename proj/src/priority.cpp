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

#include "adpsched/priority.hpp"

#include <algorithm>
#include <stdexcept>

#include "adpsched/errors.hpp"

namespace adpsched::priority {

std::vector<QueueSpec> WeightedQueues(std::span<const double> weights,
                                      double buffer_capacity) {
  env::ValidatePriorityWeights(weights);
  std::vector<QueueSpec> queues;
  for (double w : weights) {
    queues.push_back({env::Utility::WeightedThroughput(w), buffer_capacity});
  }
  return queues;
}

PriorityLearner::PriorityLearner(std::vector<QueueSpec> queues, double alpha,
                                 env::EnergyCost cost, std::size_t channels,
                                 learner::LearnerOptions options)
    : specs_(std::move(queues)),
      alpha_(alpha),
      options_(std::move(options)),
      lambda_(options_.lambda),
      post_channel_(options_.initial_channel) {
  if (specs_.empty()) throw ConfigError("need at least one queue", "weights");
  options_.Validate();
  learners_.reserve(specs_.size());
  for (const QueueSpec& spec : specs_) {
    const env::SystemParams params{spec.buffer_capacity, alpha, 0.01};
    env::RewardModel reward{spec.utility, cost,
                            env::DefaultOverflowPenalty(spec.utility, alpha)};
    learner::LearnerOptions queue_options = options_;
    queue_options.adapt_lambda = false;
    queue_options.initial_backlog = 0.0;
    learners_.emplace_back(params, std::move(reward), channels,
                           std::move(queue_options));
  }
  post_backlog_.assign(specs_.size(), options_.initial_backlog);
  pending_arrivals_.assign(specs_.size(), 0.0);
}

void PriorityLearner::set_lambda(double lambda) {
  lambda_ = lambda;
  for (auto& l : learners_) l.set_lambda(lambda);
}

WorkCounters PriorityLearner::counters() const {
  WorkCounters total;
  total.slots = t_;
  total.updates = updates_;
  for (const auto& l : learners_) {
    const WorkCounters c = l.counters();
    total.foresighted_calls += c.foresighted_calls;
    total.evaluations += c.evaluations;
  }
  return total;
}

std::vector<double> PriorityLearner::Schedule(std::span<const double> backlog,
                                              int channel) {
  if (backlog.size() != learners_.size()) {
    throw std::invalid_argument("one backlog per queue expected");
  }
  std::vector<double> y(learners_.size(), 0.0);
  double offset = 0.0;
  for (std::size_t i = 0; i < learners_.size(); ++i) {
    y[i] = learners_[i].Act(backlog[i], channel, offset).action;
    if (y[i] < backlog[i]) break;  // lower queues wait
    offset += y[i];
  }
  return y;
}

std::vector<double> PriorityLearner::ComputeZStar(
    std::span<const double> arrivals, int channel) {
  if (arrivals.size() != learners_.size()) {
    throw std::invalid_argument("one arrival per queue expected");
  }
  std::vector<double> z(learners_.size(), 0.0);
  double offset = 0.0;
  // The last queue's drain never enters another queue's update.
  for (std::size_t i = 0; i + 1 < learners_.size(); ++i) {
    const double a = std::min(arrivals[i], specs_[i].buffer_capacity);
    z[i] = learners_[i].Act(a, channel, offset).action;
    if (z[i] < a) break;
    offset += z[i];
  }
  return z;
}

std::vector<std::size_t> PriorityLearner::BatchUpdate(
    std::span<const double> arrivals, int h_old, int h_new) {
  const std::vector<double> z = ComputeZStar(arrivals, h_new);
  std::vector<std::size_t> evaluations(learners_.size(), 0);
  learner::UpdateContext context;
  for (std::size_t i = 0; i < learners_.size(); ++i) {
    evaluations[i] =
        learners_[i].BatchUpdate(arrivals[i], h_old, h_new, context);
    const double a = std::min(arrivals[i], specs_[i].buffer_capacity);
    context.cost_offset += z[i];
    context.constant += specs_[i].utility(a, z[i]);
    context.blocked = context.blocked || z[i] < a;
  }
  ++updates_;
  return evaluations;
}

double PriorityLearner::LambdaUpdate(double average_cost) {
  ++windows_;
  const double per_slot_budget = (1.0 - alpha_) * options_.cost_budget;
  set_lambda(std::max(
      lambda_ + options_.gamma(windows_) * (average_cost - per_slot_budget),
      0.0));
  return lambda_;
}

std::vector<double> PriorityLearner::Decide(std::span<const double> backlog,
                                            int channel) {
  ++t_;
  if (pending_ && t_ % options_.period == 0) {
    BatchUpdate(pending_arrivals_, post_channel_, channel);
  }
  pending_ = false;
  std::vector<double> y = Schedule(backlog, channel);
  for (std::size_t i = 0; i < y.size(); ++i) {
    post_backlog_[i] = backlog[i] - y[i];
  }
  post_channel_ = channel;
  return y;
}

void PriorityLearner::Observe(std::span<const double> arrivals,
                              int /*next_channel*/, double energy) {
  pending_ = true;
  pending_arrivals_.assign(arrivals.begin(), arrivals.end());
  if (!options_.adapt_lambda) return;
  window_cost_ += energy;
  if (++window_slots_ == options_.lambda_window) {
    LambdaUpdate(window_cost_ / static_cast<double>(window_slots_));
    window_cost_ = 0.0;
    window_slots_ = 0;
  }
}

std::vector<double> PriorityLearner::LearnStep(
    std::span<const double> arrivals, int channel) {
  pending_ = true;
  pending_arrivals_.assign(arrivals.begin(), arrivals.end());
  std::vector<double> x(learners_.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::min(post_backlog_[i] + arrivals[i],
                    specs_[i].buffer_capacity);
  }
  return Decide(x, channel);
}

}  // namespace adpsched::priority
