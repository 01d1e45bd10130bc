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


// Online learning for N queues served in strict priority order.
//
// Queue 1 has the highest priority. Each queue keeps its own one-dimensional
// value functions V_i(., h); the joint action is built greedily in priority
// order with the energy of higher-priority transmissions added to the cost
// of lower ones. A lower queue is served only once every higher queue is
// empty, which makes (x_i - y_i) y_j = 0 hold exactly for i < j.

#ifndef ADPSCHED_PRIORITY_HPP_
#define ADPSCHED_PRIORITY_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "adpsched/env.hpp"
#include "adpsched/learner.hpp"
#include "adpsched/scheduler.hpp"

namespace adpsched::priority {

struct QueueSpec {
  env::Utility utility = env::Utility::WeightedThroughput(1.0);
  double buffer_capacity = 16.0;
};

// Queues with u_i(x, y) = w_i min(x, y). Weights must strictly decrease.
std::vector<QueueSpec> WeightedQueues(std::span<const double> weights,
                                      double buffer_capacity);

class PriorityLearner {
 public:
  PriorityLearner(std::vector<QueueSpec> queues, double alpha,
                  env::EnergyCost cost, std::size_t channels,
                  learner::LearnerOptions options);

  // Sequential foresighted actions in priority order.
  std::vector<double> Schedule(std::span<const double> backlog, int channel);

  // Drains of fresh arrivals by each queue when every queue above it held
  // only its new arrivals. Entry i is only needed for queues below i.
  std::vector<double> ComputeZStar(std::span<const double> arrivals,
                                   int channel);

  // Updates V_i(., h_old) of every queue; returns n_delta per queue.
  std::vector<std::size_t> BatchUpdate(std::span<const double> arrivals,
                                       int h_old, int h_new);

  double LambdaUpdate(double average_cost);

  std::vector<double> Decide(std::span<const double> backlog, int channel);
  void Observe(std::span<const double> arrivals, int next_channel,
               double energy);
  // Forms x_i = min(x~_i + a_i, B_i) from the learner's own post-decision
  // state, then behaves like Decide.
  std::vector<double> LearnStep(std::span<const double> arrivals, int channel);

  std::size_t queues() const { return learners_.size(); }
  const learner::Learner& queue(std::size_t i) const { return learners_.at(i); }
  learner::Learner& queue(std::size_t i) { return learners_.at(i); }
  double lambda() const { return lambda_; }
  void set_lambda(double lambda);
  WorkCounters counters() const;
  const std::vector<double>& post_backlog() const { return post_backlog_; }

 private:
  std::vector<QueueSpec> specs_;
  double alpha_;
  learner::LearnerOptions options_;
  std::vector<learner::Learner> learners_;
  double lambda_;
  std::size_t t_ = 0;
  std::size_t updates_ = 0;
  std::vector<double> post_backlog_;
  int post_channel_ = 0;
  bool pending_ = false;
  std::vector<double> pending_arrivals_;
  std::size_t windows_ = 0;
  std::size_t window_slots_ = 0;
  double window_cost_ = 0.0;
};

}  // namespace adpsched::priority

#endif  // ADPSCHED_PRIORITY_HPP_
