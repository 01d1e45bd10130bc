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


// Small MDPs shared by the unit and acceptance tests.

#ifndef ADPSCHED_TESTS_FIXTURES_HPP_
#define ADPSCHED_TESTS_FIXTURES_HPP_

#include "adpsched/env.hpp"
#include "adpsched/oracle.hpp"

namespace fixtures {

inline adpsched::env::RewardModel DeskReward(double alpha) {
  adpsched::env::RewardModel reward{
      adpsched::env::Utility::NegativeBacklog(),
      adpsched::env::EnergyCost::Exponential({0.1, 0.3}), 0.0};
  reward.overflow_penalty =
      adpsched::env::DefaultOverflowPenalty(reward.utility, alpha);
  return reward;
}

// B = 8 on the unit grid, two channel states, arrivals 0 or 2 with equal
// probability.
inline adpsched::oracle::DiscreteMdp DeskMdp(double lambda = 1.0,
                                             double alpha = 0.9) {
  adpsched::oracle::DiscreteMdp mdp;
  mdp.buffer_capacity = 8.0;
  mdp.grid_step = 1.0;
  mdp.channel_transition = {{0.8, 0.2}, {0.3, 0.7}};
  mdp.arrival_pmf = {{0.0, 0.5}, {2.0, 0.5}};
  mdp.lambda = lambda;
  mdp.alpha = alpha;
  mdp.reward = DeskReward(alpha);
  return mdp;
}

}  // namespace fixtures

#endif  // ADPSCHED_TESTS_FIXTURES_HPP_
