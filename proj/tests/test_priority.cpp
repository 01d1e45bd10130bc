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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "adpsched/env.hpp"
#include "adpsched/learner.hpp"
#include "adpsched/priority.hpp"
#include "doctest.h"
#include "fixtures.hpp"

namespace env = adpsched::env;
namespace learner = adpsched::learner;
namespace priority = adpsched::priority;

namespace {

const std::vector<double> kWeights{1.0, 0.8};

priority::PriorityLearner MakeTwoQueue(double lambda, double capacity = 16.0,
                                       learner::LearnerOptions o = {}) {
  o.lambda = lambda;
  return priority::PriorityLearner(priority::WeightedQueues(kWeights, capacity),
                                   0.95, env::EnergyCost::Exponential({0.05, 0.2}),
                                   2, o);
}

}  // namespace

TEST_SUITE("priority") {

TEST_CASE("cheap transmission drains both queues in order") {
  auto p = MakeTwoQueue(1e-9);
  const std::vector<double> x{3.0, 5.0};
  const auto y = p.Schedule(x, 1);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);
}

TEST_CASE("expensive transmission serves the high-priority queue first") {
  auto p = MakeTwoQueue(0.05);
  const std::vector<double> x{10.0, 10.0};
  const auto y = p.Schedule(x, 0);
  CHECK(y[0] < 10.0);
  CHECK(y[1] == 0.0);
  CHECK((x[0] - y[0]) * y[1] == 0.0);
}

TEST_CASE("myopic sequential schedule matches a two-dimensional grid search") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto cost = env::EnergyCost::Exponential({0.05, 0.2});
  for (int trial = 0; trial < 40; ++trial) {
    const double lambda = std::pow(10.0, -3.0 + 2.0 * unit(rng));
    auto p = MakeTwoQueue(lambda);
    const std::vector<double> x{16.0 * unit(rng), 16.0 * unit(rng)};
    const int h = static_cast<int>(rng() % 2);
    const auto y = p.Schedule(x, h);
    auto objective = [&](double y1, double y2) {
      return 1.0 * y1 + 0.8 * y2 - lambda * cost(h, y1 + y2);
    };
    // Dense grid, then a finer grid around the best cell.
    const int n = 400;
    double best = -INFINITY;
    int bi = 0;
    int bj = 0;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const double v = objective(x[0] * i / n, x[1] * j / n);
        if (v > best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    double lo1 = x[0] * std::max(bi - 1, 0) / n, hi1 = x[0] * std::min(bi + 1, n) / n;
    double lo2 = x[1] * std::max(bj - 1, 0) / n, hi2 = x[1] * std::min(bj + 1, n) / n;
    for (int round = 0; round < 4; ++round) {
      double c1 = 0, c2 = 0;
      for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
          const double y1 = lo1 + (hi1 - lo1) * i / 100;
          const double y2 = lo2 + (hi2 - lo2) * j / 100;
          const double v = objective(y1, y2);
          if (v >= best) {
            best = v;
            c1 = y1;
            c2 = y2;
          }
        }
      }
      if (c1 == 0 && c2 == 0) break;
      const double w1 = (hi1 - lo1) / 50, w2 = (hi2 - lo2) / 50;
      lo1 = std::max(0.0, c1 - w1);
      hi1 = std::min(x[0], c1 + w1);
      lo2 = std::max(0.0, c2 - w2);
      hi2 = std::min(x[1], c2 + w2);
    }
    CHECK(objective(y[0], y[1]) >= best - 1e-6);
  }
}

TEST_CASE("fresh-arrival drains") {
  auto p = MakeTwoQueue(0.0);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(p.ComputeZStar(zero, 0) == zero);
  const std::vector<double> a{2.0, 3.0};
  const auto z = p.ComputeZStar(a, 0);
  CHECK(z[0] == 2.0);
}

TEST_CASE("a single queue reproduces the single-queue learner exactly") {
  learner::LearnerOptions o;
  o.lambda = 1.0;
  o.delta = 0.1;
  env::RewardModel reward = fixtures::DeskReward(0.9);
  learner::Learner single(env::SystemParams{8.0, 0.9, 0.01}, reward, 2, o);
  priority::PriorityLearner multi({priority::QueueSpec{reward.utility, 8.0}},
                                  0.9, reward.cost, 2, o);
  std::mt19937_64 rng(3);
  int h = 0;
  double a = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const double y = single.LearnStep(a, h);
    const std::vector<double> arrivals{a};
    const auto ys = multi.LearnStep(arrivals, h);
    REQUIRE(ys[0] == y);
    a = static_cast<double>(rng() % 3);
    if (rng() % 5 == 0) h = 1 - h;
  }
  for (int c = 0; c < 2; ++c) CHECK(single.values()[c] == multi.queue(0).values()[c]);
}

TEST_CASE("full-weight update on a three-point grid") {
  learner::LearnerOptions o;
  o.lambda = 0.5;
  o.delta = 0.0;
  o.grid_step = 1.0;
  o.action_step = 1.0;
  o.beta = learner::StepSchedule::Constant(1.0);
  const auto cost = env::EnergyCost::Exponential({1.0, 1.0});
  priority::PriorityLearner p(priority::WeightedQueues(kWeights, 2.0), 0.5,
                              cost, 2, o);
  const std::vector<double> a{1.0, 1.0};
  p.BatchUpdate(a, 0, 1);
  // z1: max_{z in {0,1}} z - 0.5 (2^z - 1) -> z1 = 1 (0.5 > 0).
  // Queue 1: J1(x) = max_y y - 0.5 (2^y - 1); J1(1) = 0.5, J1(2) = 0.5.
  const auto& v1 = p.queue(0).values()[0];
  CHECK(v1(0) == doctest::Approx(0.5));
  CHECK(v1(1) == doctest::Approx(0.5));
  CHECK(v1(2) == doctest::Approx(0.5));
  // Queue 2 sees offset 1 and constant u1(1, 1) = 1:
  // J2(x) = 1 + max_y 0.8 y - 0.5 (2^(y + 1) - 1).
  auto j2 = [](int x) {
    double best = -INFINITY;
    for (int y = 0; y <= x; ++y) best = std::max(best, 1.0 + 0.8 * y - 0.5 * (std::exp2(y + 1) - 1));
    return best;
  };
  const auto& v2 = p.queue(1).values()[0];
  CHECK(v2(0) == doctest::Approx(j2(1)));
  CHECK(v2(1) == doctest::Approx(j2(2)));
  CHECK(v2(2) == doctest::Approx(j2(2)));
}

TEST_CASE("constant term never changes the lower-priority action") {
  learner::LearnerOptions o;
  o.lambda = 0.02;
  auto a = MakeTwoQueue(0.02);
  auto b = MakeTwoQueue(0.02);
  const std::vector<double> arrivals{2.0, 4.0};
  a.BatchUpdate(arrivals, 0, 1);
  b.BatchUpdate(arrivals, 0, 1);
  const std::vector<double> x{0.0, 6.0};
  CHECK(a.Schedule(x, 0) == b.Schedule(x, 0));
}

TEST_CASE("complementary slackness holds along a run") {
  auto p = MakeTwoQueue(0.02);
  std::mt19937_64 rng(8);
  std::poisson_distribution<int> pois(2.0);
  int h = 0;
  std::vector<double> a{0.0, 0.0};
  double worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> x(2);
    for (int i = 0; i < 2; ++i) x[i] = std::min(p.post_backlog()[i] + a[i], 16.0);
    const auto y = p.LearnStep(a, h);
    worst = std::max(worst, (x[0] - y[0]) * y[1]);
    for (double& v : a) v = std::min(pois(rng), 16);
    if (rng() % 4 == 0) h = 1 - h;
  }
  CHECK(worst <= 1e-6 * 16.0);
}

}  // TEST_SUITE
