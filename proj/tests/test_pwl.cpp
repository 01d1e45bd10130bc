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

#include <cmath>
#include <random>
#include <vector>

#include "adpsched/errors.hpp"
#include "adpsched/pwl.hpp"
#include "doctest.h"

using adpsched::pwl::Breakpoint;
using adpsched::pwl::PwlConcave;
using adpsched::pwl::SandwichOptions;

TEST_SUITE("pwl") {

TEST_CASE("construction rejects malformed breakpoints") {
  CHECK_THROWS_AS(PwlConcave({{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(PwlConcave({{0, 0}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(PwlConcave({{0, 0}, {1, 0}, {2, 1}}), std::invalid_argument);
  CHECK_NOTHROW(PwlConcave({{0, 0}, {1, 1}, {2, 1.5}}));
}

TEST_CASE("evaluation interpolates and is exact at breakpoints") {
  const PwlConcave f({{0, 0}, {2, 4}, {4, 5}});
  CHECK(f(0) == 0.0);
  CHECK(f(2) == 4.0);
  CHECK(f(1) == doctest::Approx(2.0));
  CHECK(f(3) == doctest::Approx(4.5));
  CHECK(f.SlopeAt(2) == doctest::Approx(0.5));
  CHECK(f.SlopeAt(4) == doctest::Approx(0.5));
  CHECK_THROWS_AS(f(4.5), adpsched::DomainError);
}

TEST_CASE("row serialization round-trips") {
  const PwlConcave f({{0, -1.25}, {3, 2.5}, {10, 3}});
  CHECK(PwlConcave::FromRow(f.ToRow()) == f);
  CHECK(f.ToRow() == "0,-1.25;3,2.5;10,3");
}

TEST_CASE("gaps of hand-computed breakpoint sets") {
  // Two points: the difference of the values.
  CHECK(adpsched::pwl::segment_gaps(PwlConcave({{0, 1}, {4, 3}})).max_gap ==
        doctest::Approx(2.0));
  // Slopes 2, 0, -2 on unit intervals. The neighbouring chords meet at
  // (1.5, 3), one above the middle chord; each boundary gap is 2.
  const auto report = adpsched::pwl::segment_gaps(
      PwlConcave({{0, 0}, {1, 2}, {2, 2}, {3, 0}}));
  REQUIRE(report.per_interval_gaps.size() == 3);
  CHECK(report.per_interval_gaps[0] == doctest::Approx(2.0));
  CHECK(report.per_interval_gaps[1] == doctest::Approx(1.0));
  CHECK(report.per_interval_gaps[2] == doctest::Approx(2.0));
  CHECK(report.interval_index == 0);
}

TEST_CASE("sandwich reproduces affine functions with one bisection") {
  const auto result = adpsched::pwl::sandwich_approximate(
      [](double x) { return 3.0 - 0.5 * x; }, 0.0, 10.0,
      SandwichOptions{0.1, 1000, 0.0});
  CHECK(result.converged);
  CHECK(result.evaluations == 3);
  CHECK(result.function.size() == 2);
}

TEST_CASE("sandwich stays below and within delta of a smooth function") {
  auto f = [](double x) { return -std::pow(x - 3.0, 2.0); };
  for (double delta : {0.01, 0.1, 1.0}) {
    const auto result = adpsched::pwl::sandwich_approximate(
        f, 0.0, 10.0, SandwichOptions{delta, 100000, 0.0});
    REQUIRE(result.converged);
    for (int k = 0; k <= 1000; ++k) {
      const double x = 0.01 * k;
      const double gap = f(x) - result.function(x);
      CHECK(gap >= -1e-9);
      CHECK(gap <= delta + 1e-9);
    }
  }
}

TEST_CASE("delta zero on a grid evaluates every grid point") {
  const auto result = adpsched::pwl::sandwich_approximate(
      [](double x) { return std::sqrt(x); }, 0.0, 20.0,
      SandwichOptions{0.0, 1000, 1.0});
  CHECK(result.evaluations == 21);
  for (int k = 0; k <= 20; ++k) {
    CHECK(result.function(k) == doctest::Approx(std::sqrt(k)).epsilon(1e-12));
  }
}

TEST_CASE("grid sandwich only samples grid points") {
  const auto result = adpsched::pwl::sandwich_approximate(
      [](double x) { return -0.1 * x * x; }, 0.0, 50.0,
      SandwichOptions{0.5, 1000, 1.0});
  for (double x : result.evaluated) CHECK(x == std::round(x));
}

TEST_CASE("evaluation budget is reported") {
  const auto result = adpsched::pwl::sandwich_approximate(
      [](double x) { return std::log1p(x); }, 0.0, 100.0,
      SandwichOptions{1e-9, 5, 0.0});
  CHECK_FALSE(result.converged);
  CHECK(result.evaluations == 5);
}

TEST_CASE("convex input is rejected") {
  CHECK_THROWS_AS(adpsched::pwl::sandwich_approximate(
                      [](double x) { return x * x; }, 0.0, 10.0,
                      SandwichOptions{0.01, 1000, 0.0}),
                  adpsched::ConcavityError);
}

TEST_CASE("blend with beta zero keeps retained breakpoints") {
  const PwlConcave f({{0, 0}, {4, 2}, {8, 3}});
  const auto result = adpsched::pwl::blend_reapproximate(
      f, [](double) -> double { throw std::logic_error("not called"); }, 0.0,
      SandwichOptions{0.01, 1000, 0.0});
  for (const Breakpoint& p : result.function.points()) {
    CHECK(p.v == doctest::Approx(f(p.x)));
  }
}

TEST_CASE("blend with beta one replaces the function") {
  const PwlConcave f = PwlConcave::Constant(0, 8, 5);
  auto g = [](double x) { return -std::abs(x - 2.0); };
  const auto result = adpsched::pwl::blend_reapproximate(
      f, g, 1.0, SandwichOptions{0.0, 1000, 1.0});
  for (int k = 0; k <= 8; ++k) CHECK(result.function(k) == doctest::Approx(g(k)));
}

TEST_CASE("blend checks beta") {
  const PwlConcave f = PwlConcave::Constant(0, 1, 0);
  CHECK_THROWS_AS(adpsched::pwl::blend_reapproximate(
                      f, [](double) { return 0.0; }, 1.5, SandwichOptions{}),
                  std::invalid_argument);
}

}  // TEST_SUITE
