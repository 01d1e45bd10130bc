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

// Concave piecewise-linear functions on a closed interval and the adaptive
// sandwich approximation operator built on them.
//
// A PwlConcave is the representation of every post-decision value function
// in this library. sandwich_approximate() builds one from point evaluations
// of a concave function, bisecting the interval with the largest certified
// gap until every gap is at most `delta`. The gap of an interval is the
// largest vertical distance between the chord through its endpoints (a lower
// bound of the function) and the upper envelope formed by extending the two
// neighbouring chords.

#ifndef ADPSCHED_PWL_HPP_
#define ADPSCHED_PWL_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adpsched::pwl {

struct Breakpoint {
  double x = 0.0;
  double v = 0.0;

  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

// Relative slack allowed on slope increases before a sequence of breakpoints
// is rejected as non-concave.
inline constexpr double kSlopeTolerance = 1e-9;

class PwlConcave {
 public:
  // Throws std::invalid_argument unless there are at least two points with
  // strictly increasing x and non-increasing slopes (up to kSlopeTolerance).
  explicit PwlConcave(std::vector<Breakpoint> points);

  static PwlConcave Constant(double lower, double upper, double value);
  static PwlConcave Affine(double lower, double upper, double value_at_lower,
                           double slope);

  // Linear interpolation. Throws DomainError outside [lower(), upper()].
  double operator()(double x) const { return Eval(x); }
  double Eval(double x) const;

  double lower() const { return points_.front().x; }
  double upper() const { return points_.back().x; }
  std::size_t size() const { return points_.size(); }
  std::span<const Breakpoint> points() const { return points_; }

  // Slope of segment i, i in [0, size() - 1).
  double Slope(std::size_t i) const;
  // Slope of the segment containing x; at a breakpoint the segment to its
  // right is used except at upper().
  double SlopeAt(double x) const;

  // "x1,v1;x2,v2;..." with 12 significant digits.
  std::string ToRow() const;
  static PwlConcave FromRow(std::string_view row);

  friend bool operator==(const PwlConcave&, const PwlConcave&) = default;

 private:
  std::size_t SegmentIndex(double x) const;

  std::vector<Breakpoint> points_;
};

struct GapReport {
  double max_gap = 0.0;
  std::size_t interval_index = 0;
  std::vector<double> per_interval_gaps;
};

// Certified gap between f and the concave function it was sampled from, per
// interval. Two points: |v2 - v1|. Boundary intervals: distance between the
// chord and the extension of its single neighbouring chord at the outer
// endpoint. Interior intervals: height of the intersection of the two
// neighbouring chords above the chord.
GapReport segment_gaps(const PwlConcave& f);

using ScalarFunction = std::function<double(double)>;

struct SandwichOptions {
  // Target gap. 0 evaluates every point of the grid instead of bisecting.
  double delta = 0.0;
  // Evaluation budget; the result is flagged non-converged when exhausted.
  std::size_t max_evals = 100000;
  // When positive, new points are restricted to lower + k * grid_step and an
  // interval one step wide is exact (its gap is 0). Required for delta == 0.
  double grid_step = 0.0;
};

struct SandwichResult {
  PwlConcave function;
  // Oracle calls made; the n_delta of an update.
  std::size_t evaluations = 0;
  double max_gap = 0.0;
  bool converged = true;
  // Abscissae in the order they were evaluated.
  std::vector<double> evaluated;
};

// Builds a PWL lower approximation of a concave function on [lower, upper]
// with certified gap <= options.delta. Throws ConcavityError when the
// evaluations contradict concavity by more than a relative 1e-9.
SandwichResult sandwich_approximate(const ScalarFunction& oracle, double lower,
                                    double upper,
                                    const SandwichOptions& options);

// Re-approximation of x -> (1 - beta) f(x) + beta g(x) over f's domain.
SandwichResult blend_reapproximate(const PwlConcave& f,
                                   const ScalarFunction& g, double beta,
                                   const SandwichOptions& options);

}  // namespace adpsched::pwl

#endif  // ADPSCHED_PWL_HPP_
