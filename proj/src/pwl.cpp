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

#include "adpsched/pwl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "adpsched/errors.hpp"

namespace adpsched::pwl {
namespace {

double SegmentSlope(const Breakpoint& l, const Breakpoint& r) {
  return (r.v - l.v) / (r.x - l.x);
}

// Certified gap of interval i of a concave point sequence.
double IntervalGap(std::span<const Breakpoint> p, std::size_t i) {
  const std::size_t n = p.size();
  if (n == 2) return std::abs(p[1].v - p[0].v);
  const double width = p[i + 1].x - p[i].x;
  const double k = SegmentSlope(p[i], p[i + 1]);
  if (i == 0) {
    return std::abs(width * (k - SegmentSlope(p[1], p[2])));
  }
  if (i == n - 2) {
    return std::abs(width * (SegmentSlope(p[n - 3], p[n - 2]) - k));
  }
  // The neighbouring chords meet above this interval at height
  // width * a * b / (a + b) over the chord.
  const double a = SegmentSlope(p[i - 1], p[i]) - k;
  const double b = k - SegmentSlope(p[i + 1], p[i + 2]);
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return width * a * b / (a + b);
}

double ValueTolerance(double scale) { return 1e-9 * (1.0 + scale); }

// Upper concave hull of points sorted by x. Collinear points are dropped.
std::vector<Breakpoint> UpperHull(const std::vector<Breakpoint>& pts) {
  std::vector<Breakpoint> hull;
  hull.reserve(pts.size());
  for (const Breakpoint& p : pts) {
    while (hull.size() >= 2) {
      const Breakpoint& a = hull[hull.size() - 2];
      const Breakpoint& b = hull.back();
      const double cross = (b.x - a.x) * (p.v - a.v) - (b.v - a.v) * (p.x - a.x);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

// Drops interior points whose two adjacent slopes agree to 1e-12.
std::vector<Breakpoint> PruneCollinear(const std::vector<Breakpoint>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Breakpoint> out;
  out.reserve(pts.size());
  out.push_back(pts.front());
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double left = SegmentSlope(out.back(), pts[i]);
    const double right = SegmentSlope(pts[i], pts[i + 1]);
    const double scale = 1.0 + std::max(std::abs(left), std::abs(right));
    if (std::abs(left - right) > 1e-12 * scale) out.push_back(pts[i]);
  }
  out.push_back(pts.back());
  return out;
}

bool IsFiniteValue(double v) { return std::isfinite(v); }

}  // namespace

PwlConcave::PwlConcave(std::vector<Breakpoint> points)
    : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("PwlConcave needs at least two breakpoints");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].v)) {
      throw std::invalid_argument("PwlConcave breakpoints must be finite");
    }
    if (i > 0 && !(points_[i].x > points_[i - 1].x)) {
      throw std::invalid_argument(
          "PwlConcave breakpoints must have strictly increasing x");
    }
  }
  for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
    const double left = Slope(i - 1);
    const double right = Slope(i);
    const double scale = 1.0 + std::max(std::abs(left), std::abs(right));
    if (right - left > kSlopeTolerance * scale) {
      std::ostringstream msg;
      msg << "PwlConcave slopes increase at x=" << points_[i].x << " ("
          << left << " -> " << right << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

PwlConcave PwlConcave::Constant(double lower, double upper, double value) {
  return PwlConcave({{lower, value}, {upper, value}});
}

PwlConcave PwlConcave::Affine(double lower, double upper, double value_at_lower,
                              double slope) {
  return PwlConcave(
      {{lower, value_at_lower},
       {upper, value_at_lower + slope * (upper - lower)}});
}

std::size_t PwlConcave::SegmentIndex(double x) const {
  auto it = std::upper_bound(
      points_.begin(), points_.end(), x,
      [](double value, const Breakpoint& b) { return value < b.x; });
  std::size_t idx = static_cast<std::size_t>(it - points_.begin());
  idx = idx == 0 ? 0 : idx - 1;
  return std::min(idx, points_.size() - 2);
}

double PwlConcave::Eval(double x) const {
  const double lo = lower();
  const double hi = upper();
  const double slack = 1e-9 * std::max(1.0, hi - lo);
  if (!(x >= lo - slack && x <= hi + slack)) {
    std::ostringstream msg;
    msg << "PwlConcave evaluated at " << x << " outside [" << lo << ", " << hi
        << "]";
    throw DomainError(msg.str());
  }
  x = std::clamp(x, lo, hi);
  const std::size_t i = SegmentIndex(x);
  const Breakpoint& l = points_[i];
  const Breakpoint& r = points_[i + 1];
  if (x == l.x) return l.v;
  if (x == r.x) return r.v;
  return l.v + (r.v - l.v) * ((x - l.x) / (r.x - l.x));
}

double PwlConcave::Slope(std::size_t i) const {
  return SegmentSlope(points_[i], points_[i + 1]);
}

double PwlConcave::SlopeAt(double x) const { return Slope(SegmentIndex(x)); }

std::string PwlConcave::ToRow() const {
  std::string row;
  char buf[64];
  for (std::size_t i = 0; i < points_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.12g,%.12g", i == 0 ? "" : ";",
                  points_[i].x, points_[i].v);
    row += buf;
  }
  return row;
}

PwlConcave PwlConcave::FromRow(std::string_view row) {
  std::vector<Breakpoint> pts;
  auto parse = [](std::string_view text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("malformed PWL row entry '" +
                                  std::string(text) + "'");
    }
    return value;
  };
  while (!row.empty()) {
    const std::size_t semi = row.find(';');
    const std::string_view pair = row.substr(0, semi);
    const std::size_t comma = pair.find(',');
    if (comma == std::string_view::npos) {
      throw std::invalid_argument("malformed PWL row pair '" +
                                  std::string(pair) + "'");
    }
    pts.push_back({parse(pair.substr(0, comma)), parse(pair.substr(comma + 1))});
    if (semi == std::string_view::npos) break;
    row.remove_prefix(semi + 1);
  }
  return PwlConcave(std::move(pts));
}

GapReport segment_gaps(const PwlConcave& f) {
  GapReport report;
  const auto pts = f.points();
  report.per_interval_gaps.reserve(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double gap = IntervalGap(pts, i);
    report.per_interval_gaps.push_back(gap);
    if (gap > report.max_gap) {
      report.max_gap = gap;
      report.interval_index = i;
    }
  }
  return report;
}

namespace {

class Sandwich {
 public:
  Sandwich(const ScalarFunction& oracle, double lower, double upper,
           const SandwichOptions& options)
      : oracle_(oracle), lower_(lower), upper_(upper), options_(options) {
    if (!(upper > lower)) {
      throw std::invalid_argument("sandwich domain must satisfy lower < upper");
    }
    if (options.delta < 0.0 || !std::isfinite(options.delta)) {
      throw std::invalid_argument("sandwich delta must be finite and >= 0");
    }
    if (options.grid_step < 0.0) {
      throw std::invalid_argument("sandwich grid_step must be >= 0");
    }
    if (options.grid_step > 0.0) {
      const double steps = (upper - lower) / options.grid_step;
      grid_steps_ = static_cast<long>(std::llround(steps));
      if (grid_steps_ < 1 || std::abs(steps - grid_steps_) > 1e-9 * steps) {
        throw std::invalid_argument(
            "sandwich domain is not a whole number of grid steps");
      }
    } else if (options.delta == 0.0) {
      throw std::invalid_argument("delta = 0 requires a positive grid_step");
    }
    if (options.max_evals < 2) {
      throw std::invalid_argument("sandwich needs max_evals >= 2");
    }
  }

  SandwichResult Run() {
    if (options_.delta == 0.0) return RunFullGrid();

    pts_.push_back({lower_, Evaluate(lower_)});
    pts_.push_back({upper_, Evaluate(upper_)});
    gaps_.push_back(IntervalGapChecked(0));

    bool exhausted = false;
    // Two points certify nothing for a non-monotone concave function, so the
    // first bisection always happens.
    bool first = true;
    while (true) {
      const std::size_t j = WorstSplittable();
      if (j == kNone) break;
      if (!first && gaps_[j] <= options_.delta) break;
      if (evaluations_ >= options_.max_evals) {
        exhausted = true;
        break;
      }
      Split(j);
      first = false;
    }

    SandwichResult result{PwlConcave(PruneCollinear(pts_)), evaluations_, 0.0,
                          true, std::move(evaluated_)};
    for (double g : gaps_) result.max_gap = std::max(result.max_gap, g);
    result.converged = !exhausted && result.max_gap <= options_.delta;
    return result;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  double Evaluate(double x) {
    const double v = oracle_(x);
    if (!IsFiniteValue(v)) {
      std::ostringstream msg;
      msg << "oracle returned a non-finite value at x=" << x;
      throw ConcavityError(msg.str());
    }
    ++evaluations_;
    evaluated_.push_back(x);
    scale_ = std::max(scale_, std::abs(v));
    return v;
  }

  long GridIndex(double x) const {
    return std::lround((x - lower_) / options_.grid_step);
  }

  double GridPoint(long k) const {
    return k == grid_steps_ ? upper_ : lower_ + k * options_.grid_step;
  }

  bool Splittable(std::size_t i) const {
    if (options_.grid_step > 0.0) {
      return GridIndex(pts_[i + 1].x) - GridIndex(pts_[i].x) >= 2;
    }
    return pts_[i + 1].x - pts_[i].x > 1e-9 * (upper_ - lower_);
  }

  double IntervalGapChecked(std::size_t i) const {
    if (options_.grid_step > 0.0 &&
        GridIndex(pts_[i + 1].x) - GridIndex(pts_[i].x) <= 1) {
      return 0.0;  // both endpoints are the only grid points in the interval
    }
    return IntervalGap(pts_, i);
  }

  std::size_t WorstSplittable() const {
    std::size_t best = kNone;
    for (std::size_t i = 0; i < gaps_.size(); ++i) {
      if (!Splittable(i)) continue;
      if (best == kNone || gaps_[i] > gaps_[best]) best = i;
    }
    return best;
  }

  void Split(std::size_t j) {
    const Breakpoint l = pts_[j];
    const Breakpoint r = pts_[j + 1];
    double y;
    if (options_.grid_step > 0.0) {
      y = GridPoint((GridIndex(l.x) + GridIndex(r.x)) / 2);
    } else {
      y = 0.5 * (l.x + r.x);
    }
    const double vy = ClampToEnvelope(j, y, Evaluate(y));
    pts_.insert(pts_.begin() + static_cast<std::ptrdiff_t>(j) + 1, {y, vy});
    gaps_.insert(gaps_.begin() + static_cast<std::ptrdiff_t>(j) + 1, 0.0);

    const std::size_t n_int = gaps_.size();
    if (n_int <= 4) {
      for (std::size_t i = 0; i < n_int; ++i) gaps_[i] = IntervalGapChecked(i);
      return;
    }
    const std::size_t first = j == 0 ? 0 : j - 1;
    const std::size_t last = std::min(j + 2, n_int - 1);
    for (std::size_t i = first; i <= last; ++i) gaps_[i] = IntervalGapChecked(i);
  }

  // A concave function sampled inside [l, r] lies between the chord l-r and
  // the extensions of the neighbouring chords.
  double ClampToEnvelope(std::size_t j, double y, double vy) const {
    const Breakpoint& l = pts_[j];
    const Breakpoint& r = pts_[j + 1];
    const double chord = l.v + (r.v - l.v) * ((y - l.x) / (r.x - l.x));
    double upper = std::numeric_limits<double>::infinity();
    if (j >= 1) {
      const Breakpoint& ll = pts_[j - 1];
      upper = std::min(upper, l.v + SegmentSlope(ll, l) * (y - l.x));
    }
    if (j + 2 < pts_.size()) {
      const Breakpoint& rr = pts_[j + 2];
      upper = std::min(upper, r.v + SegmentSlope(r, rr) * (y - r.x));
    }
    const double tol = ValueTolerance(scale_);
    if (vy < chord - tol || vy > upper + tol) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "function is not concave near x=" << y << ": value " << vy
          << " outside [" << chord << ", " << upper << "]";
      throw ConcavityError(msg.str());
    }
    return std::clamp(vy, chord, std::max(chord, upper));
  }

  SandwichResult RunFullGrid() {
    const std::size_t count = static_cast<std::size_t>(grid_steps_) + 1;
    if (count > options_.max_evals) {
      throw std::invalid_argument(
          "full-grid evaluation exceeds the evaluation budget");
    }
    pts_.reserve(count);
    for (long k = 0; k <= grid_steps_; ++k) {
      const double x = GridPoint(k);
      pts_.push_back({x, Evaluate(x)});
    }
    const double tol = ValueTolerance(scale_);
    for (std::size_t i = 1; i + 1 < pts_.size(); ++i) {
      const Breakpoint& l = pts_[i - 1];
      const Breakpoint& m = pts_[i];
      const Breakpoint& r = pts_[i + 1];
      const double chord = l.v + (r.v - l.v) * ((m.x - l.x) / (r.x - l.x));
      if (m.v < chord - tol) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "function is not concave near x=" << m.x << ": value " << m.v
            << " below chord " << chord;
        throw ConcavityError(msg.str());
      }
    }
    std::vector<Breakpoint> hull = UpperHull(pts_);
    return SandwichResult{PwlConcave(std::move(hull)), evaluations_, 0.0, true,
                          std::move(evaluated_)};
  }

  const ScalarFunction& oracle_;
  double lower_;
  double upper_;
  SandwichOptions options_;
  long grid_steps_ = 0;
  std::size_t evaluations_ = 0;
  double scale_ = 0.0;
  std::vector<Breakpoint> pts_;
  std::vector<double> gaps_;
  std::vector<double> evaluated_;
};

}  // namespace

SandwichResult sandwich_approximate(const ScalarFunction& oracle, double lower,
                                    double upper,
                                    const SandwichOptions& options) {
  return Sandwich(oracle, lower, upper, options).Run();
}

SandwichResult blend_reapproximate(const PwlConcave& f,
                                   const ScalarFunction& g, double beta,
                                   const SandwichOptions& options) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("blend weight beta must lie in [0, 1]");
  }
  ScalarFunction blended;
  if (beta == 0.0) {
    blended = [&f](double x) { return f(x); };
  } else if (beta == 1.0) {
    blended = [&g](double x) { return g(x); };
  } else {
    blended = [&f, &g, beta](double x) {
      return (1.0 - beta) * f(x) + beta * g(x);
    };
  }
  return sandwich_approximate(blended, f.lower(), f.upper(), options);
}

}  // namespace adpsched::pwl
