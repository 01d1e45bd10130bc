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

#include "adpsched/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "adpsched/errors.hpp"

namespace adpsched::learner {
namespace {

// Maximum of a concave function on [a, b].
template <typename F>
double GoldenSectionMaximize(const F& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

bool Better(double value, double action, const ForesightedResult& best) {
  const double tie = 1e-12 * (1.0 + std::abs(best.value));
  if (value > best.value + tie) return true;
  return value >= best.value - tie && action > best.action;
}

}  // namespace

ForesightedResult foresighted_optimize(const Objective& objective,
                                       double backlog, int channel,
                                       const pwl::PwlConcave& future,
                                       double cost_offset) {
  const double x = std::max(backlog, 0.0);
  auto g = [&](double y) {
    return objective.utility(x, y) -
           objective.lambda * objective.cost(channel, y + cost_offset) +
           objective.alpha * future(x - y);
  };
  if (x == 0.0) return {0.0, g(0.0)};

  // Kinks of y -> future(x - y), ascending in y.
  std::vector<double> ys;
  ys.push_back(0.0);
  const auto pts = future.points();
  for (std::size_t i = pts.size(); i-- > 0;) {
    if (pts[i].x > 0.0 && pts[i].x < x) ys.push_back(x - pts[i].x);
  }
  ys.push_back(x);

  std::vector<std::optional<double>> cache(ys.size());
  auto at = [&](std::size_t j) {
    if (!cache[j]) cache[j] = g(ys[j]);
    return *cache[j];
  };

  // Last maximizer of the concave sequence g(ys[j]).
  std::size_t lo = 0;
  std::size_t hi = ys.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (at(mid + 1) >= at(mid)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  const std::size_t j = lo;
  ForesightedResult best{ys[j], at(j)};

  const std::optional<double> u_slope = objective.utility.LinearSlope();
  const std::optional<double> scale = objective.cost.ExponentialScale(channel);
  auto search_segment = [&](double a, double b) {
    if (!(b > a)) return;
    double candidate;
    if (u_slope && scale) {
      if (objective.lambda <= 0.0) return;  // linear on the segment
      // g'(y) = u_y - lambda k ln2 2^(y + offset) - alpha * slope(V).
      const double v_slope = future.SlopeAt(x - 0.5 * (a + b));
      const double numerator = *u_slope - objective.alpha * v_slope;
      if (numerator <= 0.0) return;
      candidate = std::log2(numerator / (objective.lambda * *scale *
                                         std::numbers::ln2)) -
                  cost_offset;
      if (!(candidate > a && candidate < b)) return;
    } else {
      candidate = GoldenSectionMaximize(g, a, b, 1e-9);
    }
    const double value = g(candidate);
    if (Better(value, candidate, best)) best = {candidate, value};
  };
  if (j > 0) search_segment(ys[j - 1], ys[j]);
  if (j + 1 < ys.size()) search_segment(ys[j], ys[j + 1]);

  const double g0 = at(0);
  const double gx = at(ys.size() - 1);
  const double gm = g(0.5 * x);
  const double tol = 1e-9 * (1.0 + std::max({std::abs(g0), std::abs(gx),
                                             std::abs(gm)}));
  if (gm < 0.5 * (g0 + gx) - tol) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "foresighted objective is not concave at backlog " << x
        << " (channel " << channel << ")";
    throw ConcavityError(msg.str());
  }

  if (objective.action_step > 0.0) {
    const double step = objective.action_step;
    const double top = std::floor(x / step + 1e-9) * step;
    const double below = std::min(std::floor(best.action / step) * step, top);
    const double above = std::min(below + step, top);
    ForesightedResult grid{below, g(below)};
    if (above != below) {
      const double value = g(above);
      if (Better(value, above, grid)) grid = {above, value};
    }
    return grid;
  }
  return best;
}

StepSchedule StepSchedule::Harmonic(double scale) {
  return StepSchedule(Kind::kHarmonic, scale, 1.0);
}

StepSchedule StepSchedule::Polynomial(double scale, double power) {
  return StepSchedule(Kind::kPolynomial, scale, power);
}

StepSchedule StepSchedule::Constant(double value) {
  return StepSchedule(Kind::kConstant, value, 0.0);
}

StepSchedule StepSchedule::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  double scale = 0.0;
  in >> kind >> scale;
  if (!in || !(scale > 0.0)) {
    throw ConfigError("expected '<harmonic|poly|const> <scale> [power]'",
                      std::string(text));
  }
  if (kind == "harmonic") return Harmonic(scale);
  if (kind == "const") return Constant(scale);
  if (kind == "poly") {
    double power = 0.0;
    if (!(in >> power) || !(power > 0.0)) {
      throw ConfigError("poly schedule needs a positive power",
                        std::string(text));
    }
    return Polynomial(scale, power);
  }
  throw ConfigError("unknown step schedule '" + kind + "'", std::string(text));
}

double StepSchedule::operator()(std::size_t n) const {
  const double t = static_cast<double>(std::max<std::size_t>(n, 1));
  switch (kind_) {
    case Kind::kHarmonic:
      return scale_ / t;
    case Kind::kPolynomial:
      return scale_ / std::pow(t, power_);
    case Kind::kConstant:
      break;
  }
  return scale_;
}

bool StepSchedule::SatisfiesRobbinsMonro() const {
  switch (kind_) {
    case Kind::kHarmonic:
      return true;
    case Kind::kPolynomial:
      return power_ > 0.5 && power_ <= 1.0;
    case Kind::kConstant:
      break;
  }
  return false;
}

std::string StepSchedule::ToString() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::kHarmonic:
      out << "harmonic " << scale_;
      break;
    case Kind::kPolynomial:
      out << "poly " << scale_ << " " << power_;
      break;
    case Kind::kConstant:
      out << "const " << scale_;
      break;
  }
  return out.str();
}

void LearnerOptions::Validate() const {
  if (!(delta >= 0.0)) throw ConfigError("must be >= 0", "delta");
  if (period < 1) throw ConfigError("must be >= 1", "period");
  if (grid_step < 0.0) throw ConfigError("must be >= 0", "grid_step");
  if (delta == 0.0 && grid_step <= 0.0) {
    throw ConfigError("delta = 0 needs a positive grid_step", "grid_step");
  }
  if (action_step < 0.0) throw ConfigError("must be >= 0", "action_step");
  if (!(lambda >= 0.0)) throw ConfigError("must be >= 0", "lambda");
  if (lambda_window < 1) throw ConfigError("must be >= 1", "lambda_window");
  if (adapt_lambda && !(cost_budget > 0.0)) {
    throw ConfigError("adaptive lambda needs a positive budget", "cbar");
  }
}

Learner::Learner(const env::SystemParams& params, env::RewardModel reward,
                 std::size_t channels, LearnerOptions options)
    : params_(params),
      reward_(std::move(reward)),
      options_(std::move(options)),
      values_(channels,
              pwl::PwlConcave::Constant(0.0, params.buffer_capacity, 0.0)),
      slice_updates_(channels, 0),
      lambda_(options_.lambda),
      post_{options_.initial_backlog, options_.initial_channel} {
  params_.Validate();
  options_.Validate();
  if (channels == 0 || reward_.cost.channels() != channels) {
    throw ConfigError("cost must cover every channel state", "channel");
  }
}

void Learner::set_values(std::vector<pwl::PwlConcave> values) {
  if (values.size() != values_.size()) {
    throw std::invalid_argument("need one value function per channel state");
  }
  values_ = std::move(values);
}

Objective Learner::MakeObjective() const {
  return Objective{reward_.utility, reward_.cost, lambda_, params_.alpha,
                   options_.action_step};
}

ForesightedResult Learner::Act(double backlog, int channel,
                               double cost_offset) {
  ++counters_.foresighted_calls;
  return foresighted_optimize(MakeObjective(), backlog, channel,
                              values_.at(static_cast<std::size_t>(channel)),
                              cost_offset);
}

std::size_t Learner::BatchUpdate(double arrival, int h_old, int h_new) {
  return BatchUpdate(arrival, h_old, h_new, UpdateContext{});
}

std::size_t Learner::BatchUpdate(double arrival, int h_old, int h_new,
                                 const UpdateContext& context) {
  const Objective objective = MakeObjective();
  const pwl::PwlConcave& next = values_.at(static_cast<std::size_t>(h_new));
  const double cap = params_.buffer_capacity;
  const double penalty = reward_.overflow_penalty;
  std::size_t calls = 0;
  auto realized = [&](double post_backlog) {
    ++calls;
    const double raw = post_backlog + arrival;
    const double x = std::min(raw, cap);
    double value;
    if (context.blocked) {
      value = objective.utility(x, 0.0) -
              objective.lambda * objective.cost(h_new, context.cost_offset) +
              objective.alpha * next(x);
    } else {
      value = foresighted_optimize(objective, x, h_new, next,
                                   context.cost_offset)
                  .value;
    }
    value -= penalty * std::max(raw - cap, 0.0);
    if (context.constant != 0.0) value += context.constant;
    return value;
  };
  const std::size_t slice = static_cast<std::size_t>(h_old);
  const std::size_t n = ++slice_updates_.at(slice);
  const double beta = std::clamp(options_.beta(n), 0.0, 1.0);
  pwl::SandwichOptions sandwich{options_.delta, options_.max_evals,
                                options_.grid_step};
  pwl::SandwichResult result =
      pwl::blend_reapproximate(values_[slice], realized, beta, sandwich);
  values_[slice] = std::move(result.function);
  last_evaluations_ = result.evaluations;
  ++counters_.updates;
  counters_.evaluations += result.evaluations;
  counters_.foresighted_calls += calls;
  return result.evaluations;
}

double Learner::LambdaUpdate(double average_cost) {
  ++windows_;
  const double per_slot_budget = (1.0 - params_.alpha) * options_.cost_budget;
  lambda_ = std::max(
      lambda_ + options_.gamma(windows_) * (average_cost - per_slot_budget),
      0.0);
  return lambda_;
}

double Learner::Decide(double backlog, int channel) {
  ++t_;
  ++counters_.slots;
  last_evaluations_ = 0;
  if (pending_ && t_ % options_.period == 0) {
    BatchUpdate(pending_arrival_, post_.channel, channel);
  }
  pending_ = false;
  const ForesightedResult decision = Act(backlog, channel);
  post_ = {backlog - decision.action, channel};
  return decision.action;
}

void Learner::Observe(double arrival, int /*next_channel*/, double energy) {
  pending_ = true;
  pending_arrival_ = arrival;
  if (!options_.adapt_lambda) return;
  window_cost_ += energy;
  if (++window_slots_ == options_.lambda_window) {
    LambdaUpdate(window_cost_ / static_cast<double>(window_slots_));
    window_cost_ = 0.0;
    window_slots_ = 0;
  }
}

double Learner::LearnStep(double arrival, int channel) {
  pending_ = true;
  pending_arrival_ = arrival;
  const double x =
      std::min(post_.backlog + arrival, params_.buffer_capacity);
  return Decide(x, channel);
}

}  // namespace adpsched::learner
