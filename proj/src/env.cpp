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

#include "adpsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "adpsched/errors.hpp"

namespace adpsched::env {
namespace {

int SampleCategorical(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the total; return the last state with mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

void ValidateDistribution(std::span<const double> probs, const char* field) {
  if (probs.empty()) throw ConfigError("distribution is empty", field);
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ConfigError("probabilities must be finite and >= 0", field);
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << total << ", not 1";
    throw ConfigError(msg.str(), field);
  }
}

std::size_t ArgMax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

Rng MakeRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

void SystemParams::Validate() const {
  if (!(buffer_capacity > 0.0) || !std::isfinite(buffer_capacity)) {
    throw ConfigError("buffer capacity must be positive", "buffer");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("discount must lie in [0, 1)", "alpha");
  }
}

ChannelStateTable::ChannelStateTable(std::vector<double> boundaries,
                                     std::vector<double> representatives)
    : boundaries_(std::move(boundaries)),
      representatives_(std::move(representatives)) {
  if (representatives_.empty() ||
      boundaries_.size() != representatives_.size()) {
    throw ConfigError(
        "channel table needs one boundary per representative state",
        "channel_boundaries");
  }
  for (std::size_t i = 0; i < representatives_.size(); ++i) {
    const double lo = i == 0 ? 0.0 : boundaries_[i - 1];
    if (i > 0 && !(boundaries_[i] > boundaries_[i - 1])) {
      throw ConfigError("boundaries must be strictly increasing",
                        "channel_boundaries");
    }
    if (i > 0 && !(representatives_[i] > representatives_[i - 1])) {
      throw ConfigError("representatives must be strictly increasing",
                        "channel_representatives");
    }
    if (!(representatives_[i] > lo && representatives_[i] <= boundaries_[i])) {
      throw ConfigError("representative lies outside its region",
                        "channel_representatives");
    }
  }
}

ChannelStateTable ChannelStateTable::PaperDefault() {
  const double inf = std::numeric_limits<double>::infinity();
  return ChannelStateTable(
      {0.0280, 0.0580, 0.0960, 0.1400, 0.1980, 0.2780, 0.4160, inf},
      {0.0131, 0.0418, 0.0753, 0.1157, 0.1661, 0.2343, 0.3407, 0.6200});
}

double ChannelStateTable::representative(int index) const {
  return representatives_.at(static_cast<std::size_t>(index));
}

int ChannelStateTable::Quantize(double raw) const {
  auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), raw);
  if (it == boundaries_.end()) return static_cast<int>(size()) - 1;
  return static_cast<int>(it - boundaries_.begin());
}

int quantize_gain(double raw, const ChannelStateTable& table) {
  return table.Quantize(raw);
}

MovingAverageChannel MovingAverageChannel::WithMeanGain(
    std::vector<double> coefficients, double mean_gain,
    ChannelStateTable table) {
  double energy = 0.0;
  for (double c : coefficients) energy += c * c;
  if (!(energy > 0.0) || !(mean_gain > 0.0)) {
    throw ConfigError("moving-average channel needs non-zero coefficients "
                      "and a positive mean gain",
                      "ma_coefficients");
  }
  return MovingAverageChannel{std::move(coefficients),
                              std::sqrt(mean_gain / energy), std::move(table)};
}

void ValidateChannelModel(const ChannelModel& model, std::size_t states) {
  std::visit(
      [states](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FsmcChannel>) {
          if (m.transition.size() != states) {
            throw ConfigError("transition matrix must be square with one row "
                              "per channel state",
                              "channel_matrix");
          }
          for (const auto& row : m.transition) {
            if (row.size() != states) {
              throw ConfigError("transition matrix must be square",
                                "channel_matrix");
            }
            ValidateDistribution(row, "channel_matrix");
          }
        } else if constexpr (std::is_same_v<T, IidChannel>) {
          if (m.probabilities.size() != states) {
            throw ConfigError("need one probability per channel state",
                              "channel_probs");
          }
          ValidateDistribution(m.probabilities, "channel_probs");
        } else {
          if (m.coefficients.empty()) {
            throw ConfigError("moving-average order must be >= 0",
                              "ma_coefficients");
          }
          for (double c : m.coefficients) {
            if (!std::isfinite(c)) {
              throw ConfigError("coefficients must be finite",
                                "ma_coefficients");
            }
          }
          if (!(m.innovation_std > 0.0)) {
            throw ConfigError("innovation std must be positive",
                              "ma_coefficients");
          }
          if (m.table.size() != states) {
            throw ConfigError("quantizer must match the channel table",
                              "channel_boundaries");
          }
        }
      },
      model);
}

int channel_step(const ChannelModel& model, int current, Rng& rng) {
  if (const auto* fsmc = std::get_if<FsmcChannel>(&model)) {
    return SampleCategorical(
        fsmc->transition.at(static_cast<std::size_t>(current)), rng);
  }
  if (const auto* iid = std::get_if<IidChannel>(&model)) {
    return SampleCategorical(iid->probabilities, rng);
  }
  throw std::invalid_argument(
      "moving-average channels carry latent state; use ChannelProcess");
}

Matrix BirthDeathFsmc(const ChannelStateTable& table, double mean_gain,
                      double doppler_hz, double slot_length_s) {
  if (!(mean_gain > 0.0)) throw ConfigError("must be positive", "mean_gain");
  if (!(doppler_hz > 0.0)) throw ConfigError("must be positive", "doppler_hz");
  const std::size_t n = table.size();
  std::vector<double> edges(n + 1);
  edges[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) edges[k + 1] = table.boundaries()[k];

  auto tail = [mean_gain](double g) {
    return std::isinf(g) ? 0.0 : std::exp(-g / mean_gain);
  };
  auto crossings = [&](double g) {
    if (std::isinf(g) || g <= 0.0) return 0.0;
    return std::sqrt(2.0 * std::numbers::pi * g / mean_gain) * doppler_hz *
           std::exp(-g / mean_gain);
  };

  Matrix p(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double mass = tail(edges[k]) - tail(edges[k + 1]);
    if (!(mass > 0.0)) {
      throw ConfigError("channel region has zero stationary mass",
                        "channel_boundaries");
    }
    double off = 0.0;
    if (k + 1 < n) {
      p[k][k + 1] = crossings(edges[k + 1]) * slot_length_s / mass;
      off += p[k][k + 1];
    }
    if (k > 0) {
      p[k][k - 1] = crossings(edges[k]) * slot_length_s / mass;
      off += p[k][k - 1];
    }
    if (off > 1.0) {
      throw ConfigError("Doppler too high for the slot length: transition "
                        "probabilities exceed 1",
                        "doppler_hz");
    }
    p[k][k] = 1.0 - off;
  }
  return p;
}

std::vector<double> StationaryDistribution(const Matrix& transition) {
  const std::size_t n = transition.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int iter = 0; iter < 100000; ++iter) {
    // Lazy chain (P + I) / 2: same stationary law, no periodic oscillation.
    for (std::size_t j = 0; j < n; ++j) next[j] = 0.5 * pi[j];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        next[j] += 0.5 * pi[i] * transition[i][j];
      }
    }
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      change = std::max(change, std::abs(next[j] - pi[j]));
    }
    pi.swap(next);
    if (change < 1e-15) break;
  }
  return pi;
}

bool IsIrreducibleAperiodic(const Matrix& transition) {
  const std::size_t n = transition.size();
  using BoolMatrix = std::vector<std::vector<char>>;
  BoolMatrix base(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) base[i][j] = transition[i][j] > 0.0;
  }
  BoolMatrix power = base;
  // Wielandt: a primitive n x n matrix has a positive power of order at most
  // n^2 - 2n + 2.
  const std::size_t bound = n * n - 2 * n + 2;
  for (std::size_t k = 1; k <= std::max<std::size_t>(bound, 1); ++k) {
    bool positive = true;
    for (const auto& row : power) {
      for (char c : row) positive = positive && c;
    }
    if (positive) return true;
    BoolMatrix next(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        if (!power[i][m]) continue;
        for (std::size_t j = 0; j < n; ++j) next[i][j] |= base[m][j];
      }
    }
    power.swap(next);
  }
  return false;
}

Matrix TransitionMatrix(const ChannelModel& model) {
  if (const auto* fsmc = std::get_if<FsmcChannel>(&model)) {
    return fsmc->transition;
  }
  if (const auto* iid = std::get_if<IidChannel>(&model)) {
    return Matrix(iid->probabilities.size(), iid->probabilities);
  }
  throw ConfigError(
      "moving-average channels have no finite transition matrix", "channel");
}

ChannelProcess::ChannelProcess(ChannelModel model, Rng& rng)
    : model_(std::move(model)) {
  if (const auto* fsmc = std::get_if<FsmcChannel>(&model_)) {
    current_ = static_cast<int>(ArgMax(StationaryDistribution(fsmc->transition)));
  } else if (const auto* iid = std::get_if<IidChannel>(&model_)) {
    current_ = static_cast<int>(ArgMax(iid->probabilities));
  } else {
    const auto& ma = std::get<MovingAverageChannel>(model_);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = ma.innovation_std / std::numbers::sqrt2;
    for (std::size_t k = 0; k < ma.coefficients.size(); ++k) {
      innovations_.emplace_back(s * normal(rng), s * normal(rng));
    }
    current_ = SampleMovingAverage(rng);
  }
}

int ChannelProcess::SampleMovingAverage(Rng& rng) {
  const auto& ma = std::get<MovingAverageChannel>(model_);
  (void)rng;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < ma.coefficients.size(); ++k) {
    re += ma.coefficients[k] * innovations_[k].first;
    im += ma.coefficients[k] * innovations_[k].second;
  }
  return ma.table.Quantize(re * re + im * im);
}

int ChannelProcess::Step(Rng& rng) {
  if (std::holds_alternative<MovingAverageChannel>(model_)) {
    const auto& ma = std::get<MovingAverageChannel>(model_);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = ma.innovation_std / std::numbers::sqrt2;
    const double re = s * normal(rng);
    const double im = s * normal(rng);
    innovations_.emplace_front(re, im);
    innovations_.pop_back();
    current_ = SampleMovingAverage(rng);
  } else {
    current_ = channel_step(model_, current_, rng);
  }
  return current_;
}

void ValidateTrafficModel(const TrafficModel& model, double buffer_capacity) {
  std::visit(
      [buffer_capacity](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PoissonTraffic>) {
          if (!(m.rate >= 0.0) || !std::isfinite(m.rate)) {
            throw ConfigError("rate must be finite and >= 0", "arrival_rate");
          }
          if (!(m.cap >= 0.0 && m.cap <= buffer_capacity) ||
              m.cap != std::floor(m.cap)) {
            throw ConfigError("cap must be an integer in [0, B]",
                              "arrival_cap");
          }
        } else if constexpr (std::is_same_v<T, DeterministicTraffic>) {
          if (!(m.units >= 0.0 && m.units <= buffer_capacity)) {
            throw ConfigError("units must lie in [0, B]", "arrival_rate");
          }
        } else {
          std::vector<double> probs;
          for (const auto& [amount, p] : m.pmf) {
            if (!(amount >= 0.0 && amount <= buffer_capacity)) {
              throw ConfigError("amounts must lie in [0, B]", "arrival_pmf");
            }
            probs.push_back(p);
          }
          ValidateDistribution(probs, "arrival_pmf");
        }
      },
      model);
}

double arrival_sample(const TrafficModel& model, Rng& rng) {
  if (const auto* poisson = std::get_if<PoissonTraffic>(&model)) {
    if (poisson->rate == 0.0) return 0.0;
    std::poisson_distribution<long long> dist(poisson->rate);
    return std::min(static_cast<double>(dist(rng)), poisson->cap);
  }
  if (const auto* det = std::get_if<DeterministicTraffic>(&model)) {
    return det->units;
  }
  const auto& discrete = std::get<DiscreteTraffic>(model);
  std::vector<double> probs;
  probs.reserve(discrete.pmf.size());
  for (const auto& entry : discrete.pmf) probs.push_back(entry.second);
  return discrete.pmf[static_cast<std::size_t>(SampleCategorical(probs, rng))]
      .first;
}

std::vector<std::pair<double, double>> ArrivalPmf(const TrafficModel& model) {
  std::vector<std::pair<double, double>> pmf;
  if (const auto* poisson = std::get_if<PoissonTraffic>(&model)) {
    const long cap = std::lround(poisson->cap);
    if (poisson->rate == 0.0 || cap == 0) return {{0.0, 1.0}};
    double p = std::exp(-poisson->rate);
    double below = 0.0;
    for (long k = 0; k < cap; ++k) {
      pmf.emplace_back(static_cast<double>(k), p);
      below += p;
      p *= poisson->rate / static_cast<double>(k + 1);
    }
    pmf.emplace_back(static_cast<double>(cap), std::max(0.0, 1.0 - below));
  } else if (const auto* det = std::get_if<DeterministicTraffic>(&model)) {
    pmf.emplace_back(det->units, 1.0);
  } else {
    pmf = std::get<DiscreteTraffic>(model).pmf;
    std::sort(pmf.begin(), pmf.end());
  }
  return pmf;
}

double MeanArrival(const TrafficModel& model) {
  double mean = 0.0;
  for (const auto& [amount, p] : ArrivalPmf(model)) mean += amount * p;
  return mean;
}

double buffer_update(double x, double y, double a, double buffer_capacity) {
  const double tol = 1e-9 * std::max(1.0, x);
  if (y < -tol || y > x + tol) {
    std::ostringstream msg;
    msg << "transmission " << y << " outside [0, " << x << "]";
    throw InvalidActionError(msg.str());
  }
  y = std::clamp(y, 0.0, x);
  return std::min(x - y + a, buffer_capacity);
}

double energy_cost(double h_rep, double y) {
  return (std::exp2(y) - 1.0) / h_rep;
}

double utility(double x, double y) { return -(x - y); }

double priority_utility(double weight, double x, double y) {
  return weight * std::min(x, y);
}

void ValidatePriorityWeights(std::span<const double> weights) {
  if (weights.empty()) throw ConfigError("need at least one weight", "weights");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      throw ConfigError("weights must be positive", "weights");
    }
    if (i > 0 && !(weights[i] < weights[i - 1])) {
      throw ConfigError(
          "weights must be strictly decreasing in priority order", "weights");
    }
  }
}

Utility Utility::NegativeBacklog() {
  Utility u;
  u.kind_ = Kind::kNegativeBacklog;
  u.linear_slope_ = 1.0;
  u.decreasing_in_backlog_ = true;
  return u;
}

Utility Utility::WeightedThroughput(double weight) {
  Utility u;
  u.kind_ = Kind::kWeighted;
  u.weight_ = weight;
  u.linear_slope_ = weight;
  u.decreasing_in_backlog_ = false;
  return u;
}

Utility Utility::Custom(Function fn, std::optional<double> linear_slope,
                        bool decreasing_in_backlog) {
  Utility u;
  u.kind_ = Kind::kCustom;
  u.custom_ = std::move(fn);
  u.linear_slope_ = linear_slope;
  u.decreasing_in_backlog_ = decreasing_in_backlog;
  return u;
}

double Utility::operator()(double x, double y) const {
  switch (kind_) {
    case Kind::kNegativeBacklog:
      return utility(x, y);
    case Kind::kWeighted:
      return priority_utility(weight_, x, y);
    case Kind::kCustom:
      break;
  }
  return custom_(x, y);
}

EnergyCost EnergyCost::Exponential(std::vector<double> gains) {
  EnergyCost c;
  c.channels_ = gains.size();
  c.scales_.reserve(gains.size());
  for (double g : gains) {
    if (!(g > 0.0)) throw ConfigError("channel gains must be positive");
    c.scales_.push_back(1.0 / g);
  }
  return c;
}

EnergyCost EnergyCost::Custom(std::size_t channels, Function fn) {
  EnergyCost c;
  c.channels_ = channels;
  c.custom_ = std::move(fn);
  return c;
}

double EnergyCost::operator()(int channel, double y) const {
  if (channel < 0 || static_cast<std::size_t>(channel) >= channels_) {
    throw std::out_of_range("channel index out of range");
  }
  if (custom_) return custom_(channel, y);
  return scales_[static_cast<std::size_t>(channel)] * (std::exp2(y) - 1.0);
}

std::optional<double> EnergyCost::ExponentialScale(int channel) const {
  if (custom_) return std::nullopt;
  return scales_.at(static_cast<std::size_t>(channel));
}

double DefaultOverflowPenalty(const Utility& utility, double alpha) {
  return utility.DecreasingInBacklog() ? 1.0 / (1.0 - alpha) : 0.0;
}

void EnvironmentSpec::Validate() const {
  params.Validate();
  ValidateChannelModel(channel, table.size());
  if (traffic.empty()) throw ConfigError("need at least one queue", "traffic");
  for (const auto& t : traffic) ValidateTrafficModel(t, params.buffer_capacity);
}

Environment::Environment(const EnvironmentSpec& spec, std::uint64_t seed)
    : spec_((spec.Validate(), spec)),
      arrival_rng_(MakeRng(seed, 0xA11)),
      channel_rng_(MakeRng(seed, 0xC4A)),
      channel_(spec.channel, channel_rng_),
      arrivals_(spec.traffic.size(), 0.0) {}

const std::vector<double>& Environment::Advance() {
  for (std::size_t i = 0; i < spec_.traffic.size(); ++i) {
    arrivals_[i] = arrival_sample(spec_.traffic[i], arrival_rng_);
  }
  channel_.Step(channel_rng_);
  return arrivals_;
}

}  // namespace adpsched::env
