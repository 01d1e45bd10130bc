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

// Simulated transmission environment: buffer dynamics, channel processes,
// traffic arrivals, and the utility / energy functions.
//
// Quantities are in abstract units per slot. Channel states are indices into
// a ChannelStateTable whose representatives are normalized gains h^2/sigma^2.

#ifndef ADPSCHED_ENV_HPP_
#define ADPSCHED_ENV_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace adpsched::env {

using Rng = std::mt19937_64;
using Matrix = std::vector<std::vector<double>>;

struct SystemParams {
  double buffer_capacity = 16.0;
  double alpha = 0.95;
  double slot_length_s = 0.01;  // metadata only

  void Validate() const;
};

class ChannelStateTable {
 public:
  // boundaries[i] is the upper edge of region i; the last may be +inf.
  ChannelStateTable(std::vector<double> boundaries,
                    std::vector<double> representatives);

  // Eight regions with representatives 0.0131 ... 0.6200.
  static ChannelStateTable PaperDefault();

  std::size_t size() const { return representatives_.size(); }
  std::span<const double> boundaries() const { return boundaries_; }
  std::span<const double> representatives() const { return representatives_; }
  double representative(int index) const;

  // Index of the half-open region (lo, hi] containing raw.
  int Quantize(double raw) const;

 private:
  std::vector<double> boundaries_;
  std::vector<double> representatives_;
};

int quantize_gain(double raw, const ChannelStateTable& table);

struct FsmcChannel {
  Matrix transition;
};

struct IidChannel {
  std::vector<double> probabilities;
};

// Gain = |sum_k coefficients[k] * w_{t-k}|^2 over circular complex Gaussian
// innovations of variance innovation_std^2, quantized with `table`.
struct MovingAverageChannel {
  std::vector<double> coefficients;
  double innovation_std = 1.0;
  ChannelStateTable table;

  // Scales the innovations so the unquantized gain has mean `mean_gain`.
  static MovingAverageChannel WithMeanGain(std::vector<double> coefficients,
                                           double mean_gain,
                                           ChannelStateTable table);
};

using ChannelModel = std::variant<FsmcChannel, IidChannel, MovingAverageChannel>;

// Throws ConfigError if the model is malformed or does not have `states`
// channel states.
void ValidateChannelModel(const ChannelModel& model, std::size_t states);

// One transition of a memoryless-state model (FSMC or i.i.d.). The
// moving-average model carries latent state; use ChannelProcess for it.
int channel_step(const ChannelModel& model, int current, Rng& rng);

// Birth-death FSMC over the table's regions for Rayleigh fading with mean
// normalized gain `mean_gain`: transitions only between adjacent regions,
// with probabilities from the level-crossing rates at the region edges.
Matrix BirthDeathFsmc(const ChannelStateTable& table, double mean_gain,
                      double doppler_hz, double slot_length_s);

// Stationary distribution by power iteration.
std::vector<double> StationaryDistribution(const Matrix& transition);

// True if the chain is irreducible and aperiodic (some power is positive).
bool IsIrreducibleAperiodic(const Matrix& transition);

// Transition matrix implied by a memoryless-state model.
Matrix TransitionMatrix(const ChannelModel& model);

class ChannelProcess {
 public:
  ChannelProcess(ChannelModel model, Rng& rng);

  int current() const { return current_; }
  int Step(Rng& rng);

 private:
  int SampleMovingAverage(Rng& rng);

  ChannelModel model_;
  int current_ = 0;
  std::deque<std::pair<double, double>> innovations_;
};

struct PoissonTraffic {
  double rate = 0.0;
  double cap = 0.0;  // samples are min(Poisson(rate), cap)
};

struct DeterministicTraffic {
  double units = 0.0;
};

// Finite arrival distribution: (amount, probability) pairs.
struct DiscreteTraffic {
  std::vector<std::pair<double, double>> pmf;
};

using TrafficModel =
    std::variant<PoissonTraffic, DeterministicTraffic, DiscreteTraffic>;

void ValidateTrafficModel(const TrafficModel& model, double buffer_capacity);
double arrival_sample(const TrafficModel& model, Rng& rng);
double MeanArrival(const TrafficModel& model);
// Finite support of the arrival distribution, sorted by amount.
std::vector<std::pair<double, double>> ArrivalPmf(const TrafficModel& model);

// x_{t+1} = min(x - y + a, B). Throws InvalidActionError unless 0 <= y <= x.
double buffer_update(double x, double y, double a, double buffer_capacity);

// (2^y - 1) / h_rep.
double energy_cost(double h_rep, double y);

// Default delay utility: -(x - y).
double utility(double x, double y);

// w * min(x, y).
double priority_utility(double weight, double x, double y);

// Throws ConfigError unless weights are positive and strictly decreasing.
void ValidatePriorityWeights(std::span<const double> weights);

class Utility {
 public:
  using Function = std::function<double(double, double)>;

  static Utility NegativeBacklog();
  static Utility WeightedThroughput(double weight);
  // `linear_slope`, when given, is the constant du/dy on 0 <= y <= x.
  static Utility Custom(Function fn, std::optional<double> linear_slope = {},
                        bool decreasing_in_backlog = false);

  double operator()(double x, double y) const;
  std::optional<double> LinearSlope() const { return linear_slope_; }
  bool DecreasingInBacklog() const { return decreasing_in_backlog_; }
  double weight() const { return weight_; }

 private:
  enum class Kind { kNegativeBacklog, kWeighted, kCustom };

  Kind kind_ = Kind::kNegativeBacklog;
  double weight_ = 1.0;
  Function custom_;
  std::optional<double> linear_slope_;
  bool decreasing_in_backlog_ = true;
};

class EnergyCost {
 public:
  using Function = std::function<double(int, double)>;

  // (2^y - 1) / gains[h].
  static EnergyCost Exponential(std::vector<double> gains);
  // Arbitrary increasing convex cost per channel index.
  static EnergyCost Custom(std::size_t channels, Function fn);

  double operator()(int channel, double y) const;
  // 1 / gains[h] for the exponential form, empty otherwise.
  std::optional<double> ExponentialScale(int channel) const;
  std::size_t channels() const { return channels_; }

 private:
  std::size_t channels_ = 0;
  std::vector<double> scales_;
  Function custom_;
};

// Per-slot reward ingredients. Data dropped at the buffer cap is charged
// `overflow_penalty` utility per unit when the next normal state is formed.
struct RewardModel {
  Utility utility = Utility::NegativeBacklog();
  EnergyCost cost = EnergyCost::Exponential({1.0});
  double overflow_penalty = 0.0;
};

// 1 / (1 - alpha) for utilities that decrease in backlog, else 0. This is the
// discounted penalty of holding a unit forever, which keeps the value of a
// capped buffer concave.
double DefaultOverflowPenalty(const Utility& utility, double alpha);

struct EnvironmentSpec {
  SystemParams params;
  ChannelStateTable table = ChannelStateTable::PaperDefault();
  ChannelModel channel = IidChannel{{1.0}};
  std::vector<TrafficModel> traffic = {DeterministicTraffic{0.0}};

  void Validate() const;
};

// One simulated trajectory. Arrivals and channel draw from separate streams
// derived from the seed, so the sample path does not depend on the actions.
class Environment {
 public:
  Environment(const EnvironmentSpec& spec, std::uint64_t seed);

  const EnvironmentSpec& spec() const { return spec_; }
  int channel() const { return channel_.current(); }
  // Draws the arrivals at the end of the slot (one per queue) and advances
  // the channel.
  const std::vector<double>& Advance();

 private:
  EnvironmentSpec spec_;
  Rng arrival_rng_;
  Rng channel_rng_;
  ChannelProcess channel_;
  std::vector<double> arrivals_;
};

Rng MakeRng(std::uint64_t seed, std::uint64_t stream);

}  // namespace adpsched::env

#endif  // ADPSCHED_ENV_HPP_
