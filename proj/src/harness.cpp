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

#include "adpsched/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "adpsched/errors.hpp"
#include "adpsched/priority.hpp"

namespace adpsched::harness {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"environment",
       {"preset", "seed", "buffer", "alpha", "slot_length", "channel",
        "channel_boundaries", "channel_representatives", "channel_matrix",
        "channel_probabilities", "mean_gain", "doppler_hz", "ma_coefficients",
        "traffic", "arrival_rate", "arrival_cap", "arrival_units",
        "arrival_pmf"}},
      {"scheduler",
       {"method", "utility", "overflow_penalty", "delta", "T", "grid_step",
        "action_step", "max_evals", "beta", "gamma", "lambda", "cbar",
        "lambda_window", "weights", "V_param", "lambda_mode", "epsilon0",
        "q_beta", "tol", "max_iters", "s0_backlog", "s0_channel"}},
      {"run", {"slots", "warmup_fraction", "checkpoint_every"}},
      {"sweep", {"parameter", "values"}},
  };
  return keys;
}

using Defaults = std::vector<std::pair<std::string, std::string>>;

const Defaults& Preset(const std::string& name) {
  static const Defaults desk{
      {"environment.buffer", "16"},
      {"environment.alpha", "0.95"},
      {"environment.channel", "fsmc"},
      {"environment.channel_boundaries", "0.07, 0.2, inf"},
      {"environment.channel_representatives", "0.04, 0.12, 0.35"},
      {"environment.channel_matrix", "0.7 0.3 0; 0.15 0.7 0.15; 0 0.3 0.7"},
      {"environment.traffic", "poisson"},
      {"environment.arrival_rate", "2"},
      {"scheduler.lambda", "0.3"},
      {"scheduler.delta", "0.5"},
      {"scheduler.T", "1"},
      {"scheduler.grid_step", "1"},
      {"scheduler.action_step", "1"},
      {"run.slots", "50000"},
  };
  static const Defaults paper{
      {"environment.buffer", "500"},
      {"environment.alpha", "0.95"},
      {"environment.channel", "birth_death"},
      {"environment.mean_gain", "0.14"},
      {"environment.doppler_hz", "5"},
      {"environment.slot_length", "0.01"},
      {"environment.traffic", "poisson"},
      {"environment.arrival_rate", "15"},
      {"scheduler.lambda", "1e-5"},
      {"scheduler.delta", "10"},
      {"scheduler.T", "1"},
      {"scheduler.grid_step", "1"},
      {"scheduler.action_step", "0"},
      {"run.slots", "10000"},
  };
  if (name == "desk") return desk;
  if (name == "paper") return paper;
  throw ConfigError("unknown preset '" + name + "' (desk or paper)",
                    "environment.preset");
}

std::string Trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> Split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    const auto piece = Trim(text.substr(
        start, end == std::string_view::npos ? std::string_view::npos
                                             : end - start));
    if (!piece.empty()) parts.push_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

double ParseDouble(const std::string& text, const std::string& field) {
  const std::string t = Trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected a number, got '" + t + "'", field);
  }
  return value;
}

std::uint64_t ParseUnsigned(const std::string& text, const std::string& field) {
  const std::string t = Trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + t + "'",
                      field);
  }
  return value;
}

std::vector<double> ParseList(const std::string& text,
                              const std::string& field) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), '\t', ' ');
  std::vector<double> values;
  for (const auto& item : Split(normalized, ',')) {
    for (const auto& word : Split(item, ' ')) {
      values.push_back(ParseDouble(word, field));
    }
  }
  return values;
}

env::Matrix ParseMatrix(const std::string& text, const std::string& field) {
  env::Matrix rows;
  for (const auto& row : Split(text, ';')) rows.push_back(ParseList(row, field));
  return rows;
}

// Key lookup that records which keys were read.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> Get(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
      return Trim(*v);
    }
    return std::nullopt;
  }
  std::string String(const std::string& key, const std::string& fallback) const {
    return Get(key).value_or(fallback);
  }
  double Double(const std::string& key, double fallback) const {
    const auto v = Get(key);
    return v ? ParseDouble(*v, key) : fallback;
  }
  std::optional<double> OptionalDouble(const std::string& key) const {
    const auto v = Get(key);
    if (!v) return std::nullopt;
    return ParseDouble(*v, key);
  }
  std::uint64_t Unsigned(const std::string& key, std::uint64_t fallback) const {
    const auto v = Get(key);
    return v ? ParseUnsigned(*v, key) : fallback;
  }

 private:
  const pt::ptree& tree_;
};

learner::StepSchedule ParseSchedule(const std::string& text,
                                    const std::string& field) {
  try {
    return learner::StepSchedule::Parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), field);
  }
}

env::ChannelStateTable ParseTable(const Reader& r) {
  const auto boundaries = r.Get("environment.channel_boundaries");
  const auto reps = r.Get("environment.channel_representatives");
  if (!boundaries && !reps) return env::ChannelStateTable::PaperDefault();
  if (!boundaries || !reps) {
    throw ConfigError("channel_boundaries and channel_representatives go "
                      "together",
                      "environment.channel_boundaries");
  }
  try {
    return env::ChannelStateTable(
        ParseList(*boundaries, "environment.channel_boundaries"),
        ParseList(*reps, "environment.channel_representatives"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), "environment.channel_boundaries");
  }
}

env::ChannelModel ParseChannel(const Reader& r,
                               const env::ChannelStateTable& table,
                               double slot_length) {
  const std::string kind = r.String("environment.channel", "fsmc");
  if (kind == "fsmc") {
    const auto m = r.Get("environment.channel_matrix");
    if (!m) throw ConfigError("required for an FSMC", "environment.channel_matrix");
    return env::FsmcChannel{ParseMatrix(*m, "environment.channel_matrix")};
  }
  if (kind == "iid") {
    const auto p = r.Get("environment.channel_probabilities");
    if (!p) {
      throw ConfigError("required for an i.i.d. channel",
                        "environment.channel_probabilities");
    }
    return env::IidChannel{ParseList(*p, "environment.channel_probabilities")};
  }
  if (kind == "birth_death") {
    return env::FsmcChannel{env::BirthDeathFsmc(
        table, r.Double("environment.mean_gain", 0.14),
        r.Double("environment.doppler_hz", 5.0), slot_length)};
  }
  if (kind == "moving_average") {
    const auto c = r.Get("environment.ma_coefficients");
    if (!c) {
      throw ConfigError("required for a moving-average channel",
                        "environment.ma_coefficients");
    }
    return env::MovingAverageChannel::WithMeanGain(
        ParseList(*c, "environment.ma_coefficients"),
        r.Double("environment.mean_gain", 0.14), table);
  }
  throw ConfigError("unknown channel '" + kind +
                        "' (fsmc, iid, birth_death, moving_average)",
                    "environment.channel");
}

std::vector<env::TrafficModel> ParseTraffic(const Reader& r, double buffer,
                                            std::size_t queues_hint) {
  const std::string kind = r.String("environment.traffic", "poisson");
  std::vector<env::TrafficModel> traffic;
  if (kind == "poisson") {
    std::vector<double> rates =
        ParseList(r.String("environment.arrival_rate", "0"),
                  "environment.arrival_rate");
    const double cap = r.Double("environment.arrival_cap", buffer);
    if (rates.size() == 1 && queues_hint > 1) rates.assign(queues_hint, rates[0]);
    for (double rate : rates) traffic.push_back(env::PoissonTraffic{rate, cap});
  } else if (kind == "deterministic") {
    std::vector<double> units =
        ParseList(r.String("environment.arrival_units", "0"),
                  "environment.arrival_units");
    if (units.size() == 1 && queues_hint > 1) units.assign(queues_hint, units[0]);
    for (double u : units) traffic.push_back(env::DeterministicTraffic{u});
  } else if (kind == "discrete") {
    const auto text = r.Get("environment.arrival_pmf");
    if (!text) throw ConfigError("required", "environment.arrival_pmf");
    std::vector<std::pair<double, double>> pmf;
    for (const auto& item : Split(*text, ',')) {
      const auto kv = Split(item, ':');
      if (kv.size() != 2) {
        throw ConfigError("expected amount:probability pairs",
                          "environment.arrival_pmf");
      }
      pmf.emplace_back(ParseDouble(kv[0], "environment.arrival_pmf"),
                       ParseDouble(kv[1], "environment.arrival_pmf"));
    }
    traffic.assign(std::max<std::size_t>(queues_hint, 1),
                   env::DiscreteTraffic{pmf});
  } else {
    throw ConfigError("unknown traffic '" + kind +
                          "' (poisson, deterministic, discrete)",
                      "environment.traffic");
  }
  return traffic;
}

void CheckKeys(const pt::ptree& tree) {
  const auto& known = KnownKeys();
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) {
      throw ConfigError("unknown section [" + section + "]", section);
    }
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("keys must live inside a section", section);
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ConfigError("unknown key", section + "." + key);
      }
    }
  }
}

ExperimentConfig FromTree(pt::ptree tree,
                          std::optional<std::uint64_t> seed_override) {
  CheckKeys(tree);
  if (seed_override) {
    tree.put("environment.seed", std::to_string(*seed_override));
  }
  if (auto preset = tree.get_optional<std::string>("environment.preset")) {
    for (const auto& [key, value] : Preset(Trim(*preset))) {
      if (!tree.get_optional<std::string>(key)) tree.put(key, value);
    }
  }
  const Reader r(tree);
  ExperimentConfig config;

  const auto seed = r.Get("environment.seed");
  if (!seed) throw ConfigError("a seed is mandatory", "environment.seed");
  config.seed = ParseUnsigned(*seed, "environment.seed");

  auto& params = config.environment.params;
  params.buffer_capacity = r.Double("environment.buffer", 16.0);
  params.alpha = r.Double("environment.alpha", 0.95);
  params.slot_length_s = r.Double("environment.slot_length", 0.01);

  config.method = ParseMethod(r.String("scheduler.method", "learner"));
  if (const auto w = r.Get("scheduler.weights")) {
    config.weights = ParseList(*w, "scheduler.weights");
  }
  config.environment.table = ParseTable(r);
  config.environment.channel =
      ParseChannel(r, config.environment.table, params.slot_length_s);
  config.environment.traffic =
      ParseTraffic(r, params.buffer_capacity,
                   config.method == Method::kPriority ? config.weights.size() : 1);

  config.utility = r.String("scheduler.utility", "backlog");
  config.overflow_penalty = r.OptionalDouble("scheduler.overflow_penalty");
  auto& lo = config.learner;
  lo.delta = r.Double("scheduler.delta", lo.delta);
  lo.period = r.Unsigned("scheduler.T", lo.period);
  lo.grid_step = r.Double("scheduler.grid_step", lo.grid_step);
  lo.action_step = r.Double("scheduler.action_step", lo.action_step);
  lo.max_evals = r.Unsigned("scheduler.max_evals", lo.max_evals);
  if (const auto b = r.Get("scheduler.beta")) lo.beta = ParseSchedule(*b, "scheduler.beta");
  if (const auto g = r.Get("scheduler.gamma")) lo.gamma = ParseSchedule(*g, "scheduler.gamma");
  lo.lambda_window = r.Unsigned("scheduler.lambda_window", lo.lambda_window);
  config.lambda = r.Double("scheduler.lambda", 0.0);
  config.cbar = r.OptionalDouble("scheduler.cbar");

  auto& so = config.stability;
  so.v_param = r.Double("scheduler.V_param", so.v_param);
  so.action_step = lo.action_step > 0.0 ? lo.action_step : 1.0;
  const std::string mode = r.String("scheduler.lambda_mode",
                                    config.cbar ? "virtual" : "fixed");
  if (mode == "virtual") {
    so.mode = baselines::LambdaMode::kVirtual;
  } else if (mode == "fixed") {
    so.mode = baselines::LambdaMode::kFixed;
  } else {
    throw ConfigError("expected virtual or fixed", "scheduler.lambda_mode");
  }
  auto& qo = config.qlearning;
  qo.epsilon0 = r.Double("scheduler.epsilon0", qo.epsilon0);
  if (const auto b = r.Get("scheduler.q_beta")) qo.beta = ParseSchedule(*b, "scheduler.q_beta");

  config.solve.tol = r.Double("scheduler.tol", config.solve.tol);
  config.solve.max_iters = r.Unsigned("scheduler.max_iters", config.solve.max_iters);
  const auto s0x = r.OptionalDouble("scheduler.s0_backlog");
  const auto s0h = r.Get("scheduler.s0_channel");
  if (s0x || s0h) {
    config.start = oracle::StartState{
        s0x.value_or(0.0),
        static_cast<int>(s0h ? ParseUnsigned(*s0h, "scheduler.s0_channel") : 0)};
  }

  config.slots = r.Unsigned("run.slots", config.slots);
  config.warmup_fraction = r.Double("run.warmup_fraction", config.warmup_fraction);
  config.checkpoint_every = r.Unsigned("run.checkpoint_every", 0);

  config.sweep_parameter = r.String("sweep.parameter", "");
  if (const auto v = r.Get("sweep.values")) {
    config.sweep_values = Split(*v, v->find(';') != std::string::npos ? ';' : ',');
  }

  if (const auto* fsmc = std::get_if<env::FsmcChannel>(&config.environment.channel)) {
    if (fsmc->transition.size() == config.environment.table.size() &&
        !env::IsIrreducibleAperiodic(fsmc->transition)) {
      config.warnings.push_back(
          "the channel chain is not irreducible and aperiodic; periodic "
          "updates (T > 1) are not guaranteed to converge");
    }
  }
  config.Validate();
  return config;
}

bool IsIntegral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

learner::LearnerOptions LearnerOptionsFor(const ExperimentConfig& config,
                                          int initial_channel) {
  learner::LearnerOptions o = config.learner;
  o.lambda = config.lambda;
  o.adapt_lambda = config.cbar.has_value();
  o.cost_budget = config.cbar.value_or(0.0);
  o.initial_channel = initial_channel;
  o.initial_backlog = 0.0;
  return o;
}

double SafeRatio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::string ToString(Method method) {
  switch (method) {
    case Method::kOracle:
      return "oracle";
    case Method::kLearner:
      return "learner";
    case Method::kPriority:
      return "priority";
    case Method::kStability:
      return "stability";
    case Method::kQLearning:
      return "qlearning";
  }
  return "unknown";
}

Method ParseMethod(const std::string& text) {
  for (Method m : {Method::kOracle, Method::kLearner, Method::kPriority,
                   Method::kStability, Method::kQLearning}) {
    if (ToString(m) == text) return m;
  }
  throw ConfigError("unknown method '" + text +
                        "' (oracle, learner, priority, stability, qlearning)",
                    "scheduler.method");
}

void ExperimentConfig::Validate() const {
  try {
    environment.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), "environment." + e.field());
  }
  if (utility != "backlog" && utility != "throughput") {
    throw ConfigError("expected backlog or throughput", "scheduler.utility");
  }
  if (overflow_penalty && !(*overflow_penalty >= 0.0)) {
    throw ConfigError("must be >= 0", "scheduler.overflow_penalty");
  }
  try {
    learner.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), "scheduler." + e.field());
  }
  if (!(lambda >= 0.0)) throw ConfigError("must be >= 0", "scheduler.lambda");
  if (cbar && !(*cbar > 0.0)) throw ConfigError("must be positive", "scheduler.cbar");
  if (slots == 0) throw ConfigError("must be positive", "run.slots");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("must lie in [0, 1)", "run.warmup_fraction");
  }
  const bool single = method != Method::kPriority;
  if (single && queues() != 1) {
    throw ConfigError("this method drives a single queue",
                      "environment.arrival_rate");
  }
  const double buffer = environment.params.buffer_capacity;
  switch (method) {
    case Method::kOracle: {
      if (std::holds_alternative<env::MovingAverageChannel>(environment.channel)) {
        throw ConfigError("the planner needs an FSMC or i.i.d. channel",
                          "environment.channel");
      }
      const double g = learner.grid_step;
      if (!(g > 0.0) || !IsIntegral(buffer / g)) {
        throw ConfigError("must divide the buffer", "scheduler.grid_step");
      }
      for (const auto& [amount, p] : env::ArrivalPmf(environment.traffic[0])) {
        if (!IsIntegral(amount / g)) {
          throw ConfigError("arrivals must be multiples of grid_step",
                            "environment.traffic");
        }
      }
      if (start) {
        if (start->channel < 0 ||
            static_cast<std::size_t>(start->channel) >= environment.table.size()) {
          throw ConfigError("out of range", "scheduler.s0_channel");
        }
        if (!IsIntegral(start->backlog / g) || start->backlog < 0.0 ||
            start->backlog > buffer) {
          throw ConfigError("must be a grid point", "scheduler.s0_backlog");
        }
      }
      if (!(solve.tol > 0.0)) throw ConfigError("must be positive", "scheduler.tol");
      break;
    }
    case Method::kPriority:
      if (weights.empty()) {
        throw ConfigError("priority runs need weights", "scheduler.weights");
      }
      try {
        env::ValidatePriorityWeights(weights);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "scheduler.weights");
      }
      if (queues() != weights.size()) {
        throw ConfigError("need one arrival rate per weight",
                          "environment.arrival_rate");
      }
      break;
    case Method::kStability: {
      auto o = stability;
      o.cost_budget = cbar.value_or(0.0);
      o.lambda = lambda;
      try {
        o.Validate();
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "scheduler." + e.field());
      }
      break;
    }
    case Method::kQLearning:
      if (!IsIntegral(buffer)) {
        throw ConfigError("Q-learning needs an integer buffer",
                          "environment.buffer");
      }
      for (const auto& [amount, p] : env::ArrivalPmf(environment.traffic[0])) {
        if (!IsIntegral(amount)) {
          throw ConfigError("Q-learning needs integer arrivals",
                            "environment.traffic");
        }
      }
      if (!(qlearning.epsilon0 >= 0.0)) {
        throw ConfigError("must be >= 0", "scheduler.epsilon0");
      }
      break;
    case Method::kLearner:
      break;
  }
}

ExperimentConfig LoadConfig(const std::string& path,
                            std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "config");
  return ParseConfig(in, seed);
}

ExperimentConfig ParseConfig(std::istream& in,
                             std::optional<std::uint64_t> seed) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message() + " at line " + std::to_string(e.line()),
                      "config");
  }
  return FromTree(std::move(tree), seed);
}

ExperimentConfig ParseConfigString(const std::string& text,
                                   std::optional<std::uint64_t> seed) {
  std::istringstream in(text);
  return ParseConfig(in, seed);
}

ExperimentConfig WithParameter(const ExperimentConfig& config,
                               const std::string& parameter,
                               const std::string& value) {
  ExperimentConfig out = config;
  const std::string field = "sweep.values";
  if (parameter == "delta") {
    out.learner.delta = ParseDouble(value, field);
  } else if (parameter == "T") {
    out.learner.period = ParseUnsigned(value, field);
  } else if (parameter == "lambda") {
    out.lambda = ParseDouble(value, field);
  } else if (parameter == "cbar") {
    out.cbar = ParseDouble(value, field);
    if (out.method == Method::kStability) {
      out.stability.mode = baselines::LambdaMode::kVirtual;
    }
  } else if (parameter == "V_param") {
    out.stability.v_param = ParseDouble(value, field);
  } else if (parameter == "weights") {
    out.weights = ParseList(value, field);
    if (out.queues() != out.weights.size() && out.queues() >= 1) {
      out.environment.traffic.resize(out.weights.size(),
                                     out.environment.traffic.front());
    }
  } else {
    throw ConfigError("cannot sweep '" + parameter +
                          "' (delta, T, lambda, cbar, V_param, weights)",
                      "sweep.parameter");
  }
  out.Validate();
  return out;
}

env::RewardModel MakeReward(const ExperimentConfig& config) {
  env::RewardModel reward;
  reward.utility = config.utility == "throughput"
                       ? env::Utility::WeightedThroughput(1.0)
                       : env::Utility::NegativeBacklog();
  const auto reps = config.environment.table.representatives();
  reward.cost = env::EnergyCost::Exponential({reps.begin(), reps.end()});
  reward.overflow_penalty = config.overflow_penalty.value_or(
      env::DefaultOverflowPenalty(reward.utility,
                                  config.environment.params.alpha));
  return reward;
}

namespace {

void WriteCheckpoint(std::ostream& out, std::size_t t, std::size_t queue,
                     const std::vector<pwl::PwlConcave>& values) {
  for (std::size_t h = 0; h < values.size(); ++h) {
    out << t << ',' << queue << ',' << h << ',' << values[h].ToRow() << '\n';
  }
}

MetricsRecord RunPriority(const ExperimentConfig& config,
                          const RunOutputs& outputs) {
  const auto& spec = config.environment;
  const std::size_t n = config.queues();
  const double buffer = spec.params.buffer_capacity;
  const double alpha = spec.params.alpha;
  env::Environment environment(spec, config.seed);
  const auto reps = spec.table.representatives();
  const env::EnergyCost cost =
      env::EnergyCost::Exponential({reps.begin(), reps.end()});
  priority::PriorityLearner scheduler(
      priority::WeightedQueues(config.weights, buffer), alpha, cost,
      spec.table.size(), LearnerOptionsFor(config, environment.channel()));

  const std::size_t warmup = static_cast<std::size_t>(
      std::floor(config.warmup_fraction * static_cast<double>(config.slots)));
  std::vector<double> x(n, 0.0);
  int h = environment.channel();
  std::vector<double> queue_sum(n, 0.0);
  std::vector<double> utility_disc(n, 0.0);
  double power_sum = 0.0;
  double utility_total = 0.0;
  double cost_total = 0.0;
  double discount = 1.0;
  double lambda_sum = 0.0;
  double slack = 0.0;
  if (outputs.trace) {
    *outputs.trace << "t";
    for (std::size_t i = 0; i < n; ++i) *outputs.trace << ",x" << i + 1;
    *outputs.trace << ",h";
    for (std::size_t i = 0; i < n; ++i) *outputs.trace << ",y" << i + 1;
    *outputs.trace << ",energy,lambda,n_delta\n";
  }
  std::size_t evaluations_before = 0;
  for (std::size_t t = 0; t < config.slots; ++t) {
    const std::vector<double> y = scheduler.Decide(x, h);
    const double sent = std::accumulate(y.begin(), y.end(), 0.0);
    const double energy = cost(h, sent);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        slack = std::max(slack, (x[i] - y[i]) * y[j]);
      }
    }
    const std::size_t evaluations_now = scheduler.counters().evaluations;
    if (outputs.trace) {
      auto& out = *outputs.trace;
      out << t;
      for (double v : x) out << ',' << FormatNumber(v);
      out << ',' << h;
      for (double v : y) out << ',' << FormatNumber(v);
      out << ',' << FormatNumber(energy) << ',' << FormatNumber(scheduler.lambda())
          << ',' << evaluations_now - evaluations_before << '\n';
    }
    evaluations_before = evaluations_now;
    if (t >= warmup) {
      double u = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        queue_sum[i] += x[i] - y[i];
        const double ui = config.weights[i] * std::min(x[i], y[i]);
        utility_disc[i] += discount * ui;
        u += ui;
      }
      power_sum += energy;
      utility_total += discount * u;
      cost_total += discount * energy;
      discount *= alpha;
      lambda_sum += scheduler.lambda();
    }
    const std::vector<double> arrivals = environment.Advance();
    const int next = environment.channel();
    scheduler.Observe(arrivals, next, energy);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = env::buffer_update(x[i], y[i], arrivals[i], buffer);
    }
    h = next;
    if (outputs.checkpoints && config.checkpoint_every > 0 &&
        (t + 1) % config.checkpoint_every == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        WriteCheckpoint(*outputs.checkpoints, t + 1, i,
                        scheduler.queue(i).values());
      }
    }
  }

  MetricsRecord m;
  m.method = ToString(config.method);
  m.seed = config.seed;
  m.slots = config.slots - warmup;
  const double measured = static_cast<double>(m.slots);
  double total_rate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = env::MeanArrival(spec.traffic[i]);
    total_rate += rate;
    const double q = queue_sum[i] / measured;
    m.avg_queue += q;
    m.class_queue.push_back(q);
    m.class_delay.push_back(SafeRatio(q, rate));
    m.class_utility.push_back(utility_disc[i]);
  }
  m.avg_delay = SafeRatio(m.avg_queue, total_rate);
  m.avg_power = power_sum / measured;
  m.discounted_utility = utility_total;
  m.discounted_cost = cost_total;
  m.lambda_final = scheduler.lambda();
  m.lambda_mean = lambda_sum / measured;
  const WorkCounters c = scheduler.counters();
  m.mean_n_delta = SafeRatio(static_cast<double>(c.evaluations),
                             static_cast<double>(c.updates * n));
  m.ops_per_slot = static_cast<double>(c.foresighted_calls) /
                   static_cast<double>(c.slots);
  // N acting calls, and per update the n_delta of every queue plus N - 1
  // fresh-arrival drains.
  const double per_update =
      SafeRatio(static_cast<double>(c.evaluations) +
                    static_cast<double>((n - 1) * c.updates),
                static_cast<double>(c.updates));
  m.work_bound = static_cast<double>(n) +
                 per_update / static_cast<double>(config.learner.period);
  m.max_slackness = slack;
  return m;
}

}  // namespace

MetricsRecord run(const ExperimentConfig& config, const RunOutputs& outputs) {
  config.Validate();
  if (config.method == Method::kPriority) return RunPriority(config, outputs);

  const auto& spec = config.environment;
  const double buffer = spec.params.buffer_capacity;
  const double alpha = spec.params.alpha;
  const std::size_t channels = spec.table.size();
  env::Environment environment(spec, config.seed);
  const env::RewardModel reward = MakeReward(config);

  std::unique_ptr<Scheduler> scheduler;
  learner::Learner* learner_ptr = nullptr;
  switch (config.method) {
    case Method::kLearner: {
      auto l = std::make_unique<learner::Learner>(
          spec.params, reward, channels,
          LearnerOptionsFor(config, environment.channel()));
      learner_ptr = l.get();
      scheduler = std::move(l);
      break;
    }
    case Method::kOracle: {
      SolveReport report = solve(config);
      oracle::Policy policy = std::move(report.solution.policy);
      double lambda = report.mdp.lambda;
      if (report.search) {
        lambda = report.search->lambda;
        auto rng = env::MakeRng(config.seed, 0x0AC1E);
        const bool first = std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
                           report.search->mix_weight;
        policy = first ? report.search->policy : report.search->alternate;
      }
      scheduler = std::make_unique<oracle::PolicyScheduler>(
          report.mdp, std::move(policy), lambda);
      break;
    }
    case Method::kStability: {
      auto o = config.stability;
      o.cost_budget = config.cbar.value_or(0.0);
      o.lambda = config.lambda;
      scheduler = std::make_unique<baselines::StabilityScheduler>(reward.cost,
                                                                  alpha, o);
      break;
    }
    case Method::kQLearning: {
      auto o = config.qlearning;
      o.lambda = config.lambda;
      o.adapt_lambda = config.cbar.has_value();
      o.cost_budget = config.cbar.value_or(0.0);
      o.gamma = config.learner.gamma;
      o.lambda_window = config.learner.lambda_window;
      o.seed = config.seed;
      scheduler = std::make_unique<baselines::QLearningScheduler>(
          spec.params, reward, channels, o);
      break;
    }
    case Method::kPriority:
      break;
  }

  const std::size_t warmup = static_cast<std::size_t>(
      std::floor(config.warmup_fraction * static_cast<double>(config.slots)));
  double x = 0.0;
  int h = environment.channel();
  double queue_sum = 0.0;
  double power_sum = 0.0;
  double utility_total = 0.0;
  double cost_total = 0.0;
  double discount = 1.0;
  double lambda_sum = 0.0;
  if (outputs.trace) *outputs.trace << "t,x,h,y,energy,lambda,n_delta\n";
  for (std::size_t t = 0; t < config.slots; ++t) {
    const double y = scheduler->Decide(x, h);
    const double energy = reward.cost(h, y);
    if (outputs.trace) {
      *outputs.trace << t << ',' << FormatNumber(x) << ',' << h << ','
                     << FormatNumber(y) << ',' << FormatNumber(energy) << ','
                     << FormatNumber(scheduler->lambda()) << ','
                     << scheduler->last_evaluations() << '\n';
    }
    if (t >= warmup) {
      queue_sum += x - y;
      power_sum += energy;
      utility_total += discount * reward.utility(x, y);
      cost_total += discount * energy;
      discount *= alpha;
      lambda_sum += scheduler->lambda();
    }
    const double a = environment.Advance().front();
    const int next = environment.channel();
    scheduler->Observe(a, next, energy);
    x = env::buffer_update(x, y, a, buffer);
    h = next;
    if (learner_ptr && outputs.checkpoints && config.checkpoint_every > 0 &&
        (t + 1) % config.checkpoint_every == 0) {
      WriteCheckpoint(*outputs.checkpoints, t + 1, 0, learner_ptr->values());
    }
  }

  MetricsRecord m;
  m.method = ToString(config.method);
  m.seed = config.seed;
  m.slots = config.slots - warmup;
  const double measured = static_cast<double>(m.slots);
  m.avg_queue = queue_sum / measured;
  m.avg_delay = SafeRatio(m.avg_queue, env::MeanArrival(spec.traffic.front()));
  m.avg_power = power_sum / measured;
  m.discounted_utility = utility_total;
  m.discounted_cost = cost_total;
  m.lambda_final = scheduler->lambda();
  m.lambda_mean = lambda_sum / measured;
  const WorkCounters c = scheduler->counters();
  m.ops_per_slot = SafeRatio(static_cast<double>(c.foresighted_calls),
                             static_cast<double>(c.slots));
  if (config.method == Method::kLearner) {
    // Only the PWL learner builds approximations; the other methods report
    // zero work columns.
    m.mean_n_delta = SafeRatio(static_cast<double>(c.evaluations),
                               static_cast<double>(c.updates));
    m.work_bound =
        1.0 + m.mean_n_delta / static_cast<double>(config.learner.period);
  }
  return m;
}

std::vector<MetricsRecord> sweep(const ExperimentConfig& config) {
  if (config.sweep_parameter.empty() || config.sweep_values.empty()) {
    throw ConfigError("a sweep needs a parameter and values", "sweep.parameter");
  }
  struct Row {
    std::vector<double> key;
    MetricsRecord record;
  };
  std::vector<Row> rows;
  for (const std::string& value : config.sweep_values) {
    const ExperimentConfig cfg =
        WithParameter(config, config.sweep_parameter, value);
    MetricsRecord record = run(cfg);
    record.parameter = config.sweep_parameter;
    record.value = value;
    rows.push_back({ParseList(value, "sweep.values"), std::move(record)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.key < b.key; });
  std::vector<MetricsRecord> out;
  for (auto& row : rows) out.push_back(std::move(row.record));
  return out;
}

std::string FormatNumber(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

void WriteCsv(std::ostream& out, const std::vector<MetricsRecord>& rows) {
  std::size_t classes = 0;
  for (const auto& r : rows) classes = std::max(classes, r.class_delay.size());
  out << "parameter,value,method,seed,slots,avg_queue,avg_delay,avg_power,"
         "discounted_utility,discounted_cost,lambda_final,lambda_mean,"
         "mean_n_delta,ops_per_slot,work_bound";
  if (classes > 0) {
    for (std::size_t i = 1; i <= classes; ++i) {
      out << ",queue" << i << "_avg_queue,queue" << i << "_avg_delay,queue"
          << i << "_discounted_utility";
    }
    out << ",max_slackness";
  }
  out << '\n';
  for (const auto& r : rows) {
    std::string value = r.value;
    std::replace(value.begin(), value.end(), ',', ' ');
    out << r.parameter << ',' << value << ',' << r.method << ',' << r.seed
        << ',' << r.slots << ',' << FormatNumber(r.avg_queue) << ','
        << FormatNumber(r.avg_delay) << ',' << FormatNumber(r.avg_power) << ','
        << FormatNumber(r.discounted_utility) << ','
        << FormatNumber(r.discounted_cost) << ','
        << FormatNumber(r.lambda_final) << ',' << FormatNumber(r.lambda_mean)
        << ',' << FormatNumber(r.mean_n_delta) << ','
        << FormatNumber(r.ops_per_slot) << ',' << FormatNumber(r.work_bound);
    if (classes > 0) {
      for (std::size_t i = 0; i < classes; ++i) {
        const bool has = i < r.class_delay.size();
        out << ',' << FormatNumber(has ? r.class_queue[i] : 0.0) << ','
            << FormatNumber(has ? r.class_delay[i] : 0.0) << ','
            << FormatNumber(has ? r.class_utility[i] : 0.0);
      }
      out << ',' << FormatNumber(r.max_slackness);
    }
    out << '\n';
  }
}

SolveReport solve(const ExperimentConfig& config) {
  ExperimentConfig planning = config;
  planning.method = Method::kOracle;
  planning.Validate();
  SolveReport report;
  report.mdp = oracle::DiscreteMdp::FromEnvironment(
      config.environment, MakeReward(config), config.lambda,
      config.learner.grid_step);
  report.start = config.start.value_or(oracle::DefaultStartState(report.mdp));
  if (config.cbar) {
    oracle::LagrangeOptions options;
    options.gamma = config.learner.gamma;
    options.solve = config.solve;
    report.search =
        oracle::lagrange_search(report.mdp, *config.cbar, report.start, options);
    report.mdp.lambda = report.search->lambda;
  }
  report.solution = oracle::solve_exact(report.mdp, config.solve);
  if (report.search) report.solution.policy = report.search->policy;
  return report;
}

void WriteSolveCsv(std::ostream& out, const SolveReport& report) {
  out << "backlog,channel,post_value,normal_value,action\n";
  const auto& s = report.solution;
  for (std::size_t h = 0; h < report.mdp.channels(); ++h) {
    for (std::size_t i = 0; i < report.mdp.grid_size(); ++i) {
      out << FormatNumber(report.mdp.grid_point(i)) << ',' << h << ','
          << FormatNumber(s.post_values.at(i, h)) << ','
          << FormatNumber(s.normal_values.at(i, h)) << ','
          << FormatNumber(s.policy.at(i, h)) << '\n';
    }
  }
}

void WriteSearchTrace(std::ostream& out, const SolveReport& report) {
  out << "iteration,lambda,cost,utility\n";
  if (!report.search) return;
  std::size_t k = 0;
  for (const auto& step : report.search->trace) {
    out << ++k << ',' << FormatNumber(step.lambda) << ','
        << FormatNumber(step.cost) << ',' << FormatNumber(step.utility) << '\n';
  }
}

}  // namespace adpsched::harness
