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
#include <sstream>
#include <string>
#include <vector>

#include "adpsched/errors.hpp"
#include "adpsched/harness.hpp"
#include "adpsched/oracle.hpp"
#include "doctest.h"

namespace harness = adpsched::harness;
namespace oracle = adpsched::oracle;
using adpsched::ConfigError;

namespace {

const char* kDesk = "[environment]\npreset = desk\nseed = 11\n[run]\nslots = 3000\n";

// Desk config with extra lines per section.
std::string Desk(const std::string& environment, const std::string& scheduler,
                 const std::string& run = "slots = 3000\n",
                 const std::string& extra = "") {
  return "[environment]\npreset = desk\nseed = 11\n" + environment +
         "[scheduler]\n" + scheduler + "[run]\n" + run + extra;
}

std::string FieldOf(const std::string& text) {
  try {
    harness::ParseConfigString(text).Validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string RunToCsv(const harness::ExperimentConfig& config,
                     std::string* trace_text = nullptr) {
  std::ostringstream csv, trace;
  const auto record = harness::run(config, {&trace, nullptr});
  harness::WriteCsv(csv, {record});
  if (trace_text) *trace_text = trace.str();
  return csv.str();
}

std::vector<std::vector<double>> ParseTrace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("presets fill defaults and explicit keys win") {
  const auto c = harness::ParseConfigString(kDesk);
  CHECK(c.environment.params.buffer_capacity == 16.0);
  CHECK(c.learner.delta == 0.5);
  CHECK(c.lambda == 0.3);
  CHECK(c.slots == 3000);
  const auto d = harness::ParseConfigString(Desk("", "delta = 2\n"));
  CHECK(d.learner.delta == 2.0);
}

TEST_CASE("config errors name the field") {
  CHECK(FieldOf("[environment]\npreset = desk\n") == "environment.seed");
  CHECK(FieldOf(Desk("", "delta = -1\n")) == "scheduler.delta");
  CHECK(FieldOf(Desk("", "method = magic\n")) == "scheduler.method");
  CHECK(FieldOf(Desk("", "foo = 1\n")) == "scheduler.foo");
  CHECK(FieldOf(Desk("", "", "", "[extras]\nfoo = 1\n")) == "extras");
  CHECK(FieldOf(Desk("", "beta = soon 3\n")) == "scheduler.beta");
  CHECK(FieldOf("[environment]\npreset = moon\nseed = 1\n") == "environment.preset");
  CHECK(FieldOf(Desk("", "method = priority\n")) == "scheduler.weights");
}

TEST_CASE("seed override satisfies the mandatory key") {
  const auto c = harness::ParseConfigString("[environment]\npreset = desk\n", 42);
  CHECK(c.seed == 42);
  const auto d = harness::ParseConfigString(kDesk, 5);
  CHECK(d.seed == 5);
}

TEST_CASE("zero arrivals give an empty queue and no power") {
  for (const char* method : {"learner", "stability", "qlearning", "oracle"}) {
    CAPTURE(method);
    auto c = harness::ParseConfigString(
        Desk("", std::string("method = ") + method + "\n"));
    c.environment.traffic = {adpsched::env::PoissonTraffic{0.0, 16.0}};
    const auto m = harness::run(c);
    CHECK(m.avg_queue == 0.0);
    CHECK(m.avg_power == 0.0);
  }
}

TEST_CASE("identical seeds give identical bytes") {
  for (const char* method : {"learner", "stability", "qlearning"}) {
    CAPTURE(method);
    const auto c = harness::ParseConfigString(
        Desk("", std::string("method = ") + method + "\n"));
    std::string t1, t2;
    const std::string a = RunToCsv(c, &t1);
    const std::string b = RunToCsv(c, &t2);
    CHECK(a == b);
    CHECK(t1 == t2);
    auto other = c;
    other.seed = 12;
    std::string t3;
    RunToCsv(other, &t3);
    CHECK(t1 != t3);
  }
}

TEST_CASE("queue and throughput obey flow conservation") {
  // A buffer large enough that nothing is dropped: everything that arrives
  // is eventually sent, so the long-run departure rate matches the arrival
  // rate and the reported queue matches the trace.
  const auto c = harness::ParseConfigString(
      Desk("buffer = 200\n", "", "slots = 40000\n"));
  std::ostringstream trace_out;
  const auto m = harness::run(c, {&trace_out, nullptr});
  const auto rows = ParseTrace(trace_out.str());
  REQUIRE(rows.size() == c.slots);
  const std::size_t warmup = c.slots - m.slots;
  double queue = 0.0, sent = 0.0;
  for (std::size_t t = warmup; t < rows.size(); ++t) {
    queue += rows[t][1] - rows[t][3];
    sent += rows[t][3];
  }
  const double n = static_cast<double>(m.slots);
  CHECK(queue / n == doctest::Approx(m.avg_queue).epsilon(1e-9));
  CHECK(sent / n == doctest::Approx(2.0).epsilon(0.03));
  // Little's law with the mean arrival rate.
  CHECK(m.avg_delay == doctest::Approx(m.avg_queue / 2.0).epsilon(1e-9));
}

TEST_CASE("oracle runs match policy evaluation") {
  auto c = harness::ParseConfigString(Desk(
      "arrival_rate = 1\n", "method = oracle\noverflow_penalty = 0\n",
      "slots = 400\nwarmup_fraction = 0\n"));
  const auto report = harness::solve(c);
  const auto values =
      oracle::evaluate_policy(report.mdp, report.solution.policy, c.solve);
  const std::size_t i = report.mdp.GridIndex(0.0);
  const double expected_u = values.utility.at(i, report.start.channel);
  const double expected_c = values.cost.at(i, report.start.channel);

  const int runs = 300;
  double su = 0, su2 = 0, sc = 0, sc2 = 0;
  for (int s = 0; s < runs; ++s) {
    c.seed = 1000 + static_cast<std::uint64_t>(s);
    const auto m = harness::run(c);
    su += m.discounted_utility;
    su2 += m.discounted_utility * m.discounted_utility;
    sc += m.discounted_cost;
    sc2 += m.discounted_cost * m.discounted_cost;
  }
  const double mu = su / runs, mc = sc / runs;
  const double se_u = std::sqrt((su2 / runs - mu * mu) / runs);
  const double se_c = std::sqrt((sc2 / runs - mc * mc) / runs);
  CHECK(std::abs(mu - expected_u) <= 3.0 * se_u + 1e-6);
  CHECK(std::abs(mc - expected_c) <= 3.0 * se_c + 1e-6);
}

TEST_CASE("sweep rows are sorted by value and share the seed") {
  const auto c = harness::ParseConfigString(Desk(
      "", "", "slots = 1000\n",
      "[sweep]\nparameter = delta\nvalues = 2; 0; 0.5\n"));
  const auto rows = harness::sweep(c);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].value == "0");
  CHECK(rows[1].value == "0.5");
  CHECK(rows[2].value == "2");
  for (const auto& r : rows) {
    CHECK(r.parameter == "delta");
    CHECK(r.seed == 11);
  }
  CHECK(rows[0].mean_n_delta > rows[2].mean_n_delta);
  CHECK_THROWS_AS(harness::WithParameter(c, "colour", "red"), ConfigError);
}

TEST_CASE("priority runs report per-class columns and zero slackness") {
  const auto c = harness::ParseConfigString(Desk(
      "arrival_rate = 1, 1\n", "method = priority\nweights = 2, 1\n"));
  const auto m = harness::run(c);
  REQUIRE(m.class_queue.size() == 2);
  CHECK(m.max_slackness == 0.0);
  // The more valuable class waits less.
  CHECK(m.class_delay[0] <= m.class_delay[1]);
  std::ostringstream csv;
  harness::WriteCsv(csv, {m});
  CHECK(csv.str().find("queue1_avg_delay") != std::string::npos);
}

TEST_CASE("solve output has one row per state") {
  const auto c = harness::ParseConfigString(kDesk);
  const auto report = harness::solve(c);
  std::ostringstream out;
  harness::WriteSolveCsv(out, report);
  std::size_t lines = 0;
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 1 + report.mdp.grid_size() * report.mdp.channels());
  CHECK(!report.search.has_value());
  auto budgeted = c;
  budgeted.cbar = 20.0;
  const auto searched = harness::solve(budgeted);
  REQUIRE(searched.search.has_value());
  CHECK(searched.search->cost == doctest::Approx(20.0).epsilon(1e-3));
}

TEST_CASE("method names round-trip") {
  for (auto m : {harness::Method::kOracle, harness::Method::kLearner,
                 harness::Method::kPriority, harness::Method::kStability,
                 harness::Method::kQLearning}) {
    CHECK(harness::ParseMethod(harness::ToString(m)) == m);
  }
  CHECK_THROWS_AS(harness::ParseMethod("nope"), ConfigError);
}

}  // TEST_SUITE
