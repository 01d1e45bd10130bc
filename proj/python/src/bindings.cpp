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


// Python bindings: PWL functions and the sandwich operator, plus the
// experiment harness (configs, runs, sweeps and the planner).

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adpsched/errors.hpp"
#include "adpsched/harness.hpp"
#include "adpsched/pwl.hpp"

namespace py = pybind11;
namespace harness = adpsched::harness;
namespace pwl = adpsched::pwl;

namespace {

py::dict ToDict(const harness::MetricsRecord& r) {
  py::dict d;
  d["parameter"] = r.parameter;
  d["value"] = r.value;
  d["method"] = r.method;
  d["seed"] = r.seed;
  d["slots"] = r.slots;
  d["avg_queue"] = r.avg_queue;
  d["avg_delay"] = r.avg_delay;
  d["avg_power"] = r.avg_power;
  d["discounted_utility"] = r.discounted_utility;
  d["discounted_cost"] = r.discounted_cost;
  d["lambda_final"] = r.lambda_final;
  d["lambda_mean"] = r.lambda_mean;
  d["mean_n_delta"] = r.mean_n_delta;
  d["ops_per_slot"] = r.ops_per_slot;
  d["work_bound"] = r.work_bound;
  if (!r.class_queue.empty()) {
    d["class_queue"] = r.class_queue;
    d["class_delay"] = r.class_delay;
    d["class_utility"] = r.class_utility;
    d["max_slackness"] = r.max_slackness;
  }
  return d;
}

std::vector<std::vector<double>> Rows(const adpsched::oracle::ValueTable& t,
                                      std::size_t grid, std::size_t channels) {
  std::vector<std::vector<double>> rows(channels, std::vector<double>(grid));
  for (std::size_t h = 0; h < channels; ++h) {
    for (std::size_t i = 0; i < grid; ++i) rows[h][i] = t.at(i, h);
  }
  return rows;
}

// Records and tables stay in C++ until the caller wants CSV text.
struct RunResult {
  harness::MetricsRecord record;
  std::string trace;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy-efficient transmission scheduling core";

  py::register_exception<adpsched::ConfigError>(m, "ConfigError",
                                                PyExc_ValueError);
  py::register_exception<adpsched::ConcavityError>(m, "ConcavityError",
                                                   PyExc_ArithmeticError);
  py::register_exception<adpsched::DomainError>(m, "DomainError",
                                                PyExc_ValueError);

  py::class_<pwl::PwlConcave>(m, "PwlConcave")
      .def(py::init([](const std::vector<std::pair<double, double>>& points) {
             std::vector<pwl::Breakpoint> bps;
             for (const auto& [x, v] : points) bps.push_back({x, v});
             return pwl::PwlConcave(std::move(bps));
           }),
           py::arg("points"))
      .def("__call__", &pwl::PwlConcave::Eval, py::arg("x"))
      .def_property_readonly("lower", &pwl::PwlConcave::lower)
      .def_property_readonly("upper", &pwl::PwlConcave::upper)
      .def("__len__", &pwl::PwlConcave::size)
      .def_property_readonly("points",
                             [](const pwl::PwlConcave& f) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& p : f.points()) out.emplace_back(p.x, p.v);
                               return out;
                             })
      .def("slope", &pwl::PwlConcave::Slope, py::arg("i"))
      .def("to_row", &pwl::PwlConcave::ToRow)
      .def_static("from_row", &pwl::PwlConcave::FromRow, py::arg("row"))
      .def("__repr__", [](const pwl::PwlConcave& f) {
        return "PwlConcave(" + f.ToRow() + ")";
      });

  m.def(
      "segment_gaps",
      [](const pwl::PwlConcave& f) {
        const auto r = pwl::segment_gaps(f);
        return py::make_tuple(r.max_gap, r.per_interval_gaps);
      },
      py::arg("f"), "Returns (max_gap, per-interval gaps).");

  m.def(
      "sandwich_approximate",
      [](const std::function<double(double)>& f, double lower, double upper,
         double delta, double grid_step, std::size_t max_evals) {
        pwl::SandwichOptions o;
        o.delta = delta;
        o.grid_step = grid_step;
        o.max_evals = max_evals;
        auto r = pwl::sandwich_approximate(f, lower, upper, o);
        py::dict d;
        d["function"] = r.function;
        d["evaluations"] = r.evaluations;
        d["max_gap"] = r.max_gap;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("f"), py::arg("lower"), py::arg("upper"), py::arg("delta"),
      py::arg("grid_step") = 0.0, py::arg("max_evals") = 100000);

  py::class_<harness::ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("seed", &harness::ExperimentConfig::seed)
      .def_readwrite("slots", &harness::ExperimentConfig::slots)
      .def_readwrite("lambda_", &harness::ExperimentConfig::lambda)
      .def_readwrite("cbar", &harness::ExperimentConfig::cbar)
      .def_property(
          "method",
          [](const harness::ExperimentConfig& c) { return harness::ToString(c.method); },
          [](harness::ExperimentConfig& c, const std::string& s) {
            c.method = harness::ParseMethod(s);
          })
      .def_readonly("warnings", &harness::ExperimentConfig::warnings)
      .def_property_readonly("queues", &harness::ExperimentConfig::queues)
      .def("validate", &harness::ExperimentConfig::Validate)
      .def("with_parameter",
           [](const harness::ExperimentConfig& c, const std::string& parameter,
              const std::string& value) {
             return harness::WithParameter(c, parameter, value);
           },
           py::arg("parameter"), py::arg("value"));

  m.def(
      "parse_config",
      [](const std::string& text, std::optional<std::uint64_t> seed) {
        return harness::ParseConfigString(text, seed);
      },
      py::arg("text"), py::arg("seed") = py::none());
  m.def(
      "load_config",
      [](const std::string& path, std::optional<std::uint64_t> seed) {
        return harness::LoadConfig(path, seed);
      },
      py::arg("path"), py::arg("seed") = py::none());

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("metrics",
                             [](const RunResult& r) { return ToDict(r.record); })
      .def_readonly("trace", &RunResult::trace)
      .def("to_csv", [](const RunResult& r) {
        std::ostringstream out;
        harness::WriteCsv(out, {r.record});
        return out.str();
      });

  m.def(
      "run",
      [](const harness::ExperimentConfig& config, bool trace) {
        py::gil_scoped_release release;
        RunResult result;
        std::ostringstream out;
        result.record = harness::run(config, {trace ? &out : nullptr, nullptr});
        result.trace = out.str();
        return result;
      },
      py::arg("config"), py::arg("trace") = false);

  m.def(
      "sweep",
      [](const harness::ExperimentConfig& config) {
        std::vector<harness::MetricsRecord> rows;
        {
          py::gil_scoped_release release;
          rows = harness::sweep(config);
        }
        std::ostringstream out;
        harness::WriteCsv(out, rows);
        py::list records;
        for (const auto& r : rows) records.append(ToDict(r));
        return py::make_tuple(records, out.str());
      },
      py::arg("config"), "Returns (list of metric dicts, CSV text).");

  m.def(
      "solve",
      [](const harness::ExperimentConfig& config) {
        harness::SolveReport report;
        {
          py::gil_scoped_release release;
          report = harness::solve(config);
        }
        const std::size_t grid = report.mdp.grid_size();
        const std::size_t channels = report.mdp.channels();
        py::dict d;
        d["grid"] = [&] {
          std::vector<double> g;
          for (std::size_t i = 0; i < grid; ++i) g.push_back(report.mdp.grid_point(i));
          return g;
        }();
        d["post_values"] = Rows(report.solution.post_values, grid, channels);
        d["normal_values"] = Rows(report.solution.normal_values, grid, channels);
        d["policy"] = Rows(report.solution.policy, grid, channels);
        d["iterations"] = report.solution.iterations;
        d["converged"] = report.solution.converged;
        d["lambda"] = report.search ? report.search->lambda : report.mdp.lambda;
        d["start"] = py::make_tuple(report.start.backlog, report.start.channel);
        if (report.search) {
          d["cost"] = report.search->cost;
          d["mix_weight"] = report.search->mix_weight;
        }
        std::ostringstream out;
        harness::WriteSolveCsv(out, report);
        d["csv"] = out.str();
        return d;
      },
      py::arg("config"));
}
