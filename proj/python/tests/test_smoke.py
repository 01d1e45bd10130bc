# Copyright 2026 The adp-sched Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import adpsched

DESK = """
[environment]
preset = desk
seed = 5
[run]
slots = 2000
"""


def test_pwl_evaluation_and_gaps():
    f = adpsched.PwlConcave([(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)])
    assert f(0.5) == pytest.approx(1.0)
    assert len(f) == 3
    assert f.lower == 0.0 and f.upper == 3.0
    max_gap, gaps = adpsched.segment_gaps(f)
    assert len(gaps) == 2
    assert max_gap == pytest.approx(max(gaps))
    assert adpsched.PwlConcave.from_row(f.to_row()).points == f.points


def test_non_concave_points_are_rejected():
    with pytest.raises(ValueError):
        adpsched.PwlConcave([(0.0, 0.0), (1.0, 0.0), (2.0, 5.0)])


def test_sandwich_stays_within_delta():
    result = adpsched.sandwich_approximate(math.sqrt, 0.0, 9.0, delta=0.01)
    g = result["function"]
    assert result["converged"]
    for i in range(1001):
        x = 9.0 * i / 1000
        assert -1e-9 <= math.sqrt(x) - g(x) <= 0.01 + 1e-9


def test_run_is_deterministic_and_reports_metrics():
    config = adpsched.parse_config(DESK)
    a = adpsched.run(config, trace=True)
    b = adpsched.run(config, trace=True)
    assert a.to_csv() == b.to_csv()
    assert a.trace == b.trace
    metrics = a.metrics
    assert metrics["method"] == "learner"
    assert metrics["slots"] == 1600
    assert metrics["ops_per_slot"] <= metrics["work_bound"] + 1e-12
    assert a.trace.splitlines()[0] == "t,x,h,y,energy,lambda,n_delta"


def test_config_errors_name_the_field():
    with pytest.raises(adpsched.ConfigError, match="scheduler.delta"):
        adpsched.parse_config(DESK + "[scheduler]\ndelta = -1\n").validate()
    with pytest.raises(adpsched.ConfigError, match="environment.seed"):
        adpsched.parse_config("[environment]\npreset = desk\n")
    assert adpsched.parse_config("[environment]\npreset = desk\n", seed=3).seed == 3


def test_sweep_rows_are_sorted():
    config = adpsched.parse_config(
        DESK + "[sweep]\nparameter = delta\nvalues = 1; 0\n")
    rows, csv = adpsched.sweep(config)
    assert [r["value"] for r in rows] == ["0", "1"]
    assert csv.count("\n") == 3
    assert rows[0]["mean_n_delta"] >= rows[1]["mean_n_delta"]


def test_solve_meets_budget():
    config = adpsched.parse_config(DESK + "[scheduler]\ncbar = 20\n")
    report = adpsched.solve(config)
    assert report["cost"] == pytest.approx(20.0, rel=1e-3)
    assert report["lambda"] > 0
    policy = report["policy"]
    for row in policy:
        assert all(b >= a for a, b in zip(row, row[1:]))


def test_baseline_methods_run():
    config = adpsched.parse_config(DESK)
    for method in ("stability", "qlearning", "oracle"):
        config.method = method
        assert adpsched.run(config).metrics["method"] == method
