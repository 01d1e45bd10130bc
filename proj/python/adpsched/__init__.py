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

"""Energy-efficient transmission scheduling with online post-decision learning."""

from adpsched._core import (
    ConcavityError,
    ConfigError,
    DomainError,
    ExperimentConfig,
    PwlConcave,
    RunResult,
    load_config,
    parse_config,
    run,
    sandwich_approximate,
    segment_gaps,
    solve,
    sweep,
)

__all__ = [
    "ConcavityError",
    "ConfigError",
    "DomainError",
    "ExperimentConfig",
    "PwlConcave",
    "RunResult",
    "load_config",
    "parse_config",
    "run",
    "sandwich_approximate",
    "segment_gaps",
    "solve",
    "sweep",
]

__version__ = "0.1.0"
