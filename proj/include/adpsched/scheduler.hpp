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

#ifndef ADPSCHED_SCHEDULER_HPP_
#define ADPSCHED_SCHEDULER_HPP_

#include <cstddef>

namespace adpsched {

// Work counters reported by every per-slot scheduler.
struct WorkCounters {
  std::size_t slots = 0;
  // Foresighted optimizations: one per decision plus every value-function
  // evaluation made by batch updates.
  std::size_t foresighted_calls = 0;
  std::size_t updates = 0;
  // Sum of n_delta over all updates.
  std::size_t evaluations = 0;
};

// Single-queue scheduler driven one slot at a time. For every slot the
// harness calls Decide() with the normal state and then Observe() with the
// arrival at the end of the slot, the next channel state and the energy
// spent.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  virtual double Decide(double backlog, int channel) = 0;
  virtual void Observe(double arrival, int next_channel, double energy) = 0;

  virtual double lambda() const = 0;
  virtual WorkCounters counters() const = 0;
  // Value-function evaluations made during the last slot (n_delta).
  virtual std::size_t last_evaluations() const { return 0; }
};

}  // namespace adpsched

#endif  // ADPSCHED_SCHEDULER_HPP_
