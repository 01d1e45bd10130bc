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

#ifndef ADPSCHED_ERRORS_HPP_
#define ADPSCHED_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace adpsched {

// Argument outside the domain of a function (e.g. evaluating a PWL function
// outside its interval).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A structural assumption the algorithms rely on (concavity of a value
// function or of a foresighted objective) does not hold numerically.
class ConcavityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transmission outside [0, backlog].
class InvalidActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment or model configuration. `field` names the offending key
// when there is one.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace adpsched

#endif  // ADPSCHED_ERRORS_HPP_
