// Copyright 2026 The safefall Authors
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

#ifndef SAFEFALL_ERROR_HPP_
#define SAFEFALL_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safefall {

// Caller broke a precondition (length mismatch, empty input, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed model/config document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed document that violates a model or config invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite quantity appeared while integrating. `quantity()` names it.
class SimulationFault : public std::runtime_error {
 public:
  SimulationFault(std::string quantity, const std::string& detail)
      : std::runtime_error("simulation fault in '" + quantity + "': " + detail),
        quantity_(std::move(quantity)) {}

  const std::string& quantity() const { return quantity_; }

 private:
  std::string quantity_;
};

// PPO update produced a non-finite loss or gradient.
class UpdateFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_size(std::size_t actual, std::size_t expected,
                         const char* what) {
  if (actual != expected) {
    throw ContractViolation(std::string(what) + ": expected length " +
                            std::to_string(expected) + ", got " +
                            std::to_string(actual));
  }
}

}  // namespace safefall

#endif  // SAFEFALL_ERROR_HPP_
