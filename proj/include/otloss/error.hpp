// Copyright 2026 The otloss Authors
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

#ifndef OTLOSS_ERROR_HPP_
#define OTLOSS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace otloss {

// Bad input: shapes, ranges, malformed records, unknown config keys.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical failure the caller can avoid by changing method or parameters.
class NumericalError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Files that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace otloss

#endif  // OTLOSS_ERROR_HPP_
