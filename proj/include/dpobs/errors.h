// Copyright 2026 The dpobs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef DPOBS_ERRORS_H_
#define DPOBS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpobs {

// Precondition violated by the caller (bad parameter, invalid budget...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operand shapes do not match.
class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Iteration cap exceeded, non-finite values, loss of definiteness.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpobs

#endif  // DPOBS_ERRORS_H_
