// Copyright 2026 The o2il Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef O2IL_ERROR_H_
#define O2IL_ERROR_H_

#include <stdexcept>
#include <string>

namespace o2il {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed files, shape mismatches. The CLI maps these to
// exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, singular systems, exponent overflow. The CLI maps these
// to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace o2il

#endif  // O2IL_ERROR_H_
