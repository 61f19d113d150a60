// Copyright 2026 The pattrain Authors. All Rights Reserved.
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

#ifndef PATTRAIN_ERROR_HPP_
#define PATTRAIN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pattrain {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong lifecycle state (e.g. unfrozen plan).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Data violates a structural invariant, e.g. a nonzero outside the sparsity index.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace pattrain

#endif  // PATTRAIN_ERROR_HPP_
