// Copyright 2026 The mulic Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace mulic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by caller-supplied arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Tensor or sequence dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Channel coefficient too small to equalize.
class DegenerateChannel : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced inside a computation.
class NumericFault : public Error {
 public:
  using Error::Error;
};

/// Attack-model fit over a single-class sample set.
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage ran before the artifacts it consumes exist.
class MissingInput : public Error {
 public:
  using Error::Error;
};

/// Malformed binary container. `kind()` tells the failure apart.
class ParseError : public Error {
 public:
  enum class Kind { kIo, kBadMagic, kVersion, kTruncated, kCountMismatch, kManifest };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mulic
