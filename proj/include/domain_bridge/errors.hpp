// Copyright 2026 The Domain Bridge Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace domain_bridge {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact (tree, universe, manifest) failed to parse or
/// validate. The message names the first offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class OracleProtocolError : public Error {
 public:
  using Error::Error;
};

class MalformedSample : public Error {
 public:
  using Error::Error;
};

/// Raised when an operation is requested in a state where it has no effect,
/// e.g. expanding a node that is already scored.
class NoOp : public Error {
 public:
  using Error::Error;
};

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

class UniverseConstructionFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace domain_bridge
