// Copyright (c) 2026 The cosg Authors
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

namespace cosg {

/// Base of every error the library raises. `exit_code` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 3) {}
};

/// Parse failure with the 1-based line that triggered it.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line), message_(what) {}
  /// Same error reported as "<source>:<line>: <message>".
  ParseError(const std::string& source, const ParseError& inner)
      : DataError(source + ":" + std::to_string(inner.line_) + ": " + inner.message_),
        line_(inner.line_),
        message_(inner.message_) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
  std::string message_;
};

/// Shape disagreement between operands.
class DimensionError : public DataError {
 public:
  explicit DimensionError(const std::string& what) : DataError(what) {}
};

/// NaN/Inf detected, or a computation diverged.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, 4) {}
};

}  // namespace cosg
