// Copyright 2026 The ptsbe Authors
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

#ifndef PTSBE_ERRORS_HPP
#define PTSBE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptsbe {

/// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind { parse, validation, execution, io };

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {
    }
    ErrorKind kind() const noexcept {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

/// Syntax or semantic error in a circuit or noise-model file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
   public:
    ParseError(std::size_t line, const std::string &msg)
        : Error(ErrorKind::parse, line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {
    }
    std::size_t line() const noexcept {
        return line_;
    }

   private:
    std::size_t line_;
};

class ValidationError : public Error {
   public:
    explicit ValidationError(const std::string &msg) : Error(ErrorKind::validation, msg) {
    }
};

class ExecutionError : public Error {
   public:
    explicit ExecutionError(const std::string &msg) : Error(ErrorKind::execution, msg) {
    }
};

/// A Kraus operator mapped the current state to (numerically) zero.
class AnnihilationError : public ExecutionError {
   public:
    explicit AnnihilationError(const std::string &msg) : ExecutionError(msg) {
    }
};

class IoError : public Error {
   public:
    explicit IoError(const std::string &msg) : Error(ErrorKind::io, msg) {
    }
};

}  // namespace ptsbe

#endif
