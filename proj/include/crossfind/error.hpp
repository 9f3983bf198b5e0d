// Copyright (C) 2026 The crossfind Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crossfind {

enum class ErrorKind {
    kInvalidArgument,  // caller passed something out of contract
    kParse,            // malformed document or file
    kNotFound,         // unknown id / missing asset
    kNotLabeled,       // object exists but carries no description
    kBackend,          // remote backend failure or protocol violation
    kPrerequisite,     // pipeline stage input missing or incompatible
    kNumeric,          // non-finite or degenerate numeric state
    kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

 private:
    ErrorKind kind_;
};

/// Joins ids for error messages, eliding past `limit` entries.
std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 20);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace crossfind
