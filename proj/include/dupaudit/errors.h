// Copyright 2026 The dupaudit Authors.
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

#ifndef DUPAUDIT_ERRORS_H_
#define DUPAUDIT_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dupaudit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments, detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Malformed input text or document (puzzles, judge responses, records).
class ParseError : public Error {
 public:
  using Error::Error;
};

// An external provider (embedder or judge) failed after exhausting retries.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::vector<std::size_t> failed = {})
      : Error(what), failed_indices_(std::move(failed)) {}

  const std::vector<std::size_t>& failed_indices() const {
    return failed_indices_;
  }

 private:
  std::vector<std::size_t> failed_indices_;
};

// A provider failure worth retrying (timeouts, 5xx, rate limits).
class TransientProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace dupaudit

#endif  // DUPAUDIT_ERRORS_H_
