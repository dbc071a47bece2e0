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

#ifndef DUPAUDIT_TEXT_H_
#define DUPAUDIT_TEXT_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dupaudit {

// Unicode NFC normalization of a UTF-8 string. Invalid UTF-8 is passed
// through unchanged.
std::string NfcNormalize(std::string_view text);

// Strips leading and trailing ASCII whitespace.
std::string_view Trim(std::string_view text);

// Replaces every run of whitespace by a single space and trims the ends.
std::string CollapseWhitespace(std::string_view text);

// ASCII lowercase; non-ASCII bytes are left alone.
std::string AsciiLower(std::string_view text);

// Maximal runs of non-whitespace bytes, as views into `text`.
std::vector<std::string_view> WhitespaceTokens(std::string_view text);

// Decodes UTF-8 into code points. Malformed bytes decode as U+FFFD.
std::u32string DecodeUtf8(std::string_view text);

bool IsAsciiSpace(char c);

// Replaces every "{name}" whose name is a key of `values` in one left-to-right
// pass; substituted text is never rescanned and unknown braces are copied.
std::string SubstituteSlots(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& values);

// Non-overlapping occurrences of `needle` in `haystack`.
std::size_t CountOccurrences(std::string_view haystack, std::string_view needle);

}  // namespace dupaudit

#endif  // DUPAUDIT_TEXT_H_
