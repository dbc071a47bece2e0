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

#ifndef DUPAUDIT_CSV_H_
#define DUPAUDIT_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace dupaudit {

// Quotes a field when it contains a comma, quote, or newline.
std::string CsvField(std::string_view field);

// Splits one CSV line with RFC 4180 quoting. Throws ParseError on an
// unterminated quote.
std::vector<std::string> SplitCsvLine(std::string_view line);

}  // namespace dupaudit

#endif  // DUPAUDIT_CSV_H_
