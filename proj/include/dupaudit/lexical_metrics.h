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

#ifndef DUPAUDIT_LEXICAL_METRICS_H_
#define DUPAUDIT_LEXICAL_METRICS_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace dupaudit {

enum class OverlapDenominator {
  kMin,    // min(|A|, |B|): a short item inside a long chunk still scores high
  kUnion,  // |A u B|
};

// Overlap of the sets of whitespace-token n-grams. Identical non-empty token
// sequences score 1 even when shorter than n; otherwise a side without any
// n-gram scores 0.
double NgramOverlap(std::string_view a, std::string_view b, std::size_t n,
                    OverlapDenominator denominator = OverlapDenominator::kMin);

// ROUGE-L F1 over whitespace tokens with `a` as reference and `b` as
// candidate: P = LCS/|b|, R = LCS/|a|. 0 when either side is empty.
double RougeLF(std::string_view a, std::string_view b);

// |A n B| / |A u B| over whitespace-token sets; 1 when both are empty.
double JaccardTokens(std::string_view a, std::string_view b);

// Ratcliff/Obershelp similarity over code points: 2 * matched / (|a| + |b|),
// with matches found by recursive longest-common-substring decomposition
// (leftmost-longest tie rule, no junk heuristic). 1 when both are empty.
double GestaltRatio(std::string_view a, std::string_view b);

struct NormalizationConfig {
  bool nfc = true;
  bool collapse_whitespace = true;
  bool lowercase = false;
  // Treat a normalized string contained in the other as an exact duplicate.
  bool containment = false;
};

std::string NormalizeForExact(std::string_view text,
                              const NormalizationConfig& config);

bool IsExactDuplicate(std::string_view a, std::string_view b,
                      const NormalizationConfig& config);

struct MetricVector {
  double ngram2 = 0.0;
  double ngram3 = 0.0;
  double rouge_l_f = 0.0;
  double jaccard = 0.0;
  double gestalt = 0.0;
  bool exact = false;
};

// All metrics on the normalized forms of `a` and `b` (default normalization,
// containment off). `exact` requires non-empty equal normalized strings.
MetricVector ComputeMetrics(
    std::string_view a, std::string_view b,
    OverlapDenominator denominator = OverlapDenominator::kMin);

}  // namespace dupaudit

#endif  // DUPAUDIT_LEXICAL_METRICS_H_
