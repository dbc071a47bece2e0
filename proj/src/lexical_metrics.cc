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

#include "dupaudit/lexical_metrics.h"

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dupaudit/errors.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

std::set<std::vector<std::string_view>> NgramSet(
    const std::vector<std::string_view>& tokens, std::size_t n) {
  std::set<std::vector<std::string_view>> grams;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    grams.emplace(tokens.begin() + i, tokens.begin() + i + n);
  }
  return grams;
}

template <typename Set>
std::size_t IntersectionSize(const Set& a, const Set& b) {
  const Set& small = a.size() <= b.size() ? a : b;
  const Set& large = a.size() <= b.size() ? b : a;
  std::size_t count = 0;
  for (const auto& x : small) count += large.count(x);
  return count;
}

std::size_t LcsLength(const std::vector<std::string_view>& a,
                      const std::vector<std::string_view>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                     : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

struct Block {
  std::size_t a;
  std::size_t b;
  std::size_t size;
};

// Longest common substring of a[alo, ahi) and b[blo, bhi); the earliest start
// in `a` wins ties, then the earliest in `b`.
class LongestMatchFinder {
 public:
  LongestMatchFinder(const std::u32string& a, const std::u32string& b)
      : a_(a), b_(b), len_(b.size() + 1, 0), next_len_(b.size() + 1, 0) {
    for (std::size_t j = 0; j < b_.size(); ++j) positions_[b_[j]].push_back(j);
  }

  Block Find(std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) {
    Block best{alo, blo, 0};
    // len_[j + 1] = length of the match ending at a[i - 1], b[j].
    for (std::size_t i = alo; i < ahi; ++i) {
      touched_next_.clear();
      auto it = positions_.find(a_[i]);
      if (it != positions_.end()) {
        for (std::size_t j : it->second) {
          if (j < blo) continue;
          if (j >= bhi) break;
          std::size_t k = len_[j] + 1;
          next_len_[j + 1] = k;
          touched_next_.push_back(j + 1);
          if (k > best.size) best = Block{i + 1 - k, j + 1 - k, k};
        }
      }
      for (std::size_t idx : touched_) len_[idx] = 0;
      std::swap(len_, next_len_);
      std::swap(touched_, touched_next_);
    }
    for (std::size_t idx : touched_) len_[idx] = 0;
    touched_.clear();
    return best;
  }

 private:
  const std::u32string& a_;
  const std::u32string& b_;
  std::unordered_map<char32_t, std::vector<std::size_t>> positions_;
  std::vector<std::size_t> len_;
  std::vector<std::size_t> next_len_;
  std::vector<std::size_t> touched_;
  std::vector<std::size_t> touched_next_;
};

}  // namespace

double NgramOverlap(std::string_view a, std::string_view b, std::size_t n,
                    OverlapDenominator denominator) {
  if (n < 1) throw ConfigError("n-gram order must be >= 1");
  std::vector<std::string_view> ta = WhitespaceTokens(a);
  std::vector<std::string_view> tb = WhitespaceTokens(b);
  if (!ta.empty() && ta == tb) return 1.0;
  auto ga = NgramSet(ta, n);
  auto gb = NgramSet(tb, n);
  if (ga.empty() || gb.empty()) return 0.0;
  const std::size_t common = IntersectionSize(ga, gb);
  const std::size_t denom = denominator == OverlapDenominator::kMin
                                ? std::min(ga.size(), gb.size())
                                : ga.size() + gb.size() - common;
  return static_cast<double>(common) / static_cast<double>(std::max<std::size_t>(1, denom));
}

double RougeLF(std::string_view a, std::string_view b) {
  std::vector<std::string_view> ta = WhitespaceTokens(a);
  std::vector<std::string_view> tb = WhitespaceTokens(b);
  if (ta.empty() || tb.empty()) return 0.0;
  const double lcs = static_cast<double>(LcsLength(ta, tb));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(tb.size());
  const double recall = lcs / static_cast<double>(ta.size());
  return 2.0 * precision * recall / (precision + recall);
}

double JaccardTokens(std::string_view a, std::string_view b) {
  std::vector<std::string_view> ta = WhitespaceTokens(a);
  std::vector<std::string_view> tb = WhitespaceTokens(b);
  std::set<std::string_view> sa(ta.begin(), ta.end());
  std::set<std::string_view> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  const std::size_t common = IntersectionSize(sa, sb);
  return static_cast<double>(common) /
         static_cast<double>(sa.size() + sb.size() - common);
}

double GestaltRatio(std::string_view a, std::string_view b) {
  const std::u32string ua = DecodeUtf8(a);
  const std::u32string ub = DecodeUtf8(b);
  const std::size_t total = ua.size() + ub.size();
  if (total == 0) return 1.0;
  LongestMatchFinder finder(ua, ub);
  std::size_t matched = 0;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>,
                        std::pair<std::size_t, std::size_t>>>
      pending{{{0, ua.size()}, {0, ub.size()}}};
  while (!pending.empty()) {
    auto [ra, rb] = pending.back();
    pending.pop_back();
    Block block = finder.Find(ra.first, ra.second, rb.first, rb.second);
    if (block.size == 0) continue;
    matched += block.size;
    if (ra.first < block.a && rb.first < block.b) {
      pending.push_back({{ra.first, block.a}, {rb.first, block.b}});
    }
    if (block.a + block.size < ra.second && block.b + block.size < rb.second) {
      pending.push_back({{block.a + block.size, ra.second},
                         {block.b + block.size, rb.second}});
    }
  }
  return 2.0 * static_cast<double>(matched) / static_cast<double>(total);
}

std::string NormalizeForExact(std::string_view text,
                              const NormalizationConfig& config) {
  std::string out = config.nfc ? NfcNormalize(text) : std::string(text);
  if (config.collapse_whitespace) {
    out = CollapseWhitespace(out);
  } else {
    out = std::string(Trim(out));
  }
  if (config.lowercase) out = AsciiLower(out);
  return out;
}

bool IsExactDuplicate(std::string_view a, std::string_view b,
                      const NormalizationConfig& config) {
  const std::string na = NormalizeForExact(a, config);
  const std::string nb = NormalizeForExact(b, config);
  if (na == nb) return true;
  if (!config.containment || na.empty() || nb.empty()) return false;
  return na.find(nb) != std::string::npos || nb.find(na) != std::string::npos;
}

MetricVector ComputeMetrics(std::string_view a, std::string_view b,
                            OverlapDenominator denominator) {
  const NormalizationConfig config;
  const std::string na = NormalizeForExact(a, config);
  const std::string nb = NormalizeForExact(b, config);
  MetricVector m;
  m.ngram2 = NgramOverlap(na, nb, 2, denominator);
  m.ngram3 = NgramOverlap(na, nb, 3, denominator);
  m.rouge_l_f = RougeLF(na, nb);
  m.jaccard = JaccardTokens(na, nb);
  m.gestalt = GestaltRatio(na, nb);
  m.exact = !na.empty() && na == nb;
  return m;
}

}  // namespace dupaudit
