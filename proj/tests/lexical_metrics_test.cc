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
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dupaudit/text.h"

namespace dupaudit {
namespace {

// Reference gestalt: brute-force longest common substring, earliest in a then
// earliest in b, recursing on both sides.
std::size_t MatchedChars(const std::u32string& a, const std::u32string& b) {
  std::size_t best = 0, bi = 0, bj = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::size_t len = 0;
      while (i + len < a.size() && j + len < b.size() && a[i + len] == b[j + len]) ++len;
      if (len > best) {
        best = len;
        bi = i;
        bj = j;
      }
    }
  }
  if (best == 0) return 0;
  return best + MatchedChars(a.substr(0, bi), b.substr(0, bj)) +
         MatchedChars(a.substr(bi + best), b.substr(bj + best));
}

double OracleGestalt(std::string_view a, std::string_view b) {
  std::u32string x = DecodeUtf8(a), y = DecodeUtf8(b);
  if (x.empty() && y.empty()) return 1.0;
  return 2.0 * MatchedChars(x, y) / static_cast<double>(x.size() + y.size());
}

double OracleRouge(std::string_view a, std::string_view b) {
  auto x = WhitespaceTokens(a), y = WhitespaceTokens(b);
  if (x.empty() || y.empty()) return 0.0;
  std::vector<std::vector<std::size_t>> dp(x.size() + 1, std::vector<std::size_t>(y.size() + 1, 0));
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      dp[i][j] = x[i - 1] == y[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  double lcs = static_cast<double>(dp[x.size()][y.size()]);
  if (lcs == 0) return 0.0;
  double p = lcs / y.size(), r = lcs / x.size();
  return 2 * p * r / (p + r);
}

std::string RandomText(std::mt19937_64& rng, std::size_t max_tokens, int alphabet) {
  std::size_t n = 1 + rng() % max_tokens;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    std::size_t len = 1 + rng() % 3;
    for (std::size_t c = 0; c < len; ++c) out += static_cast<char>('a' + rng() % alphabet);
  }
  return out;
}

TEST(LexicalTest, HandCases) {
  EXPECT_DOUBLE_EQ(JaccardTokens("a b c", "a b d"), 0.5);
  EXPECT_NEAR(RougeLF("the cat sat", "the cat ran"), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(NgramOverlap("a b c", "a b d", 2), 0.5);
  EXPECT_DOUBLE_EQ(NgramOverlap("a b c", "a b d", 2, OverlapDenominator::kUnion), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(GestaltRatio("abcd", "bcde"), 0.75);
}

TEST(LexicalTest, EdgeCases) {
  EXPECT_DOUBLE_EQ(JaccardTokens("", ""), 1.0);
  EXPECT_DOUBLE_EQ(JaccardTokens("a", ""), 0.0);
  EXPECT_DOUBLE_EQ(RougeLF("", "a"), 0.0);
  EXPECT_DOUBLE_EQ(GestaltRatio("", ""), 1.0);
  EXPECT_DOUBLE_EQ(GestaltRatio("abc", ""), 0.0);
  EXPECT_DOUBLE_EQ(NgramOverlap("a", "a", 3), 1.0);
  EXPECT_DOUBLE_EQ(NgramOverlap("a", "b", 3), 0.0);
  EXPECT_DOUBLE_EQ(NgramOverlap("x y", "x y z", 3), 0.0);
  EXPECT_DOUBLE_EQ(GestaltRatio("abc", "xyz"), 0.0);
}

TEST(LexicalTest, GestaltCountsCodePoints) {
  // Two-byte characters count once each.
  EXPECT_DOUBLE_EQ(GestaltRatio("\xC3\xA9t\xC3\xA9", "\xC3\xA9t"), 2.0 * 2 / 5);
}

TEST(LexicalTest, GestaltMatchesReference) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    std::string a = RandomText(rng, 8, 3), b = RandomText(rng, 8, 3);
    EXPECT_DOUBLE_EQ(GestaltRatio(a, b), OracleGestalt(a, b)) << a << " | " << b;
  }
}

TEST(LexicalTest, RougeMatchesDynamicProgram) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    std::string a = RandomText(rng, 12, 2), b = RandomText(rng, 12, 2);
    EXPECT_NEAR(RougeLF(a, b), OracleRouge(a, b), 1e-12) << a << " | " << b;
  }
}

TEST(LexicalTest, JaccardMatchesSetArithmetic) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::string a = RandomText(rng, 10, 2), b = RandomText(rng, 10, 2);
    std::set<std::string_view> x, y, u;
    for (auto t : WhitespaceTokens(a)) x.insert(t);
    for (auto t : WhitespaceTokens(b)) y.insert(t);
    std::size_t inter = 0;
    for (auto t : x) inter += y.count(t);
    u = x;
    u.insert(y.begin(), y.end());
    EXPECT_DOUBLE_EQ(JaccardTokens(a, b), static_cast<double>(inter) / u.size());
  }
}

TEST(LexicalTest, IdentityScoresOne) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    std::string s = RandomText(rng, 30, 26);
    MetricVector m = ComputeMetrics(s, s);
    EXPECT_DOUBLE_EQ(m.ngram2, 1.0);
    EXPECT_DOUBLE_EQ(m.ngram3, 1.0);
    EXPECT_DOUBLE_EQ(m.rouge_l_f, 1.0);
    EXPECT_DOUBLE_EQ(m.jaccard, 1.0);
    EXPECT_DOUBLE_EQ(m.gestalt, 1.0);
    EXPECT_TRUE(m.exact);
  }
}

TEST(LexicalTest, SymmetryAndRange) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 300; ++trial) {
    std::string a = RandomText(rng, 10, 4), b = RandomText(rng, 10, 4);
    for (double v : {NgramOverlap(a, b, 2), RougeLF(a, b), JaccardTokens(a, b), GestaltRatio(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_DOUBLE_EQ(NgramOverlap(a, b, 2), NgramOverlap(b, a, 2));
    EXPECT_DOUBLE_EQ(JaccardTokens(a, b), JaccardTokens(b, a));
    EXPECT_NEAR(RougeLF(a, b), RougeLF(b, a), 1e-12);
  }
}

TEST(LexicalTest, GestaltNearSymmetricOnNearDuplicates) {
  // The decomposition is order-sensitive; unrelated strings can differ by
  // much more, so the bound is checked on lightly edited copies.
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 300; ++trial) {
    std::string a = RandomText(rng, 60, 26);
    std::string b = a;
    for (char& c : b) {
      if (c != ' ' && rng() % 20 == 0) c = static_cast<char>('a' + rng() % 26);
    }
    EXPECT_LE(std::abs(GestaltRatio(a, b) - GestaltRatio(b, a)), 0.05) << a << " | " << b;
    EXPECT_EQ(GestaltRatio(a, a), 1.0);
  }
  EXPECT_EQ(GestaltRatio("abc def", "xyz uvw"), GestaltRatio("xyz uvw", "abc def"));
}

TEST(ExactTest, NormalizationOptions) {
  NormalizationConfig def;
  EXPECT_TRUE(IsExactDuplicate("a  b\n c", "a b c", def));
  EXPECT_FALSE(IsExactDuplicate("A b", "a b", def));
  NormalizationConfig lower = def;
  lower.lowercase = true;
  EXPECT_TRUE(IsExactDuplicate("A b", "a b", lower));
  // NFC: precomposed vs combining acute.
  EXPECT_TRUE(IsExactDuplicate("caf\xC3\xA9", "cafe\xCC\x81", def));
  NormalizationConfig contain = def;
  contain.containment = true;
  EXPECT_FALSE(IsExactDuplicate("b c", "a b c d", def));
  EXPECT_TRUE(IsExactDuplicate("b c", "a b c d", contain));
  EXPECT_FALSE(ComputeMetrics("", "").exact);
}

}  // namespace
}  // namespace dupaudit
