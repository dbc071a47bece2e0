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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dupaudit/chunk_id.h"
#include "dupaudit/csv.h"
#include "dupaudit/errors.h"
#include "dupaudit/half.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

TEST(TextTest, TrimAndCollapse) {
  EXPECT_EQ(Trim("  a b \n"), "a b");
  EXPECT_EQ(Trim(" \t\n"), "");
  EXPECT_EQ(CollapseWhitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(AsciiLower("AbC \xC3\x89"), "abc \xC3\x89");
}

TEST(TextTest, WhitespaceTokens) {
  std::vector<std::string_view> t = WhitespaceTokens("  the cat\tsat\n");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], "the");
  EXPECT_EQ(t[2], "sat");
  EXPECT_TRUE(WhitespaceTokens("   ").empty());
}

TEST(TextTest, NfcComposesDecomposedForms) {
  const std::string decomposed = "e\xCC\x81";  // e + combining acute
  const std::string composed = "\xC3\xA9";
  EXPECT_EQ(NfcNormalize(decomposed), composed);
  EXPECT_EQ(NfcNormalize(composed), composed);
  EXPECT_EQ(NfcNormalize("plain"), "plain");
}

TEST(TextTest, DecodeUtf8) {
  EXPECT_EQ(DecodeUtf8("a\xC3\xA9"), std::u32string(U"aé"));
  EXPECT_EQ(DecodeUtf8("\xF0\x9F\x98\x80"), std::u32string(U"\U0001F600"));
  EXPECT_EQ(DecodeUtf8("\xC3"), std::u32string(U"�"));
  EXPECT_EQ(DecodeUtf8("\x80x"), std::u32string(U"�x"));
}

TEST(TextTest, SubstituteSlotsIsSinglePass) {
  EXPECT_EQ(SubstituteSlots("<{a}|{b}>", {{"a", "{b}"}, {"b", "B"}}), "<{b}|B>");
  EXPECT_EQ(SubstituteSlots("{ \"x\": 1 } {a}", {{"a", "A"}}), "{ \"x\": 1 } A");
  EXPECT_EQ(SubstituteSlots("{unknown}", {{"a", "A"}}), "{unknown}");
}

TEST(TextTest, CountOccurrences) {
  EXPECT_EQ(CountOccurrences("aaaa", "aa"), 2u);
  EXPECT_EQ(CountOccurrences("abc", ""), 0u);
  EXPECT_EQ(CountOccurrences("{x} and {x}", "{x}"), 2u);
}

TEST(CsvTest, QuoteRoundTrip) {
  const std::vector<std::string> fields = {"plain", "a,b", "say \"hi\"", "line\nbreak", ""};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += CsvField(fields[i]);
  }
  EXPECT_EQ(SplitCsvLine(line), fields);
  EXPECT_EQ(CsvField("plain"), "plain");
  EXPECT_THROW(SplitCsvLine("\"open"), ParseError);
}

TEST(ChunkIdTest, HexRoundTripAndOrdering) {
  ChunkId a = ComputeChunkId("ds", "hello world");
  EXPECT_EQ(ChunkId::FromHex(a.ToHex()), a);
  EXPECT_EQ(a.ToHex().size(), 32u);
  EXPECT_THROW(ChunkId::FromHex("abc"), ParseError);
  EXPECT_THROW(ChunkId::FromHex(std::string(32, 'g')), ParseError);
  ChunkId b = ComputeChunkId("ds", "hello world!");
  EXPECT_EQ(a < b, a.ToHex() < b.ToHex());
}

TEST(ChunkIdTest, NormalizationAndDatasetScope) {
  EXPECT_EQ(ComputeChunkId("ds", "  caf\xC3\xA9\n"), ComputeChunkId("ds", "cafe\xCC\x81"));
  EXPECT_NE(ComputeChunkId("a", "text"), ComputeChunkId("b", "text"));
  // The zero separator keeps ("ab","c") and ("a","bc") apart.
  EXPECT_NE(ComputeChunkId("ab", "c"), ComputeChunkId("a", "bc"));
}

TEST(ChunkIdTest, ContentHashIsStable) {
  EXPECT_EQ(ContentHashHex("abc"), ContentHashHex("abc"));
  EXPECT_NE(ContentHashHex("abc"), ContentHashHex("abd"));
  EXPECT_EQ(ContentHashHex("").size(), 32u);
}

// Decodes binary16 bits with ldexp, independent of the library.
double OracleHalf(std::uint16_t bits) {
  const int sign = bits >> 15;
  const int exp = (bits >> 10) & 0x1F;
  const int frac = bits & 0x3FF;
  double v;
  if (exp == 0) {
    v = std::ldexp(frac, -24);
  } else if (exp == 31) {
    v = frac == 0 ? std::numeric_limits<double>::infinity()
                  : std::numeric_limits<double>::quiet_NaN();
  } else {
    v = std::ldexp(1024 + frac, exp - 25);
  }
  return sign ? -v : v;
}

TEST(HalfTest, DecodeMatchesOracleForAllPatterns) {
  for (std::uint32_t b = 0; b < 65536; ++b) {
    const double want = OracleHalf(static_cast<std::uint16_t>(b));
    const float got = HalfToFloat(Half{static_cast<std::uint16_t>(b)});
    if (std::isnan(want)) {
      EXPECT_TRUE(std::isnan(got)) << b;
    } else {
      ASSERT_EQ(static_cast<double>(got), want) << b;
    }
  }
}

TEST(HalfTest, EncodeIsIdentityOnRepresentableValues) {
  for (std::uint32_t b = 0; b < 65536; ++b) {
    const auto bits = static_cast<std::uint16_t>(b);
    if (std::isnan(OracleHalf(bits))) continue;
    ASSERT_EQ(FloatToHalf(static_cast<float>(OracleHalf(bits))).bits, bits) << b;
  }
}

TEST(HalfTest, EncodeRoundsToNearestEven) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> dist(-70000.0f, 70000.0f);
  std::uniform_real_distribution<float> small(-1e-4f, 1e-4f);
  for (int i = 0; i < 20000; ++i) {
    const float x = (i % 2) ? dist(rng) : small(rng);
    const Half h = FloatToHalf(x);
    const double got = OracleHalf(h.bits);
    if (std::fabs(x) >= 65520.0f) {
      EXPECT_TRUE(std::isinf(got)) << x;
      continue;
    }
    // No representable neighbour is strictly closer.
    for (int delta : {-1, 1}) {
      const auto nb = static_cast<std::uint16_t>(h.bits + delta);
      const double other = OracleHalf(nb);
      if (std::isnan(other) || std::isinf(other)) continue;
      if ((nb & 0x7FFF) == 0x7FFF || ((h.bits ^ nb) & 0x8000)) continue;
      ASSERT_LE(std::fabs(got - x), std::fabs(other - x)) << x;
    }
  }
  // Halfway between 1 and the next half rounds to even (1.0).
  EXPECT_EQ(FloatToHalf(1.0f + std::ldexp(1.0f, -11)).bits, 0x3C00);
  EXPECT_EQ(FloatToHalf(1.0f + 3 * std::ldexp(1.0f, -11)).bits, 0x3C02);
  EXPECT_EQ(FloatToHalf(1e6f).bits, 0x7C00);
  EXPECT_EQ(FloatToHalf(-1e6f).bits, 0xFC00);
}

}  // namespace
}  // namespace dupaudit
