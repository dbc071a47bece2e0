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

#include "dupaudit/synthetic_dupes.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "dupaudit/errors.h"

namespace dupaudit {
namespace {

std::string Word(std::mt19937_64& rng) {
  static const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "pe", "su"};
  std::string w;
  for (std::size_t i = 0, n = 2 + rng() % 3; i < n; ++i) w += kSyllables[rng() % 10];
  return w;
}

// Random puzzle text with optional preamble/trailer and continuation lines.
std::string RandomPuzzle(std::mt19937_64& rng, std::size_t n_clues) {
  std::string out;
  if (rng() % 2) out += "There are " + Word(rng) + " houses.\n";
  for (std::size_t i = 1; i <= n_clues; ++i) {
    out += (rng() % 4 == 0 ? "  " : "") + std::to_string(i) + (rng() % 2 ? ". " : ") ");
    for (std::size_t w = 0, n = 3 + rng() % 8; w < n; ++w) out += (w ? " " : "") + Word(rng);
    if (rng() % 6 == 0) out += "\n   and " + Word(rng);
    if (i < n_clues) out += "\n";
  }
  switch (rng() % 3) {
    case 0: out += "\nWho owns the " + Word(rng) + "?"; break;
    case 1: out += "\n"; break;
    default: break;
  }
  return out;
}

TEST(ParsePuzzleTest, PreambleCluesTrailer) {
  PuzzleDocument doc = ParsePuzzle("Intro\n1. A\n2. B\nEnd");
  EXPECT_EQ(doc.preamble, "Intro");
  EXPECT_EQ(doc.ClueTexts(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(doc.trailer, "End");
  EXPECT_EQ(doc.Render(), "Intro\n1. A\n2. B\nEnd");
}

TEST(ParsePuzzleTest, SingleClueAndContinuations) {
  PuzzleDocument one = ParsePuzzle("1. only");
  EXPECT_EQ(one.clues.size(), 1u);
  EXPECT_FALSE(one.preamble.has_value());
  PuzzleDocument cont = ParsePuzzle("1) first\n   more\n2) second");
  ASSERT_EQ(cont.clues.size(), 2u);
  EXPECT_EQ(cont.clues[0].text, "first\n   more");
  EXPECT_EQ(cont.clues[0].delimiter, ")");
  PuzzleDocument tail = ParsePuzzle("1. a\n2. b\n  still b\nQuestion?\n");
  EXPECT_EQ(tail.clues[1].text, "b\n  still b");
  EXPECT_EQ(tail.trailer, "Question?\n");
}

TEST(ParsePuzzleTest, Errors) {
  EXPECT_THROW(ParsePuzzle("no list here"), ParseError);
  EXPECT_THROW(ParsePuzzle("1. a\n3. b"), ParseError);
  EXPECT_THROW(ParsePuzzle("2. a\n3. b"), ParseError);
  EXPECT_THROW(ParsePuzzle("01. a\n2. b"), ParseError);
  EXPECT_THROW(ParsePuzzle("1. a", ClueGrammar{"^(\\d+)\\."}), ConfigError);
}

TEST(ParsePuzzleTest, RenderRoundTripsFuzzedDocuments) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 300; ++t) {
    std::string text = RandomPuzzle(rng, 1 + rng() % 9);
    EXPECT_EQ(ParsePuzzle(text).Render(), text) << text;
  }
}

TEST(ShuffleTest, PermutesTextsKeepsNumbering) {
  std::mt19937_64 gen(32);
  for (int t = 0; t < 200; ++t) {
    PuzzleDocument doc = ParsePuzzle(RandomPuzzle(gen, 1 + gen() % 9));
    Rng rng(t);
    PuzzleDocument s = ShuffleClues(doc, rng);
    auto a = doc.ClueTexts(), b = s.ClueTexts();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < s.clues.size(); ++i) EXPECT_EQ(s.clues[i].number, i + 1);
    EXPECT_EQ(ParsePuzzle(s.Render()).ClueTexts(), s.ClueTexts());
    EXPECT_EQ(s.preamble, doc.preamble);
    EXPECT_EQ(s.trailer, doc.trailer);
  }
  Rng rng(1);
  PuzzleDocument one = ParsePuzzle("1. x");
  EXPECT_EQ(ShuffleClues(one, rng).Render(), "1. x");
}

TEST(ShuffleTest, PermutationsAreUniform) {
  PuzzleDocument doc = ParsePuzzle("1. A\n2. B\n3. C");
  std::map<std::vector<std::string>, int> counts;
  for (int seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    ++counts[ShuffleClues(doc, rng).ClueTexts()];
  }
  ASSERT_EQ(counts.size(), 6u);
  double mean = 1000.0 / 6, sd = std::sqrt(1000.0 * (1.0 / 6) * (5.0 / 6));
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c, mean, 3 * sd);
}

SubstitutionPlan ColourPlan() {
  return SubstitutionPlan::FromJson(nlohmann::json::parse(R"({
    "substitution_plan": {
      "Color": {"new_category": "Shape", "values": {"red": "square", "green": "circle"}}
    }})"));
}

TEST(SubstitutionTest, BoundaryRule) {
  SubstitutionPlan plan = ColourPlan();
  EXPECT_EQ(ApplySubstitutionPlan("the red house", plan), "the square house");
  EXPECT_EQ(ApplySubstitutionPlan("a redwood and a red", plan), "a redwood and a square");
  EXPECT_EQ(ApplySubstitutionPlan("Color: green.", plan), "Shape: circle.");
}

TEST(SubstitutionTest, LongestMatchFirst) {
  SubstitutionPlan plan = SubstitutionPlan::FromJson(nlohmann::json::parse(R"({
    "Drink": {"new_category": "Tool", "values": {"tea": "saw", "green tea": "hammer"}}})"));
  EXPECT_EQ(ApplySubstitutionPlan("green tea or tea", plan), "hammer or saw");
}

TEST(SubstitutionTest, InverseRestoresFuzzedText) {
  std::mt19937_64 rng(33);
  SubstitutionPlan plan = ColourPlan();
  const std::vector<std::string> terms = {"red", "green", "Color", "reddish", "greenery"};
  for (int t = 0; t < 300; ++t) {
    std::string text;
    for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i) {
      text += (i ? (rng() % 3 ? " " : ", ") : "") + (rng() % 3 ? Word(rng) : terms[rng() % terms.size()]);
    }
    std::string out = ApplySubstitutionPlan(text, plan);
    EXPECT_EQ(ApplySubstitutionPlan(out, plan.Inverse()), text);
  }
}

TEST(SubstitutionTest, AmbiguityAndValidation) {
  SubstitutionPlan plan = ColourPlan();
  EXPECT_THROW(ApplySubstitutionPlan("a red square", plan), Error);
  SubstitutionPlan dup = SubstitutionPlan::FromJson(nlohmann::json::parse(R"({
    "A": {"new_category": "B", "values": {"x": "y", "z": "y"}}})"));
  EXPECT_THROW(dup.Validate(), ConfigError);
  SubstitutionPlan chain = SubstitutionPlan::FromJson(nlohmann::json::parse(R"({
    "A": {"new_category": "B", "values": {"x": "z", "z": "w"}}})"));
  EXPECT_THROW(chain.Validate(), ConfigError);
  EXPECT_EQ(SubstitutionPlan::FromJson(plan.ToJson()).ToJson(), plan.ToJson());
}

TEST(SubstitutionTest, CaseVariants) {
  SubstitutionPlan plan = ColourPlan();
  SubstitutionOptions opts;
  opts.case_variants = true;
  EXPECT_EQ(ApplySubstitutionPlan("Red is red", plan, opts), "Square is square");
}

TEST(SubstitutionTest, SolutionMapsThroughPlan) {
  SubstitutionPlan plan = ColourPlan();
  nlohmann::json solution = {{"Color", {{"House 1", "red"}, {"House 2", "green"}}}};
  nlohmann::json out = TransformSolution(solution, plan);
  nlohmann::json expected = {{"Shape", {{"House 1", "square"}, {"House 2", "circle"}}}};
  EXPECT_EQ(out, expected);
  EXPECT_EQ(TransformSolution(out, plan.Inverse()), solution);
}

TEST(ChainTest, OrderingRules) {
  EXPECT_EQ(ParseChain("shuffle,substitute,paraphrase").size(), 3u);
  EXPECT_THROW(ParseChain("substitute,shuffle"), ConfigError);
  EXPECT_THROW(ParseChain("paraphrase,substitute"), ConfigError);
  EXPECT_THROW(ParseChain("shuffle,shuffle"), ConfigError);
  EXPECT_THROW(ParseChain(""), ConfigError);
  EXPECT_THROW(ParseChain("rotate"), ConfigError);
}

TEST(PromptTest, BuildsRequestDocuments) {
  nlohmann::json p = BuildTransformPrompt("puzzle text", TransformPrompt::kPuzzleParaphrase);
  EXPECT_NE(p["prompt"].get<std::string>().find("puzzle text"), std::string::npos);
  EXPECT_EQ(ParseTransformPrompt("substitution-plan"), TransformPrompt::kSubstitutionPlan);
  EXPECT_THROW(BuildTransformPrompt("x", TransformPrompt::kSubstitutionPlan), ConfigError);
  EXPECT_THROW(BuildTransformPrompt("x", TransformPrompt::kSubstitutionApply), ConfigError);
  nlohmann::json plan = BuildTransformPrompt("x", TransformPrompt::kSubstitutionPlan,
                                             nlohmann::json{{"Color", {{"1", "red"}}}});
  EXPECT_NE(plan["prompt"].get<std::string>().find("red"), std::string::npos);
  EXPECT_THROW(ParseTransformPrompt("summarize"), ConfigError);
}

TEST(ValidateVariantTest, RejectsNearCopies) {
  std::string original = "1. The cat lives next to the dog.\n2. The fish is first.";
  VariantValidation same = ValidateVariant(original, original, {});
  EXPECT_FALSE(same.accepted);
  EXPECT_DOUBLE_EQ(same.metrics.gestalt, 1.0);
  std::string other = "Completely unrelated wording about trains and weather patterns.";
  EXPECT_TRUE(ValidateVariant(other, original, {}).accepted);
  std::vector<std::string> siblings = {other};
  VariantValidation sib = ValidateVariant(other, original, siblings);
  EXPECT_FALSE(sib.accepted);
  EXPECT_DOUBLE_EQ(sib.max_sibling_gestalt, 1.0);
}

TEST(ValidateVariantTest, StructuralChecks) {
  std::string original = "Intro\n1. red first\n2. green second\n3. blue third\nEnd";
  Rng rng(4);
  PuzzleDocument shuffled = ShuffleClues(ParsePuzzle(original), rng);
  StructuralContext ctx;
  ctx.chain = {TransformKind::kShuffle};
  VariantValidation ok = ValidateVariant(shuffled.Render(), original, {}, 1.0, ctx);
  EXPECT_TRUE(ok.structural_checked);
  EXPECT_TRUE(ok.structural_ok);
  VariantValidation broken = ValidateVariant("Intro\n1. red first\n2. purple\n3. blue third\nEnd",
                                             original, {}, 1.0, ctx);
  EXPECT_FALSE(broken.structural_ok);
  EXPECT_FALSE(broken.accepted);

  ctx.chain = {TransformKind::kSubstitute};
  ctx.plan = ColourPlan();
  ctx.original_solution = nlohmann::json{{"Color", {{"1", "red"}}}};
  ctx.variant_solution = TransformSolution(*ctx.original_solution, *ctx.plan);
  std::string substituted = ApplySubstitutionPlan(original, *ctx.plan);
  VariantValidation sub = ValidateVariant(substituted, original, {}, 1.0, ctx);
  EXPECT_TRUE(sub.structural_ok) << (sub.reasons.empty() ? "" : sub.reasons[0]);
  ctx.variant_solution = nlohmann::json{{"Shape", {{"1", "circle"}}}};
  EXPECT_FALSE(ValidateVariant(substituted, original, {}, 1.0, ctx).structural_ok);
}

TEST(ShuffleVariantsTest, SiblingsAreDistinct) {
  std::mt19937_64 gen(34);
  std::string text = RandomPuzzle(gen, 8);
  Rng rng(5);
  auto variants = ShuffleVariants("p1", text, 4, rng, 0.99);
  ASSERT_EQ(variants.size(), 4u);
  for (const auto& v : variants) {
    EXPECT_EQ(v.original_id, "p1");
    nlohmann::json j = v.ToJson();
    EXPECT_EQ(j["chain"], nlohmann::json::array({"shuffle"}));
    EXPECT_TRUE(j.contains("metrics"));
  }
}

TEST(ExternalCheckTest, ExitStatus) {
  EXPECT_TRUE(RunExternalCheck("test -s", "content"));
  EXPECT_FALSE(RunExternalCheck("false", "content"));
}

}  // namespace
}  // namespace dupaudit
