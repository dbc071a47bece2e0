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

#ifndef DUPAUDIT_SYNTHETIC_DUPES_H_
#define DUPAUDIT_SYNTHETIC_DUPES_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dupaudit/lexical_metrics.h"
#include "dupaudit/reservoir_sampler.h"
#include "json.hpp"

namespace dupaudit {

// Regex with four groups: indent, digits, delimiter, gap. The remainder of
// the line is the clue text.
struct ClueGrammar {
  std::string pattern = R"(^(\s*)(\d+)([\.\)])(\s+))";
};

struct Clue {
  std::size_t number = 0;
  std::string indent;
  std::string delimiter;
  std::string gap;
  // Rest of the numbered line, plus any unnumbered lines before the next
  // clue joined with '\n'. After the last clue only indented lines count as
  // continuation; the rest is the trailer.
  std::string text;
};

struct PuzzleDocument {
  std::optional<std::string> preamble;  // lines before the first clue
  std::vector<Clue> clues;
  std::optional<std::string> trailer;   // lines after the last clue

  // Exact inverse of ParsePuzzle for unshuffled documents.
  std::string Render() const;
  std::vector<std::string> ClueTexts() const;
};

// Throws ParseError when no numbered line exists, numbers are not 1..n in
// order, or a number has leading zeros.
PuzzleDocument ParsePuzzle(std::string_view text, const ClueGrammar& grammar = {});

// Permutes clue texts; numbers and per-position formatting stay put. A clue
// with unindented continuation lines moved to the end no longer re-parses
// the same way.
PuzzleDocument ShuffleClues(const PuzzleDocument& doc, Rng& rng);

struct CategoryMapping {
  std::string category;
  std::string new_category;
  std::vector<std::pair<std::string, std::string>> values;
};

struct SubstitutionPlan {
  std::vector<CategoryMapping> categories;

  // Accepts {"substitution_plan": {...}} or the inner object.
  static SubstitutionPlan FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;

  // Old -> new for every category name and value.
  std::vector<std::pair<std::string, std::string>> Terms() const;
  SubstitutionPlan Inverse() const;
  // Throws ConfigError on empty terms, an old term mapped twice, a
  // non-injective mapping, or a new term equal to any old term.
  void Validate() const;
};

struct SubstitutionOptions {
  // Also rewrite the lower- and upper-initial forms of each term.
  bool case_variants = false;
};

// Longest match first; a term edge that is alphanumeric must sit next to a
// non-alphanumeric character or the text boundary. Throws
// Error("ambiguous plan ...") when a new term already occurs in the text or
// the inverse plan would not restore the input.
std::string ApplySubstitutionPlan(std::string_view text, const SubstitutionPlan& plan,
                                  const SubstitutionOptions& options = {});

// Maps object keys and whole string values through the plan's terms.
nlohmann::json TransformSolution(const nlohmann::json& solution,
                                 const SubstitutionPlan& plan);

enum class TransformKind { kShuffle, kSubstitute, kParaphrase };

std::string_view TransformKindName(TransformKind kind);
TransformKind ParseTransformKind(std::string_view name);

// Non-empty, each kind at most once, shuffle first and paraphrase last.
// Throws ConfigError otherwise.
void ValidateChain(std::span<const TransformKind> chain);
// Comma separated, e.g. "shuffle,substitute".
std::vector<TransformKind> ParseChain(std::string_view text);

enum class TransformPrompt {
  kPuzzleParaphrase,
  kCodeParaphrase,
  kSubstitutionPlan,
  kSubstitutionApply,
};

TransformPrompt ParseTransformPrompt(std::string_view name);

// {kind, system, prompt, parameters}. `solution_json` fills the plan prompt
// and `plan_json` the apply prompt; a missing required one is a ConfigError.
nlohmann::json BuildTransformPrompt(std::string_view item_text, TransformPrompt kind,
                                    const std::optional<nlohmann::json>& solution_json = {},
                                    const std::optional<nlohmann::json>& plan_json = {});

struct StructuralContext {
  std::vector<TransformKind> chain;
  std::optional<SubstitutionPlan> plan;
  std::optional<nlohmann::json> original_solution;
  std::optional<nlohmann::json> variant_solution;
  ClueGrammar grammar;
};

struct VariantValidation {
  bool accepted = false;
  MetricVector metrics;  // versus the original
  double max_sibling_gestalt = 0.0;
  bool structural_checked = false;
  bool structural_ok = true;
  std::vector<std::string> reasons;
};

VariantValidation ValidateVariant(std::string_view variant, std::string_view original,
                                  std::span<const std::string> siblings,
                                  double max_gestalt = 0.85,
                                  const std::optional<StructuralContext>& structure = {});

nlohmann::json MetricVectorToJson(const MetricVector& m);

struct DuplicateVariant {
  std::string original_id;
  std::vector<TransformKind> chain;
  std::string text;
  VariantValidation validation;

  nlohmann::json ToJson() const;
};

// `count` shuffled variants of one puzzle, each validated against the
// original and the variants before it.
std::vector<DuplicateVariant> ShuffleVariants(const std::string& original_id,
                                              std::string_view text, std::size_t count,
                                              Rng& rng, double max_gestalt = 0.85,
                                              const ClueGrammar& grammar = {});

// Runs `command` with the path of a file holding `text` appended as its last
// argument; true on exit status 0.
bool RunExternalCheck(const std::string& command, std::string_view text);

}  // namespace dupaudit

#endif  // DUPAUDIT_SYNTHETIC_DUPES_H_
