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

#ifndef DUPAUDIT_ANNOTATION_H_
#define DUPAUDIT_ANNOTATION_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dupaudit/chunk_id.h"
#include "dupaudit/embed_store.h"
#include "json.hpp"

namespace dupaudit {

enum class MatchType { kExact, kEquivalent, kSubset, kSuperset, kRelated, kUnrelated };

std::string_view MatchTypeName(MatchType type);
// Throws ParseError for an unknown name.
MatchType ParseMatchType(std::string_view name);
// exact, equivalent and subset are duplicates; the rest are not.
bool IsDuplicateType(MatchType type);

struct PairId {
  std::string benchmark_id;
  std::string item_id;
  ChunkId chunk_id;

  // Tab-joined key used for resume bookkeeping.
  std::string Key() const;
  nlohmann::json ToJson() const;
  static PairId FromJson(const nlohmann::json& j);

  auto operator<=>(const PairId&) const = default;
};

struct AnnotationRecord {
  PairId pair;
  bool is_sd = false;
  double confidence = 0.0;
  std::string reasoning;
  MatchType match_type = MatchType::kUnrelated;
  std::string annotator_tag;

  nlohmann::json ToJson() const;
  // Strict inverse of ToJson; throws ParseError.
  static AnnotationRecord FromJson(const nlohmann::json& j);
};

struct JudgeParameters {
  double temperature = 1.0;
  int max_output_tokens = 8192;
  std::string thinking_level = "MEDIUM";
};

// Judge prompt with exactly one {test_text} and one {corpus_text} slot, plus
// the match taxonomy the judge may answer with.
class PromptTemplate {
 public:
  // Throws ConfigError unless both slots occur exactly once.
  PromptTemplate(std::string name, std::string text,
                 std::set<MatchType> taxonomy, JudgeParameters params = {});

  static PromptTemplate Mbpp();
  static PromptTemplate Codeforces();
  // "mbpp" or "codeforces".
  static PromptTemplate Builtin(std::string_view name);

  // Single-pass substitution: slot markers inside the inserted texts are left
  // untouched.
  std::string Render(std::string_view test_text, std::string_view corpus_text) const;

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  const std::set<MatchType>& taxonomy() const { return taxonomy_; }
  const JudgeParameters& params() const { return params_; }

 private:
  std::string name_;
  std::string text_;
  std::set<MatchType> taxonomy_;
  JudgeParameters params_;
};

// JSON schema of the structured judge response, restricted to `taxonomy`.
nlohmann::json AnnotationResponseSchema(const std::set<MatchType>& taxonomy);

// {pair_id, template, prompt, parameters, response_schema}. Throws
// ConfigError when either text is empty.
nlohmann::json BuildAnnotationRequest(const PairId& pair, std::string_view test_text,
                                      std::string_view corpus_text,
                                      const PromptTemplate& tmpl);

enum class ParseStatus { kAccepted, kRejected, kInconsistent };

std::string_view ParseStatusName(ParseStatus status);

struct ParseOutcome {
  ParseStatus status = ParseStatus::kRejected;
  std::optional<AnnotationRecord> record;  // set unless rejected
  std::string reason;
  std::string raw;
};

// Validates one judge response. Out-of-range confidence, unknown or
// out-of-taxonomy match types and malformed documents are rejected; an
// is_sd/match_type disagreement is flagged inconsistent and left as given.
ParseOutcome ParseAnnotationResponse(std::string_view raw, const PairId& pair,
                                     const std::set<MatchType>& taxonomy,
                                     const std::string& annotator_tag);

// Judge contract: one request document in, one raw response document out.
// Throw TransientProviderError for retryable failures and ProviderError for
// permanent ones.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string Evaluate(const nlohmann::json& request) = 0;
  virtual std::string Tag() const = 0;
};

// POSTs the request document and returns the response body.
class HttpJudge : public Judge {
 public:
  explicit HttpJudge(ProviderConfig config);
  std::string Evaluate(const nlohmann::json& request) override;
  std::string Tag() const override;

 private:
  ProviderConfig config_;
};

struct AnnotationPair {
  PairId pair;
  std::string test_text;
  std::string corpus_text;
};

struct AnnotateOptions {
  std::size_t concurrency = 4;
  int max_retries = 3;
  double backoff_seconds = 0.5;
  // Accepted records, one JSON object per line.
  std::filesystem::path records_path;
  // Rejected, inconsistent and failed pairs with reason and raw payload.
  std::filesystem::path failures_path;
};

struct FailureEntry {
  PairId pair;
  std::string status;  // rejected | inconsistent | provider_error
  std::string reason;
  std::string raw;

  nlohmann::json ToJson() const;
  static FailureEntry FromJson(const nlohmann::json& j);
};

struct AnnotateResult {
  std::vector<AnnotationRecord> records;  // previously written and new
  std::vector<FailureEntry> failures;     // previously written and new
  std::size_t resumed = 0;                // pairs skipped as already done
  std::size_t provider_failures = 0;      // new permanent provider failures
};

// Sends every pair not yet present in the ledgers to the judge with bounded
// concurrency and exponential backoff, appending each outcome as soon as it
// is known. Pairs already in either ledger are skipped, so rerunning after a
// crash never duplicates work. Exceptions other than provider errors stop
// the run and are rethrown once in-flight requests finish.
AnnotateResult AnnotatePairs(std::span<const AnnotationPair> pairs, Judge& judge,
                             const PromptTemplate& tmpl,
                             const AnnotateOptions& options);

std::vector<AnnotationRecord> ReadAnnotationRecords(std::istream& in);
std::vector<FailureEntry> ReadFailureEntries(std::istream& in);

// Offline mode: request documents, one per line.
void ExportRequests(std::ostream& out, std::span<const AnnotationPair> pairs,
                    const PromptTemplate& tmpl);
// Reads lines of {"pair_id": {...}, "response": <document or string>}.
std::vector<ParseOutcome> ImportResponses(std::istream& in, const PromptTemplate& tmpl,
                                          const std::string& annotator_tag);

}  // namespace dupaudit

#endif  // DUPAUDIT_ANNOTATION_H_
