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

#include "dupaudit/annotation.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_set>

#include "dupaudit/errors.h"
#include "dupaudit/prompt_templates.h"
#include "dupaudit/text.h"
#include "httplib.h"

namespace dupaudit {
namespace {

constexpr MatchType kAllMatchTypes[] = {
    MatchType::kExact,    MatchType::kEquivalent, MatchType::kSubset,
    MatchType::kSuperset, MatchType::kRelated,    MatchType::kUnrelated};

const std::set<MatchType> kBaseTaxonomy = {
    MatchType::kExact, MatchType::kEquivalent, MatchType::kSubset,
    MatchType::kSuperset, MatchType::kUnrelated};

ParseOutcome Reject(std::string reason, std::string_view raw) {
  ParseOutcome outcome;
  outcome.status = ParseStatus::kRejected;
  outcome.reason = std::move(reason);
  outcome.raw = std::string(raw);
  return outcome;
}

template <typename T, typename Parse>
std::vector<T> ReadJsonLines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    // A torn final line from a crash is ignored; the pair is redone.
    if (j.is_discarded()) continue;
    if (j.contains("_meta")) continue;
    out.push_back(parse(j));
  }
  return out;
}

// Ends a partially written last line so appended records start cleanly.
void TerminateTornLine(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in || in.tellg() <= 0) return;
  in.seekg(-1, std::ios::end);
  char last = 0;
  in.get(last);
  in.close();
  if (last != '\n') std::ofstream(path, std::ios::app) << '\n';
}

}  // namespace

std::string_view MatchTypeName(MatchType type) {
  switch (type) {
    case MatchType::kExact: return "exact";
    case MatchType::kEquivalent: return "equivalent";
    case MatchType::kSubset: return "subset";
    case MatchType::kSuperset: return "superset";
    case MatchType::kRelated: return "related";
    case MatchType::kUnrelated: return "unrelated";
  }
  return "unrelated";
}

MatchType ParseMatchType(std::string_view name) {
  for (MatchType type : kAllMatchTypes) {
    if (MatchTypeName(type) == name) return type;
  }
  throw ParseError("unknown match_type '" + std::string(name) + "'");
}

bool IsDuplicateType(MatchType type) {
  return type == MatchType::kExact || type == MatchType::kEquivalent ||
         type == MatchType::kSubset;
}

std::string PairId::Key() const {
  return benchmark_id + '\t' + item_id + '\t' + chunk_id.ToHex();
}

nlohmann::json PairId::ToJson() const {
  return {{"benchmark_id", benchmark_id},
          {"item_id", item_id},
          {"chunk_id", chunk_id.ToHex()}};
}

PairId PairId::FromJson(const nlohmann::json& j) {
  try {
    return PairId{j.at("benchmark_id").get<std::string>(),
                  j.at("item_id").get<std::string>(),
                  ChunkId::FromHex(j.at("chunk_id").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid pair_id: ") + e.what());
  }
}

nlohmann::json AnnotationRecord::ToJson() const {
  return {{"pair_id", pair.ToJson()},
          {"is_sd", is_sd},
          {"confidence", confidence},
          {"reasoning", reasoning},
          {"match_type", MatchTypeName(match_type)},
          {"annotator_tag", annotator_tag}};
}

AnnotationRecord AnnotationRecord::FromJson(const nlohmann::json& j) {
  try {
    AnnotationRecord r;
    r.pair = PairId::FromJson(j.at("pair_id"));
    r.is_sd = j.at("is_sd").get<bool>();
    r.confidence = j.at("confidence").get<double>();
    r.reasoning = j.value("reasoning", "");
    r.match_type = ParseMatchType(j.at("match_type").get<std::string>());
    r.annotator_tag = j.value("annotator_tag", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid annotation record: ") + e.what());
  }
}

PromptTemplate::PromptTemplate(std::string name, std::string text,
                               std::set<MatchType> taxonomy,
                               JudgeParameters params)
    : name_(std::move(name)),
      text_(std::move(text)),
      taxonomy_(std::move(taxonomy)),
      params_(std::move(params)) {
  for (std::string_view slot : {"{test_text}", "{corpus_text}"}) {
    std::size_t count = CountOccurrences(text_, slot);
    if (count != 1) {
      throw ConfigError("template '" + name_ + "' must contain " +
                        std::string(slot) + " exactly once (found " +
                        std::to_string(count) + ")");
    }
  }
  if (taxonomy_.empty()) {
    throw ConfigError("template '" + name_ + "' has an empty taxonomy");
  }
}

PromptTemplate PromptTemplate::Mbpp() {
  return PromptTemplate("mbpp", std::string(prompts::kMbppAnnotationTemplate),
                        kBaseTaxonomy, JudgeParameters{1.0, 8192, "MEDIUM"});
}

PromptTemplate PromptTemplate::Codeforces() {
  std::set<MatchType> taxonomy = kBaseTaxonomy;
  taxonomy.insert(MatchType::kRelated);
  return PromptTemplate("codeforces",
                        std::string(prompts::kCodeforcesAnnotationTemplate),
                        taxonomy, JudgeParameters{1.0, 8192, "HIGH"});
}

PromptTemplate PromptTemplate::Builtin(std::string_view name) {
  if (name == "mbpp") return Mbpp();
  if (name == "codeforces") return Codeforces();
  throw ConfigError("unknown built-in template '" + std::string(name) + "'");
}

std::string PromptTemplate::Render(std::string_view test_text,
                                   std::string_view corpus_text) const {
  return SubstituteSlots(text_, {{"test_text", std::string(test_text)},
                                 {"corpus_text", std::string(corpus_text)}});
}

nlohmann::json AnnotationResponseSchema(const std::set<MatchType>& taxonomy) {
  nlohmann::json names = nlohmann::json::array();
  for (MatchType type : taxonomy) names.push_back(MatchTypeName(type));
  return {
      {"type", "object"},
      {"properties",
       {{"is_sd", {{"type", "boolean"}}},
        {"confidence", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
        {"reasoning", {{"type", "string"}}},
        {"match_type", {{"type", "string"}, {"enum", names}}}}},
      {"required", {"is_sd", "confidence", "reasoning", "match_type"}},
  };
}

nlohmann::json BuildAnnotationRequest(const PairId& pair, std::string_view test_text,
                                      std::string_view corpus_text,
                                      const PromptTemplate& tmpl) {
  if (test_text.empty() || corpus_text.empty()) {
    throw ConfigError("annotation pair " + pair.Key() + " has an empty text");
  }
  return {
      {"pair_id", pair.ToJson()},
      {"template", tmpl.name()},
      {"prompt", tmpl.Render(test_text, corpus_text)},
      {"parameters",
       {{"temperature", tmpl.params().temperature},
        {"max_output_tokens", tmpl.params().max_output_tokens},
        {"thinking_level", tmpl.params().thinking_level},
        {"response_format", "json"}}},
      {"response_schema", AnnotationResponseSchema(tmpl.taxonomy())},
  };
}

std::string_view ParseStatusName(ParseStatus status) {
  switch (status) {
    case ParseStatus::kAccepted: return "accepted";
    case ParseStatus::kRejected: return "rejected";
    case ParseStatus::kInconsistent: return "inconsistent";
  }
  return "rejected";
}

ParseOutcome ParseAnnotationResponse(std::string_view raw, const PairId& pair,
                                     const std::set<MatchType>& taxonomy,
                                     const std::string& annotator_tag) {
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded()) return Reject("malformed document", raw);
  if (!doc.is_object()) return Reject("response is not a JSON object", raw);

  auto is_sd = doc.find("is_sd");
  if (is_sd == doc.end() || !is_sd->is_boolean()) {
    return Reject("is_sd missing or not a boolean", raw);
  }
  auto confidence = doc.find("confidence");
  if (confidence == doc.end() || !confidence->is_number()) {
    return Reject("confidence missing or not a number", raw);
  }
  double conf = confidence->get<double>();
  if (!(conf >= 0.0 && conf <= 1.0)) {
    return Reject("confidence out of range", raw);
  }
  auto reasoning = doc.find("reasoning");
  if (reasoning == doc.end() || !reasoning->is_string()) {
    return Reject("reasoning missing or not a string", raw);
  }
  auto match = doc.find("match_type");
  if (match == doc.end() || !match->is_string()) {
    return Reject("match_type missing or not a string", raw);
  }
  MatchType type;
  try {
    type = ParseMatchType(match->get<std::string>());
  } catch (const ParseError& e) {
    return Reject(e.what(), raw);
  }
  if (!taxonomy.contains(type)) {
    return Reject("match_type '" + std::string(MatchTypeName(type)) +
                      "' is not allowed by this template",
                  raw);
  }

  ParseOutcome outcome;
  outcome.raw = std::string(raw);
  outcome.record = AnnotationRecord{pair,
                                    is_sd->get<bool>(),
                                    conf,
                                    reasoning->get<std::string>(),
                                    type,
                                    annotator_tag};
  if (outcome.record->is_sd && !IsDuplicateType(type)) {
    outcome.status = ParseStatus::kInconsistent;
    outcome.reason = "is_sd is true but match_type is '" +
                     std::string(MatchTypeName(type)) + "'";
  } else {
    outcome.status = ParseStatus::kAccepted;
  }
  return outcome;
}

HttpJudge::HttpJudge(ProviderConfig config) : config_(std::move(config)) {
  config_.Validate();
  ParseUrl(config_.endpoint);
}

std::string HttpJudge::Evaluate(const nlohmann::json& request) {
  ParsedUrl url = ParseUrl(config_.endpoint);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_seconds));
  client.set_read_timeout(timeout);
  client.set_connection_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto response = client.Post(url.path, headers, request.dump(), "application/json");
  if (!response) {
    throw TransientProviderError("judge request failed: " +
                                 httplib::to_string(response.error()));
  }
  if (response->status == 429 || response->status >= 500) {
    throw TransientProviderError("judge returned HTTP " +
                                 std::to_string(response->status));
  }
  if (response->status != 200) {
    throw ProviderError("judge returned HTTP " + std::to_string(response->status));
  }
  return response->body;
}

std::string HttpJudge::Tag() const { return "http:" + config_.endpoint; }

nlohmann::json FailureEntry::ToJson() const {
  return {{"pair_id", pair.ToJson()},
          {"status", status},
          {"reason", reason},
          {"raw", raw}};
}

FailureEntry FailureEntry::FromJson(const nlohmann::json& j) {
  try {
    return FailureEntry{PairId::FromJson(j.at("pair_id")),
                        j.at("status").get<std::string>(),
                        j.value("reason", ""), j.value("raw", "")};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid failure entry: ") + e.what());
  }
}

std::vector<AnnotationRecord> ReadAnnotationRecords(std::istream& in) {
  return ReadJsonLines<AnnotationRecord>(
      in, [](const nlohmann::json& j) { return AnnotationRecord::FromJson(j); });
}

std::vector<FailureEntry> ReadFailureEntries(std::istream& in) {
  return ReadJsonLines<FailureEntry>(
      in, [](const nlohmann::json& j) { return FailureEntry::FromJson(j); });
}

AnnotateResult AnnotatePairs(std::span<const AnnotationPair> pairs, Judge& judge,
                             const PromptTemplate& tmpl,
                             const AnnotateOptions& options) {
  if (options.records_path.empty() || options.failures_path.empty()) {
    throw ConfigError("annotation ledgers need both a records and a failures path");
  }
  AnnotateResult result;
  std::unordered_set<std::string> done;
  if (std::ifstream in(options.records_path); in) {
    result.records = ReadAnnotationRecords(in);
  }
  if (std::ifstream in(options.failures_path); in) {
    result.failures = ReadFailureEntries(in);
  }
  for (const AnnotationRecord& r : result.records) done.insert(r.pair.Key());
  for (const FailureEntry& f : result.failures) done.insert(f.pair.Key());

  std::vector<const AnnotationPair*> todo;
  for (const AnnotationPair& p : pairs) {
    if (done.insert(p.pair.Key()).second) {
      todo.push_back(&p);
    } else {
      ++result.resumed;
    }
  }

  TerminateTornLine(options.records_path);
  TerminateTornLine(options.failures_path);
  std::ofstream records_out(options.records_path, std::ios::app);
  std::ofstream failures_out(options.failures_path, std::ios::app);
  if (!records_out || !failures_out) {
    throw ConfigError("cannot open annotation ledgers for appending");
  }

  std::mutex ledger_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  const std::string tag = judge.Tag();

  auto write_record = [&](const AnnotationRecord& record) {
    std::lock_guard lock(ledger_mutex);
    records_out << record.ToJson().dump() << '\n' << std::flush;
    result.records.push_back(record);
  };
  auto write_failure = [&](FailureEntry entry, bool provider) {
    std::lock_guard lock(ledger_mutex);
    failures_out << entry.ToJson().dump() << '\n' << std::flush;
    if (provider) ++result.provider_failures;
    result.failures.push_back(std::move(entry));
  };

  auto worker = [&] {
    while (!stop.load()) {
      std::size_t index = next.fetch_add(1);
      if (index >= todo.size()) return;
      const AnnotationPair& item = *todo[index];
      try {
        nlohmann::json request;
        try {
          request = BuildAnnotationRequest(item.pair, item.test_text,
                                           item.corpus_text, tmpl);
        } catch (const ConfigError& e) {
          write_failure({item.pair, "rejected", e.what(), ""}, false);
          continue;
        }
        std::optional<std::string> raw;
        std::string provider_error;
        for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
          try {
            raw = judge.Evaluate(request);
            break;
          } catch (const TransientProviderError& e) {
            provider_error = e.what();
            if (attempt == options.max_retries) break;
            std::this_thread::sleep_for(std::chrono::duration<double>(
                options.backoff_seconds * std::ldexp(1.0, attempt)));
          } catch (const ProviderError& e) {
            provider_error = e.what();
            break;
          }
        }
        if (!raw) {
          write_failure({item.pair, "provider_error", provider_error, ""}, true);
          continue;
        }
        ParseOutcome outcome =
            ParseAnnotationResponse(*raw, item.pair, tmpl.taxonomy(), tag);
        if (outcome.status == ParseStatus::kAccepted) {
          write_record(*outcome.record);
        } else {
          write_failure({item.pair, std::string(ParseStatusName(outcome.status)),
                         outcome.reason, outcome.raw},
                        false);
        }
      } catch (...) {
        std::lock_guard lock(ledger_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.concurrency, todo.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

void ExportRequests(std::ostream& out, std::span<const AnnotationPair> pairs,
                    const PromptTemplate& tmpl) {
  for (const AnnotationPair& p : pairs) {
    out << BuildAnnotationRequest(p.pair, p.test_text, p.corpus_text, tmpl).dump()
        << '\n';
  }
}

std::vector<ParseOutcome> ImportResponses(std::istream& in, const PromptTemplate& tmpl,
                                          const std::string& annotator_tag) {
  std::vector<ParseOutcome> outcomes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("pair_id") || !j.contains("response")) {
      throw ParseError("response line " + std::to_string(line_no) +
                       " lacks pair_id or response");
    }
    PairId pair = PairId::FromJson(j["pair_id"]);
    const nlohmann::json& response = j["response"];
    std::string raw = response.is_string() ? response.get<std::string>()
                                           : response.dump();
    outcomes.push_back(
        ParseAnnotationResponse(raw, pair, tmpl.taxonomy(), annotator_tag));
  }
  return outcomes;
}

}  // namespace dupaudit
