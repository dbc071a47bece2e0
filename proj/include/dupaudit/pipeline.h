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

#ifndef DUPAUDIT_PIPELINE_H_
#define DUPAUDIT_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dupaudit/annotation.h"
#include "dupaudit/contamination_stats.h"
#include "dupaudit/corpus_ingest.h"
#include "dupaudit/embed_store.h"
#include "dupaudit/errors.h"
#include "dupaudit/lexical_metrics.h"
#include "dupaudit/similarity_search.h"
#include "json.hpp"

namespace dupaudit {

struct DatasetSpec {
  std::filesystem::path path;
  double sample_rate = 1.0;
  IngestConfig ingest;  // ingest.dataset_id names the dataset
};

struct BenchmarkSpec {
  std::filesystem::path path;
  std::string benchmark_id;
  TextVariant variant = TextVariant::kJoined;
  std::vector<std::string> metadata_keys;
};

struct EmbedderSpec {
  std::string kind = "hashing";  // hashing | http
  std::uint32_t dim = 256;       // hashing only
  std::uint64_t seed = 0;        // hashing only
  std::string query_prefix;      // prepended to benchmark texts
  ProviderConfig provider;
};

struct JudgeSpec {
  std::string mode = "live";  // live | export | import | lineage
  std::string template_name = "mbpp";
  std::size_t concurrency = 4;
  std::filesystem::path responses_path;  // import
  std::filesystem::path lineage_path;    // lineage
  ProviderConfig provider;               // live
};

struct PipelineConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<BenchmarkSpec> benchmarks;
  EmbedderSpec embedder;
  JudgeSpec judge;
  std::size_t k = 100;
  std::optional<double> percentile;
  std::optional<std::size_t> sample_n;
  bool union_datasets = false;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "dupaudit-out";
  unsigned jobs = 1;
  NormalizationConfig normalization;
  ReportOptions report;
  // Directory that relative input paths resolve against.
  std::filesystem::path base_dir;

  // Relative paths resolve against `base_dir`. Unknown keys are rejected.
  // Throws ConfigError.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
  static PipelineConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  // Throws ConfigError before any work is done.
  void Validate() const;
  // Hash of everything that can change results (not output_dir or jobs).
  std::string Hash() const;
};

enum class Stage { kIngest, kSample, kEmbed, kScan, kAnnotate, kStats };

std::string_view StageName(Stage stage);
Stage ParseStage(std::string_view name);
const std::vector<Stage>& AllStages();

// A stage failed; outputs of earlier stages are left in place.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& message, bool provider_failure)
      : Error(std::string(StageName(stage)) + ": " + message),
        stage_(stage),
        provider_failure_(provider_failure) {}
  Stage stage() const { return stage_; }
  bool provider_failure() const { return provider_failure_; }

 private:
  Stage stage_;
  bool provider_failure_;
};

// Answers from a planted lineage file of {benchmark_id, item_id, chunk_id,
// match_type} lines; unlisted pairs are unrelated.
class LineageJudge : public Judge {
 public:
  explicit LineageJudge(std::map<std::string, MatchType> labels);
  static LineageJudge FromFile(const std::filesystem::path& path);
  std::string Evaluate(const nlohmann::json& request) override;
  std::string Tag() const override { return "lineage-stub"; }

 private:
  std::map<std::string, MatchType> labels_;  // keyed by PairId::Key()
};

struct RunOptions {
  // Stages to run, in pipeline order. Empty means all.
  std::vector<Stage> stages;
  // Credential for live providers; overrides api_key in the config.
  std::string provider_token;
  // Replaces the embedding provider (tests).
  std::shared_ptr<EmbeddingProvider> embedder;
  // Replaces the judge (tests).
  std::shared_ptr<Judge> judge;
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::vector<Stage> completed;
  bool awaiting_responses = false;  // export mode stops before stats
  nlohmann::json report;            // stats summary when stats ran
};

// Output layout under config.output_dir:
//   ingest/<dataset>.jsonl    sample/<dataset>.jsonl, <dataset>.manifest.csv
//   embed/<dataset>.emb       embed/queries.jsonl
//   scan/matches.csv          annotate/records.jsonl, failures.jsonl,
//   stats/...                 requests.jsonl (export)
//   run_ledger.json
RunSummary RunPipeline(const PipelineConfig& config, const RunOptions& options = {});

// Query vectors, one {benchmark_id, item_id, vector} object per line after an
// optional {"_meta": ...} header.
void WriteQueries(std::ostream& out, std::span<const Query> queries,
                  const std::string& meta_line = "");
std::vector<Query> ReadQueries(std::istream& in);

std::filesystem::path StageDir(const PipelineConfig& config, Stage stage);

}  // namespace dupaudit

#endif  // DUPAUDIT_PIPELINE_H_
