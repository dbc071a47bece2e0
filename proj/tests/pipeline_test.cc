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

#include "dupaudit/pipeline.h"

#include <fstream>

#include <gtest/gtest.h>

#include "dupaudit/errors.h"
#include "dupaudit/planted_corpus.h"
#include "test_util.h"

namespace dupaudit {
namespace {

namespace fs = std::filesystem;

PlantedOptions SmallPlant() {
  PlantedOptions o;
  o.n_chunks = 1500;
  o.n_exact = 8;
  o.n_semantic = 7;
  o.n_none = 5;
  o.seed = 3;
  return o;
}

// Demo inputs plus a config writing to `out`.
PipelineConfig SmallConfig(const testing::TempDir& dir, const std::string& out) {
  fs::path config_path = WritePlantedDemo(dir.path(), SmallPlant());
  PipelineConfig config = PipelineConfig::Load(config_path);
  config.output_dir = dir / out;
  return config;
}

double Inclusive(const RunSummary& s) { return s.report["coverage_at_k"]["exact_inclusive"]; }
double Exclusive(const RunSummary& s) { return s.report["coverage_at_k"]["exact_exclusive"]; }

TEST(ConfigTest, RejectsBadValues) {
  testing::TempDir dir;
  fs::path path = WritePlantedDemo(dir.path(), SmallPlant());
  nlohmann::json j = nlohmann::json::parse(testing::ReadFile(path));

  nlohmann::json zero_rate = j;
  zero_rate["datasets"][0]["sample_rate"] = 0.0;
  EXPECT_THROW(PipelineConfig::FromJson(zero_rate, dir.path()).Validate(), ConfigError);

  nlohmann::json unknown = j;
  unknown["colour"] = "blue";
  EXPECT_THROW(PipelineConfig::FromJson(unknown, dir.path()), ConfigError);

  nlohmann::json nested = j;
  nested["embedder"]["flavour"] = 1;
  EXPECT_THROW(PipelineConfig::FromJson(nested, dir.path()), ConfigError);

  nlohmann::json half_pct = j;
  half_pct["percentile"] = 0.01;
  EXPECT_THROW(PipelineConfig::FromJson(half_pct, dir.path()).Validate(), ConfigError);

  nlohmann::json zero_k = j;
  zero_k["k"] = 0;
  EXPECT_THROW(PipelineConfig::FromJson(zero_k, dir.path()).Validate(), ConfigError);

  nlohmann::json no_responses = j;
  no_responses["judge"] = {{"mode", "import"}};
  EXPECT_THROW(PipelineConfig::FromJson(no_responses, dir.path()).Validate(), ConfigError);

  nlohmann::json bad_mode = j;
  bad_mode["judge"]["mode"] = "guess";
  EXPECT_THROW(PipelineConfig::FromJson(bad_mode, dir.path()).Validate(), ConfigError);
}

TEST(ConfigTest, HashIgnoresOutputDirAndJobs) {
  testing::TempDir dir;
  PipelineConfig a = SmallConfig(dir, "a");
  PipelineConfig b = a;
  b.output_dir = dir / "b";
  b.jobs = 4;
  EXPECT_EQ(a.Hash(), b.Hash());
  b.seed = a.seed + 1;
  EXPECT_NE(a.Hash(), b.Hash());
  PipelineConfig round = PipelineConfig::FromJson(a.ToJson(), dir.path());
  EXPECT_EQ(round.Hash(), a.Hash());
}

TEST(StageTest, Names) {
  for (Stage s : AllStages()) EXPECT_EQ(ParseStage(StageName(s)), s);
  EXPECT_THROW(ParseStage("deploy"), ConfigError);
}

TEST(PipelineTest, PlantedRunReportsExpectedCoverage) {
  testing::TempDir dir;
  PipelineConfig config = SmallConfig(dir, "out");
  PlantedCorpus planted = GeneratePlantedCorpus(SmallPlant());
  RunSummary s = RunPipeline(config);
  EXPECT_EQ(s.completed, AllStages());
  EXPECT_DOUBLE_EQ(Inclusive(s), planted.ExpectedInclusive());
  EXPECT_DOUBLE_EQ(Exclusive(s), planted.ExpectedExclusive());
  EXPECT_DOUBLE_EQ(planted.ExpectedInclusive(), 0.75);
  EXPECT_DOUBLE_EQ(planted.ExpectedExclusive(), 0.35);
  for (const char* f : {"ingest/planted.jsonl", "sample/planted.jsonl", "sample/planted.manifest.csv",
                        "embed/planted.emb", "embed/queries.jsonl", "scan/matches.csv",
                        "annotate/records.jsonl", "annotate/failures.jsonl", "stats/report.json",
                        "stats/coverage_vs_k.csv", "run_ledger.json"}) {
    EXPECT_TRUE(fs::exists(config.output_dir / f)) << f;
  }
  nlohmann::json ledger = nlohmann::json::parse(testing::ReadFile(config.output_dir / "run_ledger.json"));
  EXPECT_EQ(ledger["config_hash"], config.Hash());
  EXPECT_EQ(ledger["seed"], config.seed);
}

TEST(PipelineTest, RerunIsByteIdentical) {
  testing::TempDir dir;
  PipelineConfig a = SmallConfig(dir, "a");
  PipelineConfig b = a;
  b.output_dir = dir / "b";
  b.jobs = 3;
  RunPipeline(a);
  RunPipeline(b);
  for (const char* f : {"stats/report.json", "scan/matches.csv", "annotate/records.jsonl",
                        "embed/planted.emb", "sample/planted.manifest.csv"}) {
    EXPECT_EQ(testing::ReadFile(a.output_dir / f), testing::ReadFile(b.output_dir / f)) << f;
  }
}

TEST(PipelineTest, StagesRerunFromSavedOutputs) {
  testing::TempDir dir;
  PipelineConfig config = SmallConfig(dir, "out");
  RunPipeline(config);
  std::string report = testing::ReadFile(config.output_dir / "stats/report.json");
  fs::remove_all(config.output_dir / "stats");
  fs::remove_all(config.output_dir / "annotate");
  RunOptions opts;
  opts.stages = {Stage::kAnnotate, Stage::kStats};
  RunSummary s = RunPipeline(config, opts);
  EXPECT_EQ(s.completed, opts.stages);
  EXPECT_EQ(testing::ReadFile(config.output_dir / "stats/report.json"), report);

  // A stage whose inputs are missing fails with its own name.
  fs::remove_all(config.output_dir / "scan");
  opts.stages = {Stage::kAnnotate};
  try {
    RunPipeline(config, opts);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), Stage::kAnnotate);
    EXPECT_FALSE(e.provider_failure());
  }
}

TEST(PipelineTest, ExportThenImport) {
  testing::TempDir dir;
  PipelineConfig config = SmallConfig(dir, "out");
  fs::path lineage = config.judge.lineage_path;
  config.judge.mode = "export";
  RunSummary exported = RunPipeline(config);
  EXPECT_TRUE(exported.awaiting_responses);
  EXPECT_EQ(exported.completed.back(), Stage::kAnnotate);
  EXPECT_FALSE(fs::exists(config.output_dir / "stats/report.json"));

  // Answer the requests offline with the lineage labels.
  LineageJudge judge = LineageJudge::FromFile(config.base_dir / lineage);
  std::ifstream requests(config.output_dir / "annotate/requests.jsonl");
  std::ofstream responses(dir / "responses.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(requests, line)) {
    nlohmann::json req = nlohmann::json::parse(line);
    if (req.contains("_meta")) continue;
    responses << nlohmann::json{{"pair_id", req["pair_id"]}, {"response", judge.Evaluate(req)}}.dump() << '\n';
    ++n;
  }
  responses.close();
  EXPECT_GT(n, 0u);

  config.judge.mode = "import";
  config.judge.responses_path = dir / "responses.jsonl";
  RunOptions opts;
  opts.stages = {Stage::kAnnotate, Stage::kStats};
  RunSummary s = RunPipeline(config, opts);
  EXPECT_DOUBLE_EQ(Inclusive(s), 0.75);
  EXPECT_DOUBLE_EQ(Exclusive(s), 0.35);
}

// Judge that refuses everything.
class RefusingJudge : public Judge {
 public:
  std::string Evaluate(const nlohmann::json&) override { throw ProviderError("quota exhausted"); }
  std::string Tag() const override { return "refusing"; }
};

TEST(PipelineTest, TotalProviderFailureIsReported) {
  testing::TempDir dir;
  PipelineConfig config = SmallConfig(dir, "out");
  RunOptions opts;
  opts.judge = std::make_shared<RefusingJudge>();
  try {
    RunPipeline(config, opts);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), Stage::kAnnotate);
    EXPECT_TRUE(e.provider_failure());
  }
  EXPECT_TRUE(fs::exists(config.output_dir / "scan/matches.csv"));
}

TEST(PipelineTest, PercentileModeSamplesPool) {
  testing::TempDir dir;
  PipelineConfig config = SmallConfig(dir, "out");
  config.percentile = 0.01;
  config.sample_n = 5;
  config.report.k = 5;
  config.report.pool_fraction = 0.01;
  config.report.sample_size = 5;
  RunSummary s = RunPipeline(config);
  EXPECT_TRUE(s.report.contains("duplicates_per_10k"));
  std::ifstream in(config.output_dir / "scan/matches.csv");
  std::vector<SimilarityMatch> matches = ReadMatchesCsv(in);
  EXPECT_EQ(matches.size(), 20u * 5u);
}

TEST(QueriesTest, RoundTrip) {
  std::vector<Query> qs = {{"b", "1", {0.5f, -0.25f}}, {"b", "2", {1.0f, 0.0f}}};
  std::stringstream buf;
  WriteQueries(buf, qs, "{\"_meta\": {}}");
  std::vector<Query> back = ReadQueries(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].vector, qs[0].vector);
  EXPECT_EQ(back[1].item_id, "2");
}

}  // namespace
}  // namespace dupaudit
