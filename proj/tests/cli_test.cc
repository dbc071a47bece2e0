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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "dupaudit/contamination_mixer.h"
#include "json.hpp"
#include "test_util.h"

namespace dupaudit {
namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result Cli(const testing::TempDir& dir, const std::string& args) {
  std::string cmd = std::string(DUPAUDIT_CLI) + " " + args + " >" + (dir / "stdout").string() +
                    " 2>" + (dir / "stderr").string();
  int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::ReadFile(dir / "stdout");
  r.err = testing::ReadFile(dir / "stderr");
  return r;
}

TEST(CliTest, MetricsForOnePair) {
  testing::TempDir dir;
  Result r = Cli(dir, "metrics --a 'a b c' --b 'a b d'");
  ASSERT_EQ(r.code, 0) << r.err;
  nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["jaccard"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["ngram2"].get<double>(), 0.5);
}

TEST(CliTest, MetricsForPairFile) {
  testing::TempDir dir;
  testing::WriteLines(dir / "pairs.jsonl", {R"({"id": 1, "a": "x y", "b": "x y"})",
                                            R"({"id": "two", "a": "abcd", "b": "bcde"})"});
  Result r = Cli(dir, "metrics --pairs " + (dir / "pairs.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(nlohmann::json::parse(first)["gestalt"], 1.0);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(second)["gestalt"].get<double>(), 0.75);
  EXPECT_EQ(nlohmann::json::parse(second)["id"], "two");
}

TEST(CliTest, UsageErrorsExitTwo) {
  testing::TempDir dir;
  EXPECT_EQ(Cli(dir, "scan --bogus").code, 2);
  EXPECT_EQ(Cli(dir, "metrics --a x --b y --denominator half").code, 2);
  testing::WriteFile(dir / "bad.json", R"({"datasets": [], "benchmarks": [], "colour": 1})");
  Result r = Cli(dir, "run --config " + (dir / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(CliTest, HelpExitsZero) {
  testing::TempDir dir;
  Result r = Cli(dir, "--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("gen-dupes"), std::string::npos);
}

TEST(CliTest, DoseArithmetic) {
  testing::TempDir dir;
  Result r = Cli(dir, "mix --dose-rate 4 --clean-size 10000 --seen-items 125 --variants-per-item 4");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "500\n");
}

TEST(CliTest, MixAndInvertAreByteExact) {
  testing::TempDir dir;
  std::vector<std::string> clean, pool, bench;
  for (int i = 0; i < 200; ++i) clean.push_back("{\"id\": \"c" + std::to_string(i) + "\", \"text\": \"t\"}");
  for (int i = 0; i < 10; ++i) {
    bench.push_back("{\"item_id\": \"q" + std::to_string(i) + "\", \"text\": \"puzzle\"}");
    if (i < 5) pool.push_back("{\"id\": \"d" + std::to_string(i) + "\", \"original_item_id\": \"q" + std::to_string(i) + "\"}");
  }
  testing::WriteLines(dir / "clean.jsonl", clean);
  testing::WriteLines(dir / "pool.jsonl", pool);
  testing::WriteLines(dir / "bench.jsonl", bench);
  std::string d = dir.path().string();
  Result mix = Cli(dir, "mix --clean " + d + "/clean.jsonl --pool " + d + "/pool.jsonl --benchmark " + d +
                            "/bench.jsonl --fraction 0.025 --seed 9 --manifest " + d + "/m.json --out " + d +
                            "/mixed.jsonl");
  ASSERT_EQ(mix.code, 0) << mix.err;
  EXPECT_NE(testing::ReadFile(dir / "mixed.jsonl"), testing::ReadFile(dir / "clean.jsonl"));
  Result inv = Cli(dir, "mix --invert --contaminated " + d + "/mixed.jsonl --manifest " + d + "/m.json --out " + d +
                            "/restored.jsonl");
  ASSERT_EQ(inv.code, 0) << inv.err;
  EXPECT_EQ(testing::ReadFile(dir / "restored.jsonl"), testing::ReadFile(dir / "clean.jsonl"));

  // A pool entry descending from an unseen item is refused.
  pool.push_back("{\"id\": \"leak\", \"original_item_id\": \"q9\"}");
  testing::WriteLines(dir / "pool.jsonl", pool);
  Result leak = Cli(dir, "mix --clean " + d + "/clean.jsonl --pool " + d + "/pool.jsonl --benchmark " + d +
                             "/bench.jsonl --fraction 0.025 --manifest " + d + "/m2.json --out " + d + "/x.jsonl");
  EXPECT_EQ(leak.code, 2);
  EXPECT_NE(leak.err.find("leakage"), std::string::npos);
}

TEST(CliTest, GenDupesShuffle) {
  testing::TempDir dir;
  testing::WriteLines(dir / "puzzles.jsonl",
                      {nlohmann::json{{"id", "p1"}, {"text", "Intro\n1. alpha one\n2. beta two\n3. gamma three\n4. delta four"}}.dump()});
  Result r = Cli(dir, "gen-dupes --in " + (dir / "puzzles.jsonl").string() +
                          " --transform shuffle --count 2 --max-gestalt 1.0 --seed 3 --out " +
                          (dir / "variants.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(testing::ReadFile(dir / "variants.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    EXPECT_EQ(j["original_id"], "p1");
    ++n;
  }
  EXPECT_EQ(n, 2);
  EXPECT_EQ(Cli(dir, "gen-dupes --in " + (dir / "puzzles.jsonl").string() + " --transform substitute,shuffle --out " +
                    (dir / "x.jsonl").string()).code,
            2);
}

TEST(CliTest, DemoMatchesPlantedExpectation) {
  testing::TempDir dir;
  Result r = Cli(dir, "demo --out " + (dir / "demo").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"exact_inclusive\": 0.75"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"exact_exclusive\": 0.35"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "demo/out/stats/report.json"));
}

}  // namespace
}  // namespace dupaudit
