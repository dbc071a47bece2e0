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

#include <sstream>

#include "dupaudit/corpus_ingest.h"
#include "dupaudit/errors.h"

namespace dupaudit {
namespace {

std::string Words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += ' ';
    out += stem + std::to_string(i);
  }
  return out;
}

nlohmann::json Record(const std::string& text, const std::string& source = "web/a") {
  return {{"text", text}, {"source", source}};
}

IngestConfig Config(std::size_t min_tokens, std::size_t max_tokens,
                    ChunkMode mode = ChunkMode::kWholeRecord) {
  IngestConfig cfg;
  cfg.dataset_id = "ds";
  cfg.min_tokens = min_tokens;
  cfg.max_tokens = max_tokens;
  cfg.mode = mode;
  return cfg;
}

TEST(IngestTest, CountTokens) {
  EXPECT_EQ(CountTokens(""), 0u);
  EXPECT_EQ(CountTokens("  a  b\tc\n"), 3u);
}

TEST(IngestTest, SourcePath) {
  EXPECT_EQ(ParseSourcePath("web//forum/ thread "),
            (std::vector<std::string>{"web", "forum", "thread"}));
  EXPECT_THROW(ParseSourcePath(" / "), ParseError);
}

TEST(IngestTest, WholeRecordModeFiltersByLength) {
  const IngestConfig cfg = Config(3, 5);
  EXPECT_TRUE(ChunkRecord(Record(Words(2)), cfg, {}).empty());
  EXPECT_EQ(ChunkRecord(Record(Words(3)), cfg, {}).size(), 1u);
  EXPECT_EQ(ChunkRecord(Record(Words(5)), cfg, {}).size(), 1u);
  EXPECT_TRUE(ChunkRecord(Record(Words(6)), cfg, {}).empty());
}

TEST(IngestTest, ChunkFields) {
  std::vector<CorpusChunk> c = ChunkRecord(Record(Words(4), "web/blog"), Config(1, 10),
                                           ChunkOrigin{"f.jsonl", 7, 0});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].chunk_id, ComputeChunkId("ds", Words(4)));
  EXPECT_EQ(c[0].dataset_id, "ds");
  EXPECT_EQ(c[0].SourceKey(), "web/blog");
  EXPECT_EQ(c[0].token_count, 4u);
  EXPECT_EQ(c[0].origin.file, "f.jsonl");
  EXPECT_EQ(c[0].origin.record_index, 7u);
}

TEST(IngestTest, ParagraphModePacksParagraphs) {
  // Three 4-token paragraphs with max 8: the first two pack together.
  const std::string text = Words(4, "a") + "\n\n" + Words(4, "b") + "\n\n" + Words(4, "c");
  std::vector<CorpusChunk> c =
      ChunkRecord(Record(text), Config(1, 8, ChunkMode::kParagraphSplit), {});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].text, Words(4, "a") + "\n\n" + Words(4, "b"));
  EXPECT_EQ(c[0].token_count, 8u);
  EXPECT_EQ(c[1].text, Words(4, "c"));
  EXPECT_EQ(c[1].origin.chunk_index, 1u);
}

TEST(IngestTest, ParagraphModeWindowsOversizeParagraphs) {
  std::vector<CorpusChunk> c =
      ChunkRecord(Record(Words(10)), Config(1, 4, ChunkMode::kParagraphSplit), {});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].token_count, 4u);
  EXPECT_EQ(c[1].token_count, 4u);
  EXPECT_EQ(c[2].token_count, 2u);
  for (const CorpusChunk& chunk : c) EXPECT_LE(chunk.token_count, 4u);
}

TEST(IngestTest, ParagraphModeKeepsShortRecordWhole) {
  const std::string text = Words(2, "a") + "\n\n" + Words(2, "b");
  std::vector<CorpusChunk> c =
      ChunkRecord(Record(text), Config(1, 8, ChunkMode::kParagraphSplit), {});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].text, text);
}

TEST(IngestTest, PromptResponseRecords) {
  nlohmann::json rec = {{"prompt", Words(3, "p")}, {"response", Words(3, "r")},
                        {"source", "chat"}};
  IngestConfig joint = Config(1, 20);
  std::vector<CorpusChunk> j = ChunkRecord(rec, joint, {});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0].text, Words(3, "p") + "\n\n" + Words(3, "r"));
  IngestConfig separate = joint;
  separate.pair_mode = PairMode::kSeparate;
  std::vector<CorpusChunk> s = ChunkRecord(rec, separate, {});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].text, Words(3, "r"));
}

TEST(IngestTest, MalformedRecordsAreCountedNotFatal) {
  std::vector<RawRecord> raw = {{Record(Words(3)).dump(), 0},
                                {"{not json", 1},
                                {nlohmann::json{{"text", "x y z"}}.dump(), 2},
                                {"", 3},
                                {Record(Words(4)).dump(), 4}};
  IngestErrorTally errors;
  std::vector<CorpusChunk> c = IngestStream(raw, Config(1, 10), "f", errors);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(errors.count(), 2u);
}

TEST(IngestTest, ParallelIngestPreservesOrder) {
  std::vector<RawRecord> raw;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    raw.push_back({Record(Words(3 + i % 5, "r" + std::to_string(i) + "_")).dump(), i});
  }
  IngestErrorTally e1;
  IngestErrorTally e4;
  std::vector<CorpusChunk> one = IngestStream(raw, Config(1, 10), "f", e1, 1);
  std::vector<CorpusChunk> four = IngestStream(raw, Config(1, 10), "f", e4, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].chunk_id, four[i].chunk_id);
    EXPECT_EQ(one[i].origin, four[i].origin);
  }
}

TEST(IngestTest, ChunkJsonRoundTrip) {
  std::vector<CorpusChunk> c = ChunkRecord(Record(Words(5), "a/b/c"), Config(1, 10),
                                           ChunkOrigin{"file", 3, 0});
  std::stringstream ss;
  ss << "{\"_meta\":{\"config_hash\":\"x\"}}\n";
  WriteChunks(ss, c);
  std::vector<CorpusChunk> back = ReadChunks(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].chunk_id, c[0].chunk_id);
  EXPECT_EQ(back[0].text, c[0].text);
  EXPECT_EQ(back[0].source_path, c[0].source_path);
  EXPECT_EQ(back[0].origin, c[0].origin);
  EXPECT_EQ(back[0].token_count, 5u);
}

TEST(IngestTest, ConfigValidation) {
  EXPECT_THROW(Config(0, 10).Validate(), ConfigError);
  EXPECT_THROW(Config(10, 10).Validate(), ConfigError);
  IngestConfig cfg = Config(1, 10);
  cfg.dataset_id = "";
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

}  // namespace
}  // namespace dupaudit
