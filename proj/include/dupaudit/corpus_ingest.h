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

#ifndef DUPAUDIT_CORPUS_INGEST_H_
#define DUPAUDIT_CORPUS_INGEST_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dupaudit/chunk_id.h"
#include "json.hpp"

namespace dupaudit {

// Where a chunk came from inside its input file.
struct ChunkOrigin {
  std::string file;
  std::uint64_t record_index = 0;
  std::uint32_t chunk_index = 0;

  auto operator<=>(const ChunkOrigin&) const = default;
};

// One filtered text unit of a training corpus.
struct CorpusChunk {
  ChunkId chunk_id;
  std::string dataset_id;
  std::vector<std::string> source_path;
  std::string text;
  std::size_t token_count = 0;
  ChunkOrigin origin;

  // "a/b/c" form of source_path.
  std::string SourceKey() const;
};

enum class ChunkMode { kWholeRecord, kParagraphSplit };

// How instruct-style records carrying `prompt`/`response` instead of `text`
// are turned into chunk text.
enum class PairMode { kJoint, kSeparate };

struct IngestConfig {
  std::string dataset_id = "corpus";
  std::size_t min_tokens = 50;
  std::size_t max_tokens = 2048;
  ChunkMode mode = ChunkMode::kWholeRecord;
  PairMode pair_mode = PairMode::kJoint;

  // Throws ConfigError when min_tokens < 1 or min_tokens >= max_tokens.
  void Validate() const;
};

// Number of maximal non-whitespace runs.
std::size_t CountTokens(std::string_view text);

// Splits a hierarchical source identifier on '/'. Empty levels are dropped.
// Throws ParseError("missing source") for an empty or all-separator string.
std::vector<std::string> ParseSourcePath(std::string_view raw_path);

// Raw record as read from a line-delimited input file.
struct RawRecord {
  std::string line;
  std::uint64_t index = 0;
};

// Thread-safe counter of records that could not be ingested.
class IngestErrorTally {
 public:
  void Add() { count_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t count() const { return count_.load(); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

// Chunks a single parsed record. Records with no usable text produce no
// chunks. Throws ParseError when required fields are missing.
std::vector<CorpusChunk> ChunkRecord(const nlohmann::json& record,
                                     const IngestConfig& cfg,
                                     const ChunkOrigin& base);

// Parses and chunks every record. Malformed records are skipped and counted.
// Output order follows (record index, chunk index) regardless of `jobs`.
std::vector<CorpusChunk> IngestStream(std::span<const RawRecord> records,
                                      const IngestConfig& cfg,
                                      std::string_view file_name,
                                      IngestErrorTally& errors,
                                      unsigned jobs = 1);

// Reads every line of `in` as a RawRecord (blank lines are kept so the
// record index equals the zero-based line number).
std::vector<RawRecord> ReadRawRecords(std::istream& in);

// Line-delimited chunk record with token_count, chunk_id and dataset_id.
nlohmann::json ChunkToJson(const CorpusChunk& chunk);
CorpusChunk ChunkFromJson(const nlohmann::json& j);

void WriteChunks(std::ostream& out, std::span<const CorpusChunk> chunks);
// Reads a chunk file, skipping `_meta` header lines.
std::vector<CorpusChunk> ReadChunks(std::istream& in);

}  // namespace dupaudit

#endif  // DUPAUDIT_CORPUS_INGEST_H_
