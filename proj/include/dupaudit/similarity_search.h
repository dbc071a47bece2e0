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

#ifndef DUPAUDIT_SIMILARITY_SEARCH_H_
#define DUPAUDIT_SIMILARITY_SEARCH_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dupaudit/chunk_id.h"
#include "dupaudit/embed_store.h"
#include "dupaudit/reservoir_sampler.h"
#include "json.hpp"

namespace dupaudit {

enum class TextVariant { kInput, kOutput, kJoined };

TextVariant ParseTextVariant(std::string_view name);

struct BenchmarkItem {
  std::string benchmark_id;
  std::string item_id;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::string> text;
  // Free-form metadata, e.g. {"elo": 1500} or {"grid_size": "4x4"}.
  nlohmann::json metadata = nlohmann::json::object();

  // The requested text variant. kJoined uses `text` when present, else input
  // and output separated by a blank line. Throws ConfigError when the variant
  // is unavailable.
  std::string Text(TextVariant variant) const;
};

// Reads line-delimited benchmark items. `default_benchmark_id` fills a
// missing benchmark_id. Throws ParseError on a malformed line and
// ConfigError on duplicate item ids within a benchmark. elo, grid_size,
// level and any `metadata_keys` fields are copied into the metadata.
std::vector<BenchmarkItem> ReadBenchmark(std::istream& in,
                                         const std::string& default_benchmark_id,
                                         std::span<const std::string> metadata_keys = {});
nlohmann::json BenchmarkItemToJson(const BenchmarkItem& item);

// A benchmark item's embedding in full precision.
struct Query {
  std::string benchmark_id;
  std::string item_id;
  std::vector<float> vector;
};

struct SimilarityMatch {
  std::string benchmark_id;
  std::string item_id;
  ChunkId chunk_id;
  std::string dataset_id;
  double score = 0.0;
  std::uint32_t rank = 0;  // 1-based within (item, dataset) or (item, union)

  bool operator==(const SimilarityMatch&) const = default;
};

// Full-precision dot product of two unit vectors, clamped to [-1, 1].
// Throws ConfigError on a dimension mismatch.
double Cosine(std::span<const float> a, std::span<const float> b);

struct ScanOptions {
  std::size_t k = 100;
  // Rank over the union of all datasets instead of per dataset.
  bool union_datasets = false;
  unsigned jobs = 1;
};

// Exact top-k per query. Results for each query are grouped by dataset_id
// (ascending), ranks 1..k within each group; ties are broken by ascending
// chunk_id. The output does not depend on shard order or jobs.
std::vector<std::vector<SimilarityMatch>> TopKMatches(
    std::span<const Query> queries, std::span<const EmbeddingShard> shards,
    const ScanOptions& options);

// The ceil(pct * N) best matches per group, where N is the number of chunks
// in the group (per dataset, or all chunks with union_datasets).
std::vector<std::vector<SimilarityMatch>> TopPercentilePools(
    std::span<const Query> queries, std::span<const EmbeddingShard> shards,
    double pct, const ScanOptions& options);

// ceil(pct * n) with a guard against representation error in pct.
std::size_t PercentileCount(double pct, std::size_t n);

// Uniform subset of `n` matches without replacement, in pool order. Returns
// the whole pool when n >= pool size. Scores and ranks are preserved.
std::vector<SimilarityMatch> SamplePool(std::span<const SimilarityMatch> pool,
                                        std::size_t n, Rng& rng);

// Embeds items with `provider` and converts to full-precision queries.
std::vector<Query> EmbedQueries(std::span<const BenchmarkItem> items,
                                TextVariant variant, EmbeddingProvider& provider,
                                const ProviderConfig& config);

// CSV: benchmark_id,item_id,chunk_id,dataset_id,score,rank. Lines starting
// with '#' are comments.
void WriteMatchesCsv(std::ostream& out, std::span<const SimilarityMatch> matches,
                     const std::string& comment = "");
std::vector<SimilarityMatch> ReadMatchesCsv(std::istream& in);

}  // namespace dupaudit

#endif  // DUPAUDIT_SIMILARITY_SEARCH_H_
