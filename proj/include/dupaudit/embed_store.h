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

#ifndef DUPAUDIT_EMBED_STORE_H_
#define DUPAUDIT_EMBED_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dupaudit/chunk_id.h"
#include "dupaudit/half.h"

namespace dupaudit {

// Maximum allowed deviation of a stored vector's L2 norm from 1.
inline constexpr double kNormTolerance = 1.0 / 256.0;

// v / ||v||_2 computed in double precision, then rounded to half precision.
// Throws Error("degenerate embedding") for zero or non-finite input.
std::vector<Half> Normalize(std::span<const float> v);

// L2 norm of a half-precision vector, accumulated in double.
double HalfNorm(std::span<const Half> v);

// Half-precision, unit-normalized vectors keyed by chunk id. `dataset_id` is
// not serialized; it is assigned from the shard file name on load.
struct EmbeddingShard {
  std::uint32_t dim = 0;
  std::string provider_tag;
  std::vector<ChunkId> ids;
  std::vector<Half> vectors;  // ids.size() x dim, row-major
  std::string dataset_id;

  std::size_t count() const { return ids.size(); }
  std::span<const Half> Row(std::size_t i) const {
    return std::span<const Half>(vectors).subspan(i * dim, dim);
  }
  void Append(const ChunkId& id, std::span<const Half> row);

  // Throws FormatError on shape mismatch, duplicate ids, or a stored vector
  // whose norm is outside 1 +/- kNormTolerance.
  void Validate() const;
};

// "EMB1", u32 dim, u64 count, u32 tag length, tag bytes, ids, vectors; all
// little-endian.
void WriteShard(std::ostream& out, const EmbeddingShard& shard);
EmbeddingShard ReadShard(std::istream& in);
void WriteShard(const std::filesystem::path& path, const EmbeddingShard& shard);
EmbeddingShard ReadShard(const std::filesystem::path& path);

// Dataset id encoded in a shard file name: the stem up to the first '.',
// e.g. "dolmino.00003.emb" -> "dolmino".
std::string ShardDatasetId(const std::filesystem::path& path);
// Sorted *.emb files directly under `dir`.
std::vector<std::filesystem::path> ListShards(const std::filesystem::path& dir);

// External embedding source. Implementations return raw (unnormalized)
// vectors, one per text, in input order. Transient failures are signalled
// with TransientProviderError.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<float>> Embed(
      std::span<const std::string> texts) = 0;
  virtual std::string Tag() const = 0;
};

struct ProviderConfig {
  std::string endpoint;  // e.g. http://localhost:8080/embed
  std::size_t batch_size = 64;
  int max_retries = 3;
  double timeout_seconds = 60.0;
  double backoff_seconds = 0.5;
  // Optional instruction prefix prepended to every text; recorded in the tag.
  std::string prefix;
  // Bearer token; the CLI fills this from DUPAUDIT_PROVIDER_TOKEN.
  std::string api_key;

  void Validate() const;
};

// Offline provider: a seeded Gaussian random projection of whitespace-token
// counts. Identical texts map to identical vectors regardless of batching.
class HashingEmbedder : public EmbeddingProvider {
 public:
  HashingEmbedder(std::uint32_t dim, std::uint64_t seed,
                  std::string prefix = "");

  std::vector<std::vector<float>> Embed(
      std::span<const std::string> texts) override;
  std::string Tag() const override;

  std::vector<float> EmbedOne(std::string_view text) const;

 private:
  std::uint32_t dim_;
  std::uint64_t seed_;
  std::string prefix_;
};

// POST {"texts": [...]} to the endpoint; expects {"vectors": [[...], ...]}.
class HttpEmbedder : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(ProviderConfig config);

  std::vector<std::vector<float>> Embed(
      std::span<const std::string> texts) override;
  std::string Tag() const override;

 private:
  ProviderConfig config_;
};

// Embeds `texts` in batches of config.batch_size with exponential-backoff
// retries, then normalizes. Batches that still fail are reported together in
// one ProviderError carrying the failed text indices. Mixed dimensions or a
// wrong vector count raise FormatError.
std::vector<std::vector<Half>> EmbedBatch(std::span<const std::string> texts,
                                          EmbeddingProvider& provider,
                                          const ProviderConfig& config);

// Splits "http://host:port/path" into origin and path.
struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};
ParsedUrl ParseUrl(const std::string& url);

}  // namespace dupaudit

#endif  // DUPAUDIT_EMBED_STORE_H_
