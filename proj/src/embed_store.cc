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

#include "dupaudit/embed_store.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "dupaudit/errors.h"
#include "dupaudit/reservoir_sampler.h"
#include "dupaudit/text.h"
#include "httplib.h"
#include "json.hpp"

namespace dupaudit {
namespace {

constexpr char kShardMagic[4] = {'E', 'M', 'B', '1'};

template <typename T>
void PutLe(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T GetLe(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError(std::string("shard truncated while reading ") + what);
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(buf[i]) << (8 * i);
  }
  return value;
}

// Deterministic standard normals from a SplitMix64 stream (Box-Muller).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

  double Next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = Uniform();
    double u2 = Uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  // Uniform in (0, 1].
  double Uniform() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = Mix64(state_);
    return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

std::vector<Half> Normalize(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("degenerate embedding");
  }
  std::vector<Half> out;
  out.reserve(v.size());
  for (float x : v) {
    out.push_back(FloatToHalf(static_cast<float>(x / norm)));
  }
  return out;
}

double HalfNorm(std::span<const Half> v) {
  double sum = 0.0;
  for (Half h : v) {
    double x = HalfToFloat(h);
    sum += x * x;
  }
  return std::sqrt(sum);
}

void EmbeddingShard::Append(const ChunkId& id, std::span<const Half> row) {
  if (dim == 0) dim = static_cast<std::uint32_t>(row.size());
  if (row.size() != dim) {
    throw FormatError("vector dimension " + std::to_string(row.size()) +
                      " does not match shard dimension " + std::to_string(dim));
  }
  ids.push_back(id);
  vectors.insert(vectors.end(), row.begin(), row.end());
}

void EmbeddingShard::Validate() const {
  if (vectors.size() != ids.size() * static_cast<std::size_t>(dim)) {
    throw FormatError("shard vector storage does not match count x dim");
  }
  std::unordered_set<ChunkId> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) {
    throw FormatError("shard contains duplicate chunk ids");
  }
  for (std::size_t i = 0; i < count(); ++i) {
    double norm = HalfNorm(Row(i));
    if (std::abs(norm - 1.0) > kNormTolerance) {
      throw FormatError("vector for " + ids[i].ToHex() +
                        " is not unit-normalized (norm " +
                        std::to_string(norm) + ")");
    }
  }
}

void WriteShard(std::ostream& out, const EmbeddingShard& shard) {
  shard.Validate();
  out.write(kShardMagic, sizeof(kShardMagic));
  PutLe<std::uint32_t>(out, shard.dim);
  PutLe<std::uint64_t>(out, shard.count());
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(shard.provider_tag.size()));
  out.write(shard.provider_tag.data(),
            static_cast<std::streamsize>(shard.provider_tag.size()));
  for (const ChunkId& id : shard.ids) {
    out.write(reinterpret_cast<const char*>(id.bytes.data()), id.bytes.size());
  }
  std::vector<unsigned char> buf;
  buf.reserve(shard.vectors.size() * 2);
  for (Half h : shard.vectors) {
    buf.push_back(static_cast<unsigned char>(h.bits & 0xFF));
    buf.push_back(static_cast<unsigned char>(h.bits >> 8));
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("failed to write shard");
}

EmbeddingShard ReadShard(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof(magic))) {
    throw FormatError("shard truncated while reading magic");
  }
  if (!std::equal(magic, magic + 3, kShardMagic)) {
    throw FormatError("not an embedding shard (bad magic)");
  }
  if (magic[3] != kShardMagic[3]) {
    throw FormatError(std::string("unsupported shard version '") + magic[3] +
                      "'");
  }
  EmbeddingShard shard;
  shard.dim = GetLe<std::uint32_t>(in, "dim");
  const auto count = GetLe<std::uint64_t>(in, "count");
  const auto tag_size = GetLe<std::uint32_t>(in, "provider tag length");
  if (shard.dim == 0 && count > 0) {
    throw FormatError("shard has vectors but zero dimension");
  }
  shard.provider_tag.resize(tag_size);
  if (!in.read(shard.provider_tag.data(), tag_size)) {
    throw FormatError("shard truncated while reading provider tag");
  }
  shard.ids.resize(count);
  for (ChunkId& id : shard.ids) {
    if (!in.read(reinterpret_cast<char*>(id.bytes.data()), id.bytes.size())) {
      throw FormatError("shard truncated while reading ids");
    }
  }
  std::vector<unsigned char> buf(count * shard.dim * 2);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size()))) {
    throw FormatError("shard truncated while reading vectors");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after shard payload");
  }
  shard.vectors.resize(count * shard.dim);
  for (std::size_t i = 0; i < shard.vectors.size(); ++i) {
    shard.vectors[i].bits =
        static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
  }
  return shard;
}

void WriteShard(const std::filesystem::path& path, const EmbeddingShard& shard) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open shard for writing: " + path.string());
  WriteShard(out, shard);
}

EmbeddingShard ReadShard(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open shard: " + path.string());
  EmbeddingShard shard = ReadShard(in);
  shard.dataset_id = ShardDatasetId(path);
  return shard;
}

std::string ShardDatasetId(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  return name.substr(0, name.find('.'));
}

std::vector<std::filesystem::path> ListShards(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".emb") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

void ProviderConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("provider batch size must be >= 1");
  if (max_retries < 0) throw ConfigError("provider max retries must be >= 0");
}

HashingEmbedder::HashingEmbedder(std::uint32_t dim, std::uint64_t seed,
                                 std::string prefix)
    : dim_(dim), seed_(seed), prefix_(std::move(prefix)) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be >= 1");
}

std::vector<float> HashingEmbedder::EmbedOne(std::string_view text) const {
  std::string full = prefix_.empty() ? std::string(text) : prefix_ + " " + std::string(text);
  std::unordered_map<std::string_view, std::uint32_t> counts;
  std::vector<std::string_view> order;
  for (std::string_view token : WhitespaceTokens(full)) {
    if (counts[token]++ == 0) order.push_back(token);
  }
  // Accumulate in first-occurrence order so the result is reproducible.
  std::vector<double> acc(dim_, 0.0);
  for (std::string_view token : order) {
    GaussianStream gauss(Mix64(seed_ ^ StableHash64(token)));
    const double weight = counts[token];
    for (std::uint32_t d = 0; d < dim_; ++d) acc[d] += weight * gauss.Next();
  }
  return std::vector<float>(acc.begin(), acc.end());
}

std::vector<std::vector<float>> HashingEmbedder::Embed(
    std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) out.push_back(EmbedOne(text));
  return out;
}

std::string HashingEmbedder::Tag() const {
  std::string tag = "hashing-projection:dim=" + std::to_string(dim_) +
                    ":seed=" + std::to_string(seed_);
  if (!prefix_.empty()) tag += ":prefix=" + prefix_;
  return tag;
}

ParsedUrl ParseUrl(const std::string& url) {
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL lacks a scheme: " + url);
  }
  std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpEmbedder::HttpEmbedder(ProviderConfig config) : config_(std::move(config)) {
  config_.Validate();
  ParseUrl(config_.endpoint);
}

std::vector<std::vector<float>> HttpEmbedder::Embed(
    std::span<const std::string> texts) {
  ParsedUrl url = ParseUrl(config_.endpoint);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const std::string& text : texts) {
    body["texts"].push_back(config_.prefix.empty() ? text
                                                   : config_.prefix + " " + text);
  }
  auto response = client.Post(url.path, headers, body.dump(), "application/json");
  if (!response) {
    throw TransientProviderError("embedding request failed: " +
                                 httplib::to_string(response.error()));
  }
  if (response->status == 429 || response->status >= 500) {
    throw TransientProviderError("embedding provider returned HTTP " +
                                 std::to_string(response->status));
  }
  if (response->status != 200) {
    throw ProviderError("embedding provider returned HTTP " +
                        std::to_string(response->status));
  }
  nlohmann::json parsed = nlohmann::json::parse(response->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("vectors") ||
      !parsed["vectors"].is_array()) {
    throw ProviderError("embedding response lacks a 'vectors' array");
  }
  std::vector<std::vector<float>> out;
  for (const auto& row : parsed["vectors"]) {
    out.push_back(row.get<std::vector<float>>());
  }
  return out;
}

std::string HttpEmbedder::Tag() const {
  std::string tag = "http:" + config_.endpoint;
  if (!config_.prefix.empty()) tag += ":prefix=" + config_.prefix;
  return tag;
}

std::vector<std::vector<Half>> EmbedBatch(std::span<const std::string> texts,
                                          EmbeddingProvider& provider,
                                          const ProviderConfig& config) {
  config.Validate();
  if (texts.empty()) throw ConfigError("cannot embed an empty batch");
  std::vector<std::vector<Half>> out(texts.size());
  std::vector<std::size_t> failed;
  std::size_t dim = 0;
  for (std::size_t begin = 0; begin < texts.size(); begin += config.batch_size) {
    std::size_t end = std::min(texts.size(), begin + config.batch_size);
    std::span<const std::string> batch = texts.subspan(begin, end - begin);
    std::vector<std::vector<float>> raw;
    bool ok = false;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      try {
        raw = provider.Embed(batch);
        ok = true;
        break;
      } catch (const TransientProviderError&) {
        if (attempt == config.max_retries) break;
        std::this_thread::sleep_for(std::chrono::duration<double>(
            config.backoff_seconds * std::ldexp(1.0, attempt)));
      } catch (const ProviderError&) {
        break;
      }
    }
    if (!ok) {
      for (std::size_t i = begin; i < end; ++i) failed.push_back(i);
      continue;
    }
    if (raw.size() != batch.size()) {
      throw FormatError("provider returned " + std::to_string(raw.size()) +
                        " vectors for " + std::to_string(batch.size()) +
                        " texts");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (dim == 0) dim = raw[i].size();
      if (raw[i].size() != dim) {
        throw FormatError("embedding dimension mismatch: " +
                          std::to_string(raw[i].size()) + " vs " +
                          std::to_string(dim));
      }
      out[begin + i] = Normalize(raw[i]);
    }
  }
  if (!failed.empty()) {
    throw ProviderError("embedding failed for " + std::to_string(failed.size()) +
                            " texts after retries",
                        std::move(failed));
  }
  return out;
}

}  // namespace dupaudit
