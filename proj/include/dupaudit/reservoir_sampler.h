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

#ifndef DUPAUDIT_RESERVOIR_SAMPLER_H_
#define DUPAUDIT_RESERVOIR_SAMPLER_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dupaudit/corpus_ingest.h"
#include "dupaudit/errors.h"

namespace dupaudit {

using Rng = std::mt19937_64;

// Single-pass uniform reservoir (Algorithm R). The first `capacity` items are
// kept; the i-th item (1-based) after that draws j uniform in [0, i) and
// replaces slot j when j < capacity.
template <typename T>
class Reservoir {
 public:
  explicit Reservoir(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("reservoir capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  void Offer(T item, Rng& rng) {
    ++seen_;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      return;
    }
    std::uniform_int_distribution<std::uint64_t> slot(0, seen_ - 1);
    std::uint64_t j = slot(rng);
    if (j < capacity_) items_[j] = std::move(item);
  }

  std::size_t capacity() const { return capacity_; }
  std::uint64_t seen() const { return seen_; }
  const std::vector<T>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<T> items_;
};

// Largest-remainder apportionment of round(rate * sum(seen)) across strata
// proportionally to `seen`. Ties in the remainder go to the lower index.
std::vector<std::uint64_t> ApportionQuotas(std::span<const std::uint64_t> seen,
                                           double rate);

// Uniform draw of `n` items without replacement; returns all items when
// n >= items.size(). Relative order of the input is preserved.
template <typename T>
std::vector<T> DrawWithoutReplacement(const std::vector<T>& items,
                                      std::size_t n, Rng& rng) {
  if (n >= items.size()) return items;
  std::vector<T> out;
  out.reserve(n);
  std::sample(items.begin(), items.end(), std::back_inserter(out), n, rng);
  return out;
}

// Draws each stratum's quota from its reservoir. `names` labels strata in
// error messages. Throws ConfigError for an empty stratum or when a quota
// exceeds what the reservoir holds.
template <typename T>
std::vector<std::vector<T>> DrawQuotas(
    std::span<const Reservoir<T>> reservoirs,
    std::span<const std::string> names, double rate, Rng& rng,
    std::vector<std::uint64_t>* quotas_out = nullptr) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw ConfigError("sample rate must be in (0, 1]");
  }
  std::vector<std::uint64_t> seen;
  for (std::size_t s = 0; s < reservoirs.size(); ++s) {
    if (reservoirs[s].seen() == 0) {
      throw ConfigError("stratum '" + names[s] + "' has seen no items");
    }
    seen.push_back(reservoirs[s].seen());
  }
  std::vector<std::uint64_t> quotas = ApportionQuotas(seen, rate);
  for (std::size_t s = 0; s < reservoirs.size(); ++s) {
    if (quotas[s] > reservoirs[s].items().size()) {
      throw ConfigError("stratum '" + names[s] + "' is under-provisioned: quota " +
                        std::to_string(quotas[s]) + " exceeds reservoir size " +
                        std::to_string(reservoirs[s].items().size()));
    }
  }
  std::vector<std::vector<T>> draws;
  for (std::size_t s = 0; s < reservoirs.size(); ++s) {
    draws.push_back(DrawWithoutReplacement(reservoirs[s].items(),
                                           static_cast<std::size_t>(quotas[s]),
                                           rng));
  }
  if (quotas_out != nullptr) *quotas_out = std::move(quotas);
  return draws;
}

// Default reservoir capacity: ceil(2 * rate * expected), at least 1.
std::size_t DefaultCapacity(double rate, std::uint64_t expected_size);

// Per-sub-source reservoir.
struct SourceStratum {
  std::vector<std::string> path;
  Reservoir<CorpusChunk> reservoir;

  std::string Key() const;
};

void UpdateReservoir(SourceStratum& stratum, CorpusChunk chunk, Rng& rng);

struct StratumDraw {
  std::string key;
  std::uint64_t seen = 0;
  std::uint64_t quota = 0;
  std::vector<ChunkId> drawn;
};

struct SampleResult {
  std::vector<CorpusChunk> chunks;  // sorted by chunk_id
  std::vector<StratumDraw> strata;  // in input order
};

// Draws quota_s from every stratum and returns the union sorted by chunk_id.
SampleResult FinalizeSample(std::span<const SourceStratum> strata, double rate,
                            Rng& rng);

// Routes chunks into one reservoir per source path. Each stratum owns an RNG
// derived from (seed, path), so the sample does not depend on how chunks from
// different strata interleave.
class StratifiedSampler {
 public:
  struct Options {
    double rate = 0.01;
    std::uint64_t seed = 0;
    // Used when a stratum has no entry in expected_sizes.
    std::size_t default_capacity = 1024;
    // Expected stratum sizes keyed by "a/b" path; capacity is provisioned as
    // DefaultCapacity(rate, expected).
    std::map<std::string, std::uint64_t> expected_sizes;
  };

  explicit StratifiedSampler(Options options);

  void Add(CorpusChunk chunk);
  SampleResult Finalize();

  const std::map<std::string, SourceStratum>& strata() const {
    return strata_;
  }

 private:
  Options options_;
  std::map<std::string, SourceStratum> strata_;
  std::map<std::string, Rng> rngs_;
};

// CSV audit trail: one row per stratum with the drawn chunk ids.
void WriteSampleManifest(std::ostream& out, const SampleResult& result,
                         double rate, std::uint64_t seed);

// Stable 64-bit string hash (FNV-1a) for seeding.
std::uint64_t StableHash64(std::string_view text);

// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

}  // namespace dupaudit

#endif  // DUPAUDIT_RESERVOIR_SAMPLER_H_
