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

#include "dupaudit/reservoir_sampler.h"

#include <numeric>
#include <ostream>

#include "dupaudit/csv.h"

namespace dupaudit {

std::uint64_t StableHash64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::vector<std::uint64_t> ApportionQuotas(std::span<const std::uint64_t> seen,
                                           double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw ConfigError("sample rate must be in (0, 1]");
  }
  const std::uint64_t total_seen =
      std::accumulate(seen.begin(), seen.end(), std::uint64_t{0});
  const auto target =
      static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(total_seen)));

  std::vector<std::uint64_t> quotas(seen.size());
  std::vector<double> remainders(seen.size());
  std::uint64_t assigned = 0;
  for (std::size_t s = 0; s < seen.size(); ++s) {
    const double exact = rate * static_cast<double>(seen[s]);
    // Tolerate representation error such as 0.01 * 80000 = 799.9999...
    double floor_value = std::floor(exact + 1e-9 * std::max(1.0, exact));
    floor_value = std::min(floor_value, static_cast<double>(seen[s]));
    quotas[s] = static_cast<std::uint64_t>(floor_value);
    remainders[s] = std::max(0.0, exact - floor_value);
    assigned += quotas[s];
  }
  std::vector<std::size_t> order(seen.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
    std::size_t s = order[i];
    if (quotas[s] < seen[s]) {
      ++quotas[s];
      ++assigned;
    }
  }
  return quotas;
}

std::size_t DefaultCapacity(double rate, std::uint64_t expected_size) {
  double capacity = std::ceil(2.0 * rate * static_cast<double>(expected_size));
  return std::max<std::size_t>(1, static_cast<std::size_t>(capacity));
}

std::string SourceStratum::Key() const {
  std::string key;
  for (const std::string& level : path) {
    if (!key.empty()) key.push_back('/');
    key += level;
  }
  return key;
}

void UpdateReservoir(SourceStratum& stratum, CorpusChunk chunk, Rng& rng) {
  stratum.reservoir.Offer(std::move(chunk), rng);
}

SampleResult FinalizeSample(std::span<const SourceStratum> strata, double rate,
                            Rng& rng) {
  std::vector<Reservoir<CorpusChunk>> reservoirs;
  std::vector<std::string> names;
  reservoirs.reserve(strata.size());
  for (const SourceStratum& stratum : strata) {
    reservoirs.push_back(stratum.reservoir);
    names.push_back(stratum.Key());
  }
  std::vector<std::uint64_t> quotas;
  std::vector<std::vector<CorpusChunk>> draws = DrawQuotas<CorpusChunk>(
      reservoirs, names, rate, rng, &quotas);

  SampleResult result;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    StratumDraw draw{names[s], strata[s].reservoir.seen(), quotas[s], {}};
    for (CorpusChunk& chunk : draws[s]) {
      draw.drawn.push_back(chunk.chunk_id);
      result.chunks.push_back(std::move(chunk));
    }
    std::sort(draw.drawn.begin(), draw.drawn.end());
    result.strata.push_back(std::move(draw));
  }
  std::stable_sort(result.chunks.begin(), result.chunks.end(),
                   [](const CorpusChunk& a, const CorpusChunk& b) {
                     if (a.chunk_id != b.chunk_id) return a.chunk_id < b.chunk_id;
                     return a.origin < b.origin;
                   });
  return result;
}

StratifiedSampler::StratifiedSampler(Options options)
    : options_(std::move(options)) {
  if (!(options_.rate > 0.0 && options_.rate <= 1.0)) {
    throw ConfigError("sample rate must be in (0, 1]");
  }
}

void StratifiedSampler::Add(CorpusChunk chunk) {
  std::string key = chunk.SourceKey();
  auto it = strata_.find(key);
  if (it == strata_.end()) {
    std::size_t capacity = options_.default_capacity;
    if (auto e = options_.expected_sizes.find(key);
        e != options_.expected_sizes.end()) {
      capacity = DefaultCapacity(options_.rate, e->second);
    }
    it = strata_
             .emplace(key, SourceStratum{chunk.source_path,
                                         Reservoir<CorpusChunk>(capacity)})
             .first;
    rngs_.emplace(key, Rng(Mix64(options_.seed ^ StableHash64(key))));
  }
  UpdateReservoir(it->second, std::move(chunk), rngs_.at(key));
}

SampleResult StratifiedSampler::Finalize() {
  std::vector<SourceStratum> ordered;
  ordered.reserve(strata_.size());
  for (const auto& [key, stratum] : strata_) ordered.push_back(stratum);
  Rng rng(Mix64(options_.seed));
  return FinalizeSample(ordered, options_.rate, rng);
}

void WriteSampleManifest(std::ostream& out, const SampleResult& result,
                         double rate, std::uint64_t seed) {
  out << "# unit=chunks rate=" << rate << " seed=" << seed << '\n';
  out << "stratum,seen,quota,drawn_chunk_ids\n";
  for (const StratumDraw& draw : result.strata) {
    out << CsvField(draw.key) << ',' << draw.seen << ',' << draw.quota << ',';
    for (std::size_t i = 0; i < draw.drawn.size(); ++i) {
      if (i > 0) out << ' ';
      out << draw.drawn[i].ToHex();
    }
    out << '\n';
  }
}

}  // namespace dupaudit
