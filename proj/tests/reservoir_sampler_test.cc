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

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dupaudit/reservoir_sampler.h"

namespace dupaudit {
namespace {

CorpusChunk MakeChunk(const std::string& source, std::size_t i) {
  CorpusChunk c;
  c.dataset_id = "ds";
  c.text = source + " item " + std::to_string(i);
  c.chunk_id = ComputeChunkId("ds", c.text);
  c.source_path = ParseSourcePath(source);
  c.origin.record_index = i;
  return c;
}

TEST(ReservoirTest, MatchesAlgorithmRReplay) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng lib_rng(seed);
    Reservoir<int> r(7);
    for (int i = 0; i < 500; ++i) r.Offer(i, lib_rng);

    // Replay with the same generator and slot rule.
    Rng rng(seed);
    std::vector<int> slots;
    for (int i = 0; i < 500; ++i) {
      if (slots.size() < 7) {
        slots.push_back(i);
        continue;
      }
      std::uniform_int_distribution<std::uint64_t> d(0, static_cast<std::uint64_t>(i));
      std::uint64_t j = d(rng);
      if (j < 7) slots[j] = i;
    }
    EXPECT_EQ(r.items(), slots);
    EXPECT_EQ(r.seen(), 500u);
  }
}

TEST(ReservoirTest, ShortStreamKeepsEverything) {
  Rng rng(1);
  Reservoir<int> r(10);
  for (int i = 0; i < 4; ++i) r.Offer(i, rng);
  EXPECT_EQ(r.items(), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_THROW(Reservoir<int>(0), ConfigError);
}

TEST(ReservoirTest, InclusionIsUniform) {
  const int n = 20;
  const int cap = 5;
  const int trials = 4000;
  std::vector<int> hits(n, 0);
  for (int t = 0; t < trials; ++t) {
    Rng rng(Mix64(t));
    Reservoir<int> r(cap);
    for (int i = 0; i < n; ++i) r.Offer(i, rng);
    for (int v : r.items()) ++hits[v];
  }
  const double p = static_cast<double>(cap) / n;
  const double sigma = std::sqrt(trials * p * (1 - p));
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(hits[i], trials * p, 4 * sigma) << "item " << i;
  }
}

TEST(QuotaTest, HandCases) {
  std::vector<std::uint64_t> seen = {80000, 20000};
  EXPECT_EQ(ApportionQuotas(seen, 0.01), (std::vector<std::uint64_t>{800, 200}));
  // 1.5 rounds to 2; equal remainders go to the lower index.
  std::vector<std::uint64_t> three = {1, 1, 1};
  EXPECT_EQ(ApportionQuotas(three, 0.5), (std::vector<std::uint64_t>{1, 1, 0}));
  std::vector<std::uint64_t> uneven = {7, 3};
  // exact 2.1 and 0.9; total 3 -> floors 2,0 + one unit to the 0.9 remainder.
  EXPECT_EQ(ApportionQuotas(uneven, 0.3), (std::vector<std::uint64_t>{2, 1}));
}

TEST(QuotaTest, SumAndBoundsProperty) {
  Rng rng(5);
  std::uniform_int_distribution<std::uint64_t> size(1, 100000);
  std::uniform_real_distribution<double> rate(0.0001, 1.0);
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::uint64_t> seen(1 + t % 6);
    for (auto& s : seen) s = size(rng);
    const double r = rate(rng);
    std::vector<std::uint64_t> q = ApportionQuotas(seen, r);
    const double total = std::accumulate(seen.begin(), seen.end(), 0.0);
    EXPECT_EQ(std::accumulate(q.begin(), q.end(), std::uint64_t{0}),
              static_cast<std::uint64_t>(std::llround(r * total)));
    for (std::size_t i = 0; i < seen.size(); ++i) {
      const double exact = r * static_cast<double>(seen[i]);
      EXPECT_GE(static_cast<double>(q[i]), std::floor(exact) - 1e-6);
      EXPECT_LE(static_cast<double>(q[i]), std::ceil(exact) + 1 + 1e-6);
      EXPECT_LE(q[i], seen[i]);
    }
  }
}

TEST(QuotaTest, DrawQuotasErrors) {
  Rng rng(3);
  std::vector<Reservoir<int>> rs;
  rs.emplace_back(10);
  rs.emplace_back(10);
  for (int i = 0; i < 100; ++i) rs[0].Offer(i, rng);
  std::vector<std::string> names = {"a", "b"};
  EXPECT_THROW(DrawQuotas<int>(rs, names, 0.05, rng), ConfigError);  // b empty
  for (int i = 0; i < 100; ++i) rs[1].Offer(i, rng);
  EXPECT_THROW(DrawQuotas<int>(rs, names, 0.5, rng), ConfigError);  // quota 50 > 10
  EXPECT_THROW(DrawQuotas<int>(rs, names, 0.0, rng), ConfigError);
  std::vector<std::uint64_t> quotas;
  auto draws = DrawQuotas<int>(rs, names, 0.05, rng, &quotas);
  EXPECT_EQ(quotas, (std::vector<std::uint64_t>{5, 5}));
  EXPECT_EQ(draws[0].size(), 5u);
  std::set<int> unique(draws[0].begin(), draws[0].end());
  EXPECT_EQ(unique.size(), 5u);
}

TEST(QuotaTest, DefaultCapacity) {
  EXPECT_EQ(DefaultCapacity(0.01, 80000), 1600u);
  EXPECT_EQ(DefaultCapacity(0.01, 10), 1u);
}

TEST(StratifiedSamplerTest, DeterministicAndSorted) {
  auto run = [](std::uint64_t seed) {
    StratifiedSampler::Options opts;
    opts.rate = 0.1;
    opts.seed = seed;
    opts.expected_sizes = {{"web/a", 300}, {"web/b", 100}};
    StratifiedSampler s(opts);
    for (std::size_t i = 0; i < 300; ++i) s.Add(MakeChunk("web/a", i));
    for (std::size_t i = 0; i < 100; ++i) s.Add(MakeChunk("web/b", i));
    return s.Finalize();
  };
  SampleResult a = run(42);
  SampleResult b = run(42);
  SampleResult c = run(43);
  ASSERT_EQ(a.chunks.size(), 40u);
  ASSERT_EQ(a.strata.size(), 2u);
  EXPECT_EQ(a.strata[0].quota, 30u);
  EXPECT_EQ(a.strata[1].quota, 10u);
  std::vector<ChunkId> ia;
  std::vector<ChunkId> ib;
  std::vector<ChunkId> ic;
  for (const auto& x : a.chunks) ia.push_back(x.chunk_id);
  for (const auto& x : b.chunks) ib.push_back(x.chunk_id);
  for (const auto& x : c.chunks) ic.push_back(x.chunk_id);
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
  EXPECT_TRUE(std::is_sorted(ia.begin(), ia.end()));

  std::stringstream ss;
  WriteSampleManifest(ss, a, 0.1, 42);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "# unit=chunks rate=0.1 seed=42");
  std::getline(ss, header);
  EXPECT_EQ(header, "stratum,seen,quota,drawn_chunk_ids");
  std::string row;
  std::getline(ss, row);
  EXPECT_EQ(row.rfind("web/a,300,30,", 0), 0u);
}

TEST(StratifiedSamplerTest, StratumRngIsIndependentOfOtherStrata) {
  // Adding a second stratum must not change which chunks the first keeps.
  auto kept = [](bool with_b) {
    StratifiedSampler::Options opts;
    opts.rate = 0.5;
    opts.seed = 9;
    opts.default_capacity = 20;
    StratifiedSampler s(opts);
    for (std::size_t i = 0; i < 200; ++i) {
      s.Add(MakeChunk("a", i));
      if (with_b) s.Add(MakeChunk("b", i));
    }
    std::vector<ChunkId> ids;
    for (const CorpusChunk& c : s.strata().at("a").reservoir.items()) ids.push_back(c.chunk_id);
    return ids;
  };
  EXPECT_EQ(kept(false), kept(true));
}

TEST(StableHashTest, KnownValues) {
  // FNV-1a 64 reference values.
  EXPECT_EQ(StableHash64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(StableHash64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(Mix64(1), Mix64(2));
}

}  // namespace
}  // namespace dupaudit
