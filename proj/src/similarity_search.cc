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

#include "dupaudit/similarity_search.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "dupaudit/csv.h"
#include "dupaudit/errors.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

struct Candidate {
  double score;
  ChunkId id;
  std::uint32_t dataset;
};

// Total order: higher score first, then lower chunk id, then lower dataset.
bool Better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.id != b.id) return a.id < b.id;
  return a.dataset < b.dataset;
}

double Dot(const float* a, const float* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    sum += static_cast<double>(a[d]) * static_cast<double>(b[d]);
  }
  return std::clamp(sum, -1.0, 1.0);
}

// Bounded heap keeping the k best candidates; the worst sits at the front.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}

  void Push(const Candidate& c) {
    if (k_ == 0) return;
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end(), Better);
    } else if (Better(c, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), Better);
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end(), Better);
    }
  }

  const std::vector<Candidate>& items() const { return heap_; }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

using KForGroup = std::function<std::size_t(std::size_t group_size)>;

std::vector<std::vector<SimilarityMatch>> Scan(
    std::span<const Query> queries, std::span<const EmbeddingShard> shards,
    const ScanOptions& options, const KForGroup& k_for_group) {
  std::vector<std::vector<SimilarityMatch>> results(queries.size());
  if (queries.empty()) return results;
  const std::size_t dim = queries.front().vector.size();
  for (const Query& q : queries) {
    if (q.vector.size() != dim) {
      throw ConfigError("query dimensions disagree");
    }
  }
  std::set<std::string> dataset_set;
  for (const EmbeddingShard& shard : shards) {
    if (shard.count() > 0 && shard.dim != dim) {
      throw ConfigError("shard dimension " + std::to_string(shard.dim) +
                        " does not match query dimension " + std::to_string(dim));
    }
    dataset_set.insert(shard.dataset_id);
  }
  const std::vector<std::string> datasets(dataset_set.begin(), dataset_set.end());
  auto dataset_index = [&](const std::string& id) {
    return static_cast<std::uint32_t>(
        std::lower_bound(datasets.begin(), datasets.end(), id) - datasets.begin());
  };
  const std::size_t groups = options.union_datasets ? 1 : datasets.size();
  std::vector<std::size_t> group_sizes(groups, 0);
  for (const EmbeddingShard& shard : shards) {
    std::size_t g = options.union_datasets ? 0 : dataset_index(shard.dataset_id);
    group_sizes[g] += shard.count();
  }
  std::vector<std::size_t> group_k(groups);
  for (std::size_t g = 0; g < groups; ++g) group_k[g] = k_for_group(group_sizes[g]);

  const unsigned jobs = std::max(
      1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(shards.size())));
  // partial[worker][query * groups + group]
  std::vector<std::vector<TopK>> partial(jobs);
  auto work = [&](unsigned worker) {
    std::vector<TopK>& heaps = partial[worker];
    heaps.reserve(queries.size() * groups);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      for (std::size_t g = 0; g < groups; ++g) heaps.emplace_back(group_k[g]);
    }
    std::vector<float> row(dim);
    for (std::size_t s = worker; s < shards.size(); s += jobs) {
      const EmbeddingShard& shard = shards[s];
      const std::uint32_t ds = dataset_index(shard.dataset_id);
      const std::size_t g = options.union_datasets ? 0 : ds;
      for (std::size_t r = 0; r < shard.count(); ++r) {
        std::span<const Half> half_row = shard.Row(r);
        for (std::size_t d = 0; d < dim; ++d) row[d] = HalfToFloat(half_row[d]);
        for (std::size_t q = 0; q < queries.size(); ++q) {
          double score = Dot(queries[q].vector.data(), row.data(), dim);
          heaps[q * groups + g].Push(Candidate{score, shard.ids[r], ds});
        }
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(work, w);
    for (std::thread& t : threads) t.join();
  }

  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t g = 0; g < groups; ++g) {
      std::vector<Candidate> merged;
      for (unsigned w = 0; w < jobs; ++w) {
        const auto& items = partial[w][q * groups + g].items();
        merged.insert(merged.end(), items.begin(), items.end());
      }
      std::sort(merged.begin(), merged.end(), Better);
      if (merged.size() > group_k[g]) merged.resize(group_k[g]);
      for (std::size_t i = 0; i < merged.size(); ++i) {
        results[q].push_back(SimilarityMatch{
            queries[q].benchmark_id, queries[q].item_id, merged[i].id,
            datasets[merged[i].dataset], merged[i].score,
            static_cast<std::uint32_t>(i + 1)});
      }
    }
  }
  return results;
}

}  // namespace

TextVariant ParseTextVariant(std::string_view name) {
  if (name == "input") return TextVariant::kInput;
  if (name == "output") return TextVariant::kOutput;
  if (name == "joined") return TextVariant::kJoined;
  throw ConfigError("unknown text variant '" + std::string(name) +
                    "' (expected input, output or joined)");
}

std::string BenchmarkItem::Text(TextVariant variant) const {
  switch (variant) {
    case TextVariant::kInput:
      if (input) return *input;
      break;
    case TextVariant::kOutput:
      if (output) return *output;
      break;
    case TextVariant::kJoined:
      if (text) return *text;
      if (input && output) return *input + "\n\n" + *output;
      if (input) return *input;
      if (output) return *output;
      break;
  }
  throw ConfigError("item " + item_id + " lacks the requested text variant");
}

std::vector<BenchmarkItem> ReadBenchmark(std::istream& in,
                                         const std::string& default_benchmark_id,
                                         std::span<const std::string> metadata_keys) {
  std::vector<BenchmarkItem> items;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError("benchmark line " + std::to_string(line_no) +
                       " is not a JSON object");
    }
    BenchmarkItem item;
    item.benchmark_id = j.value("benchmark_id", default_benchmark_id);
    if (j.contains("item_id")) {
      const auto& id = j["item_id"];
      item.item_id = id.is_string() ? id.get<std::string>() : id.dump();
    } else if (j.contains("id")) {
      const auto& id = j["id"];
      item.item_id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
      item.item_id = std::to_string(line_no - 1);
    }
    for (auto [field, slot] : {std::pair{"input", &item.input},
                               std::pair{"output", &item.output},
                               std::pair{"text", &item.text}}) {
      if (j.contains(field) && j[field].is_string()) {
        *slot = j[field].get<std::string>();
      }
    }
    if (!item.input && !item.output && !item.text) {
      throw ParseError("benchmark line " + std::to_string(line_no) +
                       " has no text variant");
    }
    if (j.contains("metadata") && j["metadata"].is_object()) {
      item.metadata = j["metadata"];
    }
    for (const char* key : {"elo", "grid_size", "level"}) {
      if (j.contains(key)) item.metadata[key] = j[key];
    }
    for (const std::string& key : metadata_keys) {
      if (j.contains(key)) item.metadata[key] = j[key];
    }
    if (!seen.emplace(item.benchmark_id, item.item_id).second) {
      throw ConfigError("duplicate item id '" + item.item_id +
                        "' in benchmark " + item.benchmark_id);
    }
    items.push_back(std::move(item));
  }
  return items;
}

nlohmann::json BenchmarkItemToJson(const BenchmarkItem& item) {
  nlohmann::json j{{"benchmark_id", item.benchmark_id}, {"item_id", item.item_id}};
  if (item.input) j["input"] = *item.input;
  if (item.output) j["output"] = *item.output;
  if (item.text) j["text"] = *item.text;
  if (!item.metadata.empty()) j["metadata"] = item.metadata;
  return j;
}

double Cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ConfigError("cosine of vectors with dimensions " +
                      std::to_string(a.size()) + " and " +
                      std::to_string(b.size()));
  }
  return Dot(a.data(), b.data(), a.size());
}

std::vector<std::vector<SimilarityMatch>> TopKMatches(
    std::span<const Query> queries, std::span<const EmbeddingShard> shards,
    const ScanOptions& options) {
  if (options.k < 1) throw ConfigError("k must be >= 1");
  return Scan(queries, shards, options,
              [k = options.k](std::size_t) { return k; });
}

std::size_t PercentileCount(double pct, std::size_t n) {
  double exact = pct * static_cast<double>(n);
  double count = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::min(n, static_cast<std::size_t>(std::max(0.0, count)));
}

std::vector<std::vector<SimilarityMatch>> TopPercentilePools(
    std::span<const Query> queries, std::span<const EmbeddingShard> shards,
    double pct, const ScanOptions& options) {
  if (!(pct > 0.0 && pct <= 1.0)) {
    throw ConfigError("percentile fraction must be in (0, 1]");
  }
  return Scan(queries, shards, options,
              [pct](std::size_t n) { return PercentileCount(pct, n); });
}

std::vector<SimilarityMatch> SamplePool(std::span<const SimilarityMatch> pool,
                                        std::size_t n, Rng& rng) {
  std::vector<SimilarityMatch> all(pool.begin(), pool.end());
  return DrawWithoutReplacement(all, n, rng);
}

std::vector<Query> EmbedQueries(std::span<const BenchmarkItem> items,
                                TextVariant variant, EmbeddingProvider& provider,
                                const ProviderConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(items.size());
  for (const BenchmarkItem& item : items) texts.push_back(item.Text(variant));
  std::vector<Query> queries;
  if (texts.empty()) return queries;
  std::vector<std::vector<Half>> vectors = EmbedBatch(texts, provider, config);
  for (std::size_t i = 0; i < items.size(); ++i) {
    Query q{items[i].benchmark_id, items[i].item_id, {}};
    q.vector.reserve(vectors[i].size());
    for (Half h : vectors[i]) q.vector.push_back(HalfToFloat(h));
    queries.push_back(std::move(q));
  }
  return queries;
}

void WriteMatchesCsv(std::ostream& out, std::span<const SimilarityMatch> matches,
                     const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "benchmark_id,item_id,chunk_id,dataset_id,score,rank\n";
  char score[32];
  for (const SimilarityMatch& m : matches) {
    std::snprintf(score, sizeof(score), "%.17g", m.score);
    out << CsvField(m.benchmark_id) << ',' << CsvField(m.item_id) << ','
        << m.chunk_id.ToHex() << ',' << CsvField(m.dataset_id) << ',' << score
        << ',' << m.rank << '\n';
  }
}

std::vector<SimilarityMatch> ReadMatchesCsv(std::istream& in) {
  std::vector<SimilarityMatch> matches;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (SplitCsvLine(line).size() != 6 ||
          line.rfind("benchmark_id,", 0) != 0) {
        throw ParseError("match CSV lacks the expected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f = SplitCsvLine(line);
    if (f.size() != 6) throw ParseError("match CSV row has wrong field count");
    SimilarityMatch m;
    m.benchmark_id = f[0];
    m.item_id = f[1];
    m.chunk_id = ChunkId::FromHex(f[2]);
    m.dataset_id = f[3];
    m.score = std::stod(f[4]);
    m.rank = static_cast<std::uint32_t>(std::stoul(f[5]));
    matches.push_back(std::move(m));
  }
  return matches;
}

}  // namespace dupaudit
