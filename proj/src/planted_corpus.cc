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

#include "dupaudit/planted_corpus.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

#include "dupaudit/chunk_id.h"
#include "dupaudit/errors.h"
#include "dupaudit/reservoir_sampler.h"
#include "json.hpp"

namespace dupaudit {
namespace {

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::vector<std::string> MakeVocabulary(std::size_t size, Rng& rng) {
  std::uniform_int_distribution<int> consonant(0, 13);
  std::uniform_int_distribution<int> vowel(0, 4);
  std::uniform_int_distribution<int> syllables(2, 4);
  std::unordered_set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < size) {
    std::string w;
    for (int s = syllables(rng); s > 0; --s) {
      w.push_back(kConsonants[consonant(rng)]);
      w.push_back(kVowels[vowel(rng)]);
    }
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::string Join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> RandomTokens(std::size_t n, const std::vector<std::string>& vocab,
                                      Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(vocab[pick(rng)]);
  return tokens;
}

std::string Rewrite(const std::vector<std::string>& tokens, double fraction,
                    const std::vector<std::string>& vocab, Rng& rng) {
  std::vector<std::string> out = tokens;
  std::bernoulli_distribution replace(fraction);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (std::string& t : out) {
    if (replace(rng)) t = vocab[pick(rng)];
  }
  if (out.size() > 1) {
    std::uniform_int_distribution<std::size_t> pos(0, out.size() - 2);
    for (int s = 0; s < 3; ++s) {
      std::size_t i = pos(rng);
      std::swap(out[i], out[i + 1]);
    }
  }
  if (out == tokens) out.front() = out.front() + "s";
  return Join(out);
}

double Fraction(const std::vector<PlantedItem>& items, bool include_exact) {
  if (items.empty()) return 0.0;
  std::size_t n = 0;
  for (const PlantedItem& item : items) {
    if (item.kind == PlantKind::kSemantic) ++n;
    if (include_exact && item.kind == PlantKind::kExact) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(items.size());
}

}  // namespace

double PlantedCorpus::ExpectedInclusive() const { return Fraction(items, true); }
double PlantedCorpus::ExpectedExclusive() const { return Fraction(items, false); }

PlantedCorpus GeneratePlantedCorpus(const PlantedOptions& o) {
  const std::size_t planted = o.n_exact + o.n_semantic;
  if (planted > o.n_chunks) throw ConfigError("more planted duplicates than chunks");
  if (o.min_chunk_tokens < 1 || o.min_chunk_tokens > o.max_chunk_tokens) {
    throw ConfigError("bad chunk token range");
  }
  if (o.vocab_size < 2 || o.n_sources < 1) throw ConfigError("bad planted options");
  Rng rng(Mix64(o.seed));
  const std::vector<std::string> vocab = MakeVocabulary(o.vocab_size, rng);

  std::vector<PlantKind> kinds;
  kinds.insert(kinds.end(), o.n_exact, PlantKind::kExact);
  kinds.insert(kinds.end(), o.n_semantic, PlantKind::kSemantic);
  kinds.insert(kinds.end(), o.n_none, PlantKind::kNone);
  std::shuffle(kinds.begin(), kinds.end(), rng);

  PlantedCorpus corpus;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    PlantedItem item;
    item.item_id = "item-" + std::to_string(i);
    item.kind = kinds[i];
    std::vector<std::string> tokens = RandomTokens(o.item_tokens, vocab, rng);
    item.text = Join(tokens);
    if (item.kind == PlantKind::kExact) {
      item.chunk_text = item.text;
    } else if (item.kind == PlantKind::kSemantic) {
      item.chunk_text = Rewrite(tokens, o.rewrite_fraction, vocab, rng);
    }
    if (item.chunk_text) texts.push_back(*item.chunk_text);
    corpus.items.push_back(std::move(item));
  }

  std::uniform_int_distribution<std::size_t> length(o.min_chunk_tokens, o.max_chunk_tokens);
  while (texts.size() < o.n_chunks) texts.push_back(Join(RandomTokens(length(rng), vocab, rng)));
  std::shuffle(texts.begin(), texts.end(), rng);

  for (std::size_t i = 0; i < texts.size(); ++i) {
    corpus.corpus_lines.push_back(
        nlohmann::json{{"text", texts[i]},
                       {"source", "planted/part-" + std::to_string(i % o.n_sources)}}
            .dump());
  }
  for (const PlantedItem& item : corpus.items) {
    corpus.benchmark_lines.push_back(
        nlohmann::json{{"item_id", item.item_id}, {"text", item.text}}.dump());
    if (!item.chunk_text) continue;
    corpus.lineage_lines.push_back(
        nlohmann::json{
            {"benchmark_id", o.benchmark_id},
            {"item_id", item.item_id},
            {"chunk_id", ComputeChunkId(o.dataset_id, *item.chunk_text).ToHex()},
            {"match_type", item.kind == PlantKind::kExact ? "exact" : "equivalent"}}
            .dump());
  }
  return corpus;
}

std::filesystem::path WritePlantedDemo(const std::filesystem::path& dir,
                                       const PlantedOptions& options) {
  PlantedCorpus corpus = GeneratePlantedCorpus(options);
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::vector<std::string>& lines) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / name).string());
    for (const std::string& line : lines) out << line << '\n';
  };
  write("corpus.jsonl", corpus.corpus_lines);
  write("benchmark.jsonl", corpus.benchmark_lines);
  write("lineage.jsonl", corpus.lineage_lines);
  nlohmann::json config = {
      {"seed", options.seed},
      {"output_dir", "out"},
      {"datasets",
       {{{"path", "corpus.jsonl"},
         {"dataset_id", options.dataset_id},
         {"sample_rate", 1.0},
         {"chunk_mode", "whole"},
         {"min_tokens", 1},
         {"max_tokens", 4096}}}},
      {"benchmarks", {{{"path", "benchmark.jsonl"}, {"benchmark_id", options.benchmark_id}}}},
      {"embedder", {{"kind", "hashing"}, {"dim", 128}, {"seed", options.seed}}},
      {"judge", {{"mode", "lineage"}, {"lineage_path", "lineage.jsonl"}, {"template", "mbpp"}}},
      {"k", 100},
      {"report", {{"bin_range", "unit"}, {"bins", 20}}}};
  const std::filesystem::path path = dir / "demo.json";
  std::ofstream(path, std::ios::trunc) << config.dump(2) << '\n';
  return path;
}

}  // namespace dupaudit
