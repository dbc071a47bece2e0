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

#ifndef DUPAUDIT_PLANTED_CORPUS_H_
#define DUPAUDIT_PLANTED_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dupaudit {

// Synthetic corpus with known duplicates, for the demo and end-to-end tests.
struct PlantedOptions {
  std::size_t n_chunks = 10000;  // including planted chunks
  std::size_t n_exact = 40;
  std::size_t n_semantic = 35;
  std::size_t n_none = 25;
  std::uint64_t seed = 7;
  std::string dataset_id = "planted";
  std::string benchmark_id = "planted";
  std::size_t item_tokens = 60;
  std::size_t min_chunk_tokens = 60;
  std::size_t max_chunk_tokens = 120;
  std::size_t vocab_size = 5000;
  std::size_t n_sources = 4;
  // Share of item tokens replaced in a semantic duplicate.
  double rewrite_fraction = 0.15;
};

enum class PlantKind { kExact, kSemantic, kNone };

struct PlantedItem {
  std::string item_id;
  std::string text;
  PlantKind kind = PlantKind::kNone;
  std::optional<std::string> chunk_text;  // the planted corpus text
};

struct PlantedCorpus {
  std::vector<std::string> corpus_lines;     // {"text", "source"}
  std::vector<std::string> benchmark_lines;  // {"item_id", "text"}
  std::vector<std::string> lineage_lines;    // {benchmark_id, item_id, chunk_id, match_type}
  std::vector<PlantedItem> items;

  // Coverage a perfect pipeline reports at any k the planted chunks reach.
  double ExpectedInclusive() const;
  double ExpectedExclusive() const;
};

PlantedCorpus GeneratePlantedCorpus(const PlantedOptions& options = {});

// Writes corpus.jsonl, benchmark.jsonl, lineage.jsonl and demo.json (a
// pipeline config using the hashing embedder and the lineage judge) into
// `dir`. Returns the config path.
std::filesystem::path WritePlantedDemo(const std::filesystem::path& dir,
                                       const PlantedOptions& options = {});

}  // namespace dupaudit

#endif  // DUPAUDIT_PLANTED_CORPUS_H_
