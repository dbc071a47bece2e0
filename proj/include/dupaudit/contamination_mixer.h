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

#ifndef DUPAUDIT_CONTAMINATION_MIXER_H_
#define DUPAUDIT_CONTAMINATION_MIXER_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dupaudit {

struct SeenSplit {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
};

// Fixed-order mode (no seed) takes the first ceil(fraction * n) ids; seeded
// mode draws that many uniformly. Both keep the input order within each half.
SeenSplit SplitSeenUnseen(std::span<const std::string> item_ids, double fraction,
                          std::optional<std::uint64_t> seed = std::nullopt);

// One line of a line-delimited record file. `id` is read from the "id" field
// and `lineage` from "original_item_id" (pool records only).
struct MixRecord {
  std::string line;
  std::string id;
  std::string lineage;
};

// Throws ParseError for unparseable lines or missing fields.
std::vector<MixRecord> ParseCleanRecords(std::span<const std::string> lines);
std::vector<MixRecord> ParseDuplicatePool(std::span<const std::string> lines);

struct Swap {
  std::size_t position = 0;
  std::string removed_id;
  std::string removed_line;
  std::string inserted_id;
  std::string inserted_lineage;
};

struct MixManifest {
  std::string clean_id;
  std::size_t clean_size = 0;
  std::string clean_hash;  // of the clean lines, each ending in '\n'
  bool final_newline = true;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<Swap> swaps;  // ascending position
  std::vector<std::string> seen;
  std::vector<std::string> unseen;

  nlohmann::json ToJson() const;
  static MixManifest FromJson(const nlohmann::json& j);
};

struct MixResult {
  std::vector<std::string> lines;
  MixManifest manifest;
};

std::size_t RequiredSwaps(double fraction, std::size_t clean_size);

// Replaces round(fraction * |clean|) uniformly chosen clean records with
// duplicates drawn from the pool, in place. Throws ConfigError when a pool
// record descends from an unseen item or from no benchmark item at all, when
// ids repeat, or when the pool is smaller than the required count.
MixResult MixDatasets(std::span<const MixRecord> clean, std::span<const MixRecord> pool,
                      const SeenSplit& split, double fraction, std::uint64_t seed,
                      const std::string& clean_id = "clean");

// Restores the clean record lines from a contaminated set.
std::vector<std::string> InvertMix(std::span<const std::string> contaminated,
                                   const MixManifest& manifest);

// round(rate * clean_size / 10000) per item, capped by `variants_per_item`,
// times the number of seen items.
std::size_t DoseFromRate(double rate_per_10k, std::size_t clean_size,
                         std::size_t seen_items,
                         std::optional<std::size_t> variants_per_item = std::nullopt);

// File helpers that keep bytes exact: lines split on '\n', with the final
// newline state reported separately.
std::vector<std::string> ReadLines(std::istream& in, bool* final_newline = nullptr);
void WriteLines(std::ostream& out, std::span<const std::string> lines,
                bool final_newline = true);
std::string JoinLinesForHash(std::span<const std::string> lines, bool final_newline);

}  // namespace dupaudit

#endif  // DUPAUDIT_CONTAMINATION_MIXER_H_
