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

#include "dupaudit/contamination_mixer.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dupaudit/chunk_id.h"
#include "dupaudit/errors.h"
#include "dupaudit/reservoir_sampler.h"

namespace dupaudit {
namespace {

std::string IdString(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  throw ParseError("record id must be a string or integer");
}

MixRecord ParseRecord(const std::string& line, std::size_t index, bool need_lineage) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(index + 1) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("id")) {
    throw ParseError("line " + std::to_string(index + 1) + ": missing id");
  }
  MixRecord r{line, IdString(j.at("id")), ""};
  if (need_lineage) {
    if (!j.contains("original_item_id")) {
      throw ParseError("line " + std::to_string(index + 1) +
                       ": duplicate without original_item_id");
    }
    r.lineage = IdString(j.at("original_item_id"));
  }
  return r;
}

void RequireFraction(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("fraction must be in [0, 1]");
  }
}

}  // namespace

SeenSplit SplitSeenUnseen(std::span<const std::string> item_ids, double fraction,
                          std::optional<std::uint64_t> seed) {
  RequireFraction(fraction);
  const std::size_t n = item_ids.size();
  const auto m = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<bool> chosen(n, false);
  if (!seed) {
    std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(m), true);
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<std::size_t> pick;
    Rng rng(Mix64(*seed));
    std::sample(idx.begin(), idx.end(), std::back_inserter(pick), m, rng);
    for (std::size_t i : pick) chosen[i] = true;
  }
  SeenSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    (chosen[i] ? split.seen : split.unseen).push_back(item_ids[i]);
  }
  return split;
}

std::vector<MixRecord> ParseCleanRecords(std::span<const std::string> lines) {
  std::vector<MixRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) out.push_back(ParseRecord(lines[i], i, false));
  return out;
}

std::vector<MixRecord> ParseDuplicatePool(std::span<const std::string> lines) {
  std::vector<MixRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.push_back(ParseRecord(lines[i], i, true));
  }
  return out;
}

nlohmann::json MixManifest::ToJson() const {
  nlohmann::json swaps_json = nlohmann::json::array();
  for (const Swap& s : swaps) {
    swaps_json.push_back({{"position", s.position},
                          {"removed_id", s.removed_id},
                          {"removed_line", s.removed_line},
                          {"inserted_id", s.inserted_id},
                          {"inserted_lineage", s.inserted_lineage}});
  }
  return {{"clean_id", clean_id},   {"clean_size", clean_size},
          {"clean_hash", clean_hash}, {"final_newline", final_newline},
          {"fraction", fraction},   {"seed", seed},
          {"swaps", swaps_json},    {"seen", seen},
          {"unseen", unseen}};
}

MixManifest MixManifest::FromJson(const nlohmann::json& j) {
  MixManifest m;
  try {
    m.clean_id = j.at("clean_id").get<std::string>();
    m.clean_size = j.at("clean_size").get<std::size_t>();
    m.clean_hash = j.at("clean_hash").get<std::string>();
    m.final_newline = j.at("final_newline").get<bool>();
    m.fraction = j.at("fraction").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const nlohmann::json& s : j.at("swaps")) {
      m.swaps.push_back(Swap{s.at("position").get<std::size_t>(),
                             s.at("removed_id").get<std::string>(),
                             s.at("removed_line").get<std::string>(),
                             s.at("inserted_id").get<std::string>(),
                             s.at("inserted_lineage").get<std::string>()});
    }
    m.seen = j.at("seen").get<std::vector<std::string>>();
    m.unseen = j.at("unseen").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad mix manifest: ") + e.what());
  }
  return m;
}

std::size_t RequiredSwaps(double fraction, std::size_t clean_size) {
  RequireFraction(fraction);
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(clean_size)));
}

MixResult MixDatasets(std::span<const MixRecord> clean, std::span<const MixRecord> pool,
                      const SeenSplit& split, double fraction, std::uint64_t seed,
                      const std::string& clean_id) {
  const std::size_t required = RequiredSwaps(fraction, clean.size());
  const std::set<std::string> seen(split.seen.begin(), split.seen.end());
  const std::set<std::string> unseen(split.unseen.begin(), split.unseen.end());
  for (const std::string& id : seen) {
    if (unseen.count(id) != 0) {
      throw ConfigError("item '" + id + "' is both seen and unseen");
    }
  }
  std::unordered_set<std::string> ids;
  for (const MixRecord& r : clean) {
    if (!ids.insert(r.id).second) throw ConfigError("clean id '" + r.id + "' repeats");
  }
  std::unordered_set<std::string> pool_ids;
  for (const MixRecord& r : pool) {
    if (unseen.count(r.lineage) != 0) {
      throw ConfigError("leakage: duplicate '" + r.id + "' descends from unseen item '" +
                        r.lineage + "'");
    }
    if (seen.count(r.lineage) == 0) {
      throw ConfigError("duplicate '" + r.id + "' descends from unknown item '" +
                        r.lineage + "'");
    }
    if (!pool_ids.insert(r.id).second) {
      throw ConfigError("duplicate id '" + r.id + "' repeats");
    }
    if (ids.count(r.id) != 0) {
      throw ConfigError("duplicate id '" + r.id + "' also names a clean record");
    }
  }
  if (pool.size() < required) {
    throw ConfigError("duplicate pool too small: " + std::to_string(required) +
                      " required, " + std::to_string(pool.size()) + " available");
  }

  Rng rng(Mix64(seed));
  std::vector<std::size_t> positions;
  {
    std::vector<std::size_t> idx(clean.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sample(idx.begin(), idx.end(), std::back_inserter(positions), required, rng);
  }
  std::vector<std::size_t> picks;
  {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sample(idx.begin(), idx.end(), std::back_inserter(picks), required, rng);
    std::shuffle(picks.begin(), picks.end(), rng);
  }

  MixResult result;
  result.lines.reserve(clean.size());
  for (const MixRecord& r : clean) result.lines.push_back(r.line);
  std::vector<std::string> clean_lines = result.lines;
  MixManifest& m = result.manifest;
  m.clean_id = clean_id;
  m.clean_size = clean.size();
  m.clean_hash = ContentHashHex(JoinLinesForHash(clean_lines, true));
  m.fraction = fraction;
  m.seed = seed;
  m.seen = split.seen;
  m.unseen = split.unseen;
  for (std::size_t i = 0; i < required; ++i) {
    const MixRecord& removed = clean[positions[i]];
    const MixRecord& inserted = pool[picks[i]];
    result.lines[positions[i]] = inserted.line;
    m.swaps.push_back(
        Swap{positions[i], removed.id, removed.line, inserted.id, inserted.lineage});
  }
  return result;
}

std::vector<std::string> InvertMix(std::span<const std::string> contaminated,
                                   const MixManifest& manifest) {
  if (contaminated.size() != manifest.clean_size) {
    throw Error("contaminated set has " + std::to_string(contaminated.size()) +
                " records, manifest expects " + std::to_string(manifest.clean_size));
  }
  std::vector<std::string> out(contaminated.begin(), contaminated.end());
  for (const Swap& s : manifest.swaps) {
    if (s.position >= out.size()) throw Error("manifest position out of range");
    MixRecord r = ParseRecord(out[s.position], s.position, false);
    if (r.id != s.inserted_id) {
      throw Error("record at " + std::to_string(s.position) + " is '" + r.id +
                  "', manifest expects '" + s.inserted_id + "'");
    }
    out[s.position] = s.removed_line;
  }
  if (!manifest.clean_hash.empty() &&
      ContentHashHex(JoinLinesForHash(out, true)) != manifest.clean_hash) {
    throw Error("inverted set does not match the clean hash");
  }
  return out;
}

std::size_t DoseFromRate(double rate_per_10k, std::size_t clean_size,
                         std::size_t seen_items,
                         std::optional<std::size_t> variants_per_item) {
  if (!(rate_per_10k >= 0.0)) throw ConfigError("rate must be >= 0");
  auto per_item = static_cast<std::size_t>(
      std::llround(rate_per_10k * static_cast<double>(clean_size) / 10000.0));
  if (variants_per_item) per_item = std::min(per_item, *variants_per_item);
  return per_item * seen_items;
}

std::vector<std::string> ReadLines(std::istream& in, bool* final_newline) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t nl = data.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(data.substr(start));
      start = data.size();
      break;
    }
    lines.push_back(data.substr(start, nl - start));
    start = nl + 1;
  }
  if (final_newline != nullptr) *final_newline = data.empty() || data.back() == '\n';
  return lines;
}

void WriteLines(std::ostream& out, std::span<const std::string> lines,
                bool final_newline) {
  out << JoinLinesForHash(lines, final_newline);
}

std::string JoinLinesForHash(std::span<const std::string> lines, bool final_newline) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += lines[i];
    if (i + 1 < lines.size() || final_newline) out.push_back('\n');
  }
  return out;
}

}  // namespace dupaudit
