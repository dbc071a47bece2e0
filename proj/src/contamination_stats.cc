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

#include "dupaudit/contamination_stats.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dupaudit/csv.h"
#include "dupaudit/errors.h"

namespace dupaudit {
namespace {

struct ItemState {
  bool annotated = false;
  std::optional<std::size_t> best_rank;
};

std::string PairKey(const SimilarityMatch& m) {
  return m.benchmark_id + '\t' + m.item_id + '\t' + m.chunk_id.ToHex();
}

std::unordered_map<std::string, ItemState> ScanItems(
    std::span<const JoinedMatch> joined, std::size_t k, bool include_exact,
    const std::optional<std::string>& dataset) {
  std::unordered_map<std::string, ItemState> state;
  for (const JoinedMatch& m : joined) {
    if (dataset && m.match.dataset_id != *dataset) continue;
    if (m.match.rank > k) continue;
    ItemState& s = state[ItemKey(m.match.benchmark_id, m.match.item_id)];
    if (!m.annotation) continue;
    s.annotated = true;
    if (CountsAsDuplicate(m, include_exact)) {
      std::size_t rank = m.match.rank;
      if (!s.best_rank || rank < *s.best_rank) s.best_rank = rank;
    }
  }
  return state;
}

std::vector<std::string> ItemKeys(std::span<const BenchmarkItem> items) {
  std::vector<std::string> keys;
  keys.reserve(items.size());
  for (const BenchmarkItem& item : items) {
    keys.push_back(ItemKey(item.benchmark_id, item.item_id));
  }
  return keys;
}

StratumRow MakeRow(std::string group, const CoverageResult& result) {
  StratumRow row;
  row.group = std::move(group);
  row.n_items = result.items.size();
  row.covered = static_cast<std::size_t>(
      std::count_if(result.items.begin(), result.items.end(),
                    [](const ItemCoverage& c) { return c.covered; }));
  row.coverage = result.fraction;
  row.stddev = row.n_items == 0
                   ? 0.0
                   : std::sqrt(row.coverage * (1.0 - row.coverage) /
                               static_cast<double>(row.n_items));
  return row;
}

std::optional<std::pair<int, int>> ParseGrid(const std::string& label) {
  std::size_t x = label.find_first_of("xX*");
  if (x == std::string::npos) return std::nullopt;
  try {
    return std::pair{std::stoi(label.substr(0, x)), std::stoi(label.substr(x + 1))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string MetadataString(const nlohmann::json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

nlohmann::json SeriesToJson(const std::vector<CoveragePoint>& series) {
  nlohmann::json out = nlohmann::json::array();
  for (const CoveragePoint& p : series) {
    out.push_back({{"k", p.k}, {"coverage", p.coverage}});
  }
  return out;
}

nlohmann::json RowsToJson(const std::vector<StratumRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const StratumRow& r : rows) {
    out.push_back({{"group", r.group},
                   {"n_items", r.n_items},
                   {"covered", r.covered},
                   {"coverage", r.coverage},
                   {"stddev", r.stddev}});
  }
  return out;
}

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string ItemKey(const std::string& benchmark_id, const std::string& item_id) {
  return benchmark_id + '\t' + item_id;
}

std::vector<JoinedMatch> JoinAnnotations(std::span<const SimilarityMatch> matches,
                                         std::span<const AnnotationRecord> records) {
  std::unordered_map<std::string, const AnnotationRecord*> by_pair;
  for (const AnnotationRecord& r : records) by_pair[r.pair.Key()] = &r;
  std::vector<JoinedMatch> joined;
  joined.reserve(matches.size());
  for (const SimilarityMatch& m : matches) {
    JoinedMatch j{m, std::nullopt};
    if (auto it = by_pair.find(PairKey(m)); it != by_pair.end()) {
      j.annotation = *it->second;
    }
    joined.push_back(std::move(j));
  }
  return joined;
}

std::vector<ExactConflict> ReconcileExact(
    std::vector<JoinedMatch>& joined,
    const std::unordered_map<std::string, std::string>& item_texts,
    const std::unordered_map<ChunkId, std::string>& chunk_texts,
    const NormalizationConfig& config) {
  std::vector<ExactConflict> conflicts;
  for (JoinedMatch& m : joined) {
    auto item = item_texts.find(ItemKey(m.match.benchmark_id, m.match.item_id));
    auto chunk = chunk_texts.find(m.match.chunk_id);
    if (item == item_texts.end() || chunk == chunk_texts.end()) continue;
    const bool string_exact = IsExactDuplicate(item->second, chunk->second, config);
    PairId pair{m.match.benchmark_id, m.match.item_id, m.match.chunk_id};
    if (string_exact) {
      if (m.annotation && m.annotation->match_type == MatchType::kExact &&
          m.annotation->is_sd) {
        continue;
      }
      conflicts.push_back(ExactConflict{
          pair,
          m.annotation ? std::string(MatchTypeName(m.annotation->match_type)) : "",
          "string-exact overrides judge"});
      if (!m.annotation) {
        m.annotation = AnnotationRecord{pair, true, 1.0, "", MatchType::kExact,
                                        "string-exact"};
      } else {
        m.annotation->is_sd = true;
        m.annotation->match_type = MatchType::kExact;
      }
    } else if (m.annotation && m.annotation->match_type == MatchType::kExact) {
      conflicts.push_back(ExactConflict{pair, "exact",
                                        "judge exact kept; strings differ"});
    }
  }
  return conflicts;
}

bool CountsAsDuplicate(const JoinedMatch& m, bool include_exact) {
  if (!m.annotation || !m.annotation->is_sd) return false;
  return include_exact || m.annotation->match_type != MatchType::kExact;
}

CoverageResult CoverageAtK(std::span<const JoinedMatch> joined,
                           std::span<const std::string> item_keys, std::size_t k,
                           bool include_exact,
                           const std::optional<std::string>& dataset) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::unordered_map<std::string, ItemState> state =
      ScanItems(joined, k, include_exact, dataset);
  CoverageResult result;
  std::size_t covered = 0;
  for (const std::string& key : item_keys) {
    ItemCoverage c{key, false, std::nullopt};
    auto it = state.find(key);
    if (it == state.end() || !it->second.annotated) {
      result.warnings.push_back(key);
    } else if (it->second.best_rank) {
      c.covered = true;
      c.best_rank = it->second.best_rank;
      ++covered;
    }
    result.items.push_back(std::move(c));
  }
  result.fraction = item_keys.empty()
                        ? 0.0
                        : static_cast<double>(covered) /
                              static_cast<double>(item_keys.size());
  return result;
}

std::vector<CoveragePoint> CoverageVsK(std::span<const JoinedMatch> joined,
                                       std::span<const std::string> item_keys,
                                       std::span<const std::size_t> ks,
                                       bool include_exact) {
  std::unordered_map<std::string, ItemState> state =
      ScanItems(joined, kAllRanks, include_exact, std::nullopt);
  std::vector<std::size_t> best;
  for (const std::string& key : item_keys) {
    auto it = state.find(key);
    if (it != state.end() && it->second.best_rank) best.push_back(*it->second.best_rank);
  }
  std::sort(best.begin(), best.end());
  std::vector<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::sort(sorted_ks.begin(), sorted_ks.end());
  std::vector<CoveragePoint> series;
  for (std::size_t k : sorted_ks) {
    if (k < 1) throw ConfigError("k must be >= 1");
    auto covered = static_cast<std::size_t>(
        std::upper_bound(best.begin(), best.end(), k) - best.begin());
    series.push_back(CoveragePoint{
        k, item_keys.empty() ? 0.0
                             : static_cast<double>(covered) /
                                   static_cast<double>(item_keys.size())});
  }
  return series;
}

std::pair<double, double> BinomialInterval(std::size_t successes, std::size_t n,
                                           double z, IntervalMethod method) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  double low;
  double high;
  if (method == IntervalMethod::kNormal) {
    const double half_width = z * std::sqrt(p * (1.0 - p) / nn);
    low = p - half_width;
    high = p + half_width;
  } else {
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half_width =
        z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    low = center - half_width;
    high = center + half_width;
  }
  low = std::clamp(low, 0.0, 1.0);
  high = std::clamp(high, 0.0, 1.0);
  // Guard rounding so the interval always contains p.
  return {std::min(low, p), std::max(high, p)};
}

CalibrationCurve BuildCalibrationCurve(std::span<const ScoredLabel> labels,
                                       const CalibrationOptions& options) {
  if (labels.empty()) throw ConfigError("calibration needs at least one record");
  if (options.bins < 1) throw ConfigError("calibration needs at least one bin");
  double lo = 0.0;
  double hi = 1.0;
  if (options.range == BinRange::kObserved) {
    auto [min_it, max_it] = std::minmax_element(
        labels.begin(), labels.end(),
        [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    lo = min_it->score;
    hi = max_it->score;
  }
  const double width = (hi - lo) / static_cast<double>(options.bins);
  CalibrationCurve curve;
  curve.bins.resize(options.bins);
  for (std::size_t b = 0; b < options.bins; ++b) {
    curve.bins[b].lower = lo + width * static_cast<double>(b);
    curve.bins[b].upper = b + 1 == options.bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (const ScoredLabel& label : labels) {
    std::size_t b = 0;
    if (width > 0.0) {
      double pos = std::floor((label.score - lo) / width);
      b = static_cast<std::size_t>(
          std::clamp(pos, 0.0, static_cast<double>(options.bins - 1)));
    }
    ++curve.bins[b].n;
    if (label.duplicate) ++curve.bins[b].duplicates;
  }
  for (CalibrationBin& bin : curve.bins) {
    if (bin.n == 0) continue;
    bin.p = static_cast<double>(bin.duplicates) / static_cast<double>(bin.n);
    std::tie(bin.ci_low, bin.ci_high) =
        BinomialInterval(bin.duplicates, bin.n, options.z, options.method);
  }
  return curve;
}

std::vector<ScoredLabel> CalibrationLabels(std::span<const JoinedMatch> joined,
                                           bool include_exact) {
  std::vector<ScoredLabel> labels;
  for (const JoinedMatch& m : joined) {
    if (!m.annotation) continue;
    labels.push_back(ScoredLabel{m.match.score, CountsAsDuplicate(m, include_exact)});
  }
  return labels;
}

StrataKey ParseStrataKey(std::string_view name) {
  if (name == "dataset") return StrataKey::kDataset;
  if (name == "elo") return StrataKey::kEloBucket;
  if (name == "grid_size") return StrataKey::kGridSize;
  throw ConfigError("unknown strata key '" + std::string(name) +
                    "' (expected dataset, elo or grid_size)");
}

std::string_view StrataKeyName(StrataKey key) {
  switch (key) {
    case StrataKey::kDataset: return "dataset";
    case StrataKey::kEloBucket: return "elo";
    case StrataKey::kGridSize: return "grid_size";
  }
  return "dataset";
}

std::vector<StratumRow> Stratify(std::span<const JoinedMatch> joined,
                                 std::span<const BenchmarkItem> items,
                                 StrataKey key, const StrataOptions& options) {
  std::vector<StratumRow> rows;
  if (key == StrataKey::kDataset) {
    std::set<std::string> datasets;
    for (const JoinedMatch& m : joined) datasets.insert(m.match.dataset_id);
    const std::vector<std::string> keys = ItemKeys(items);
    for (const std::string& ds : datasets) {
      rows.push_back(MakeRow(
          ds, CoverageAtK(joined, keys, options.k, options.include_exact, ds)));
    }
    return rows;
  }

  // Group label -> sort key -> item keys.
  struct Group {
    std::tuple<int, int, int, std::string> order;
    std::vector<std::string> keys;
  };
  std::map<std::string, Group> groups;
  if (options.elo_bucket_width < 1) throw ConfigError("elo bucket width must be >= 1");
  for (const BenchmarkItem& item : items) {
    std::string label = "unknown";
    std::tuple<int, int, int, std::string> order{1, 0, 0, label};
    if (key == StrataKey::kEloBucket) {
      auto it = item.metadata.find("elo");
      if (it != item.metadata.end() && it->is_number()) {
        const int width = options.elo_bucket_width;
        const int elo = static_cast<int>(std::floor(it->get<double>()));
        const int lo = static_cast<int>(std::floor(static_cast<double>(elo) / width)) * width;
        label = std::to_string(lo) + "-" + std::to_string(lo + width - 1);
        order = {0, lo, 0, label};
      }
    } else {
      auto it = item.metadata.find("grid_size");
      if (it != item.metadata.end()) {
        label = MetadataString(*it);
        auto grid = ParseGrid(label);
        order = grid ? std::tuple{0, grid->first, grid->second, label}
                     : std::tuple{0, std::numeric_limits<int>::max(), 0, label};
      }
    }
    Group& g = groups[label];
    g.order = order;
    g.keys.push_back(ItemKey(item.benchmark_id, item.item_id));
  }
  std::vector<std::pair<std::string, const Group*>> ordered;
  for (const auto& [label, group] : groups) ordered.emplace_back(label, &group);
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second->order < b.second->order;
  });
  for (const auto& [label, group] : ordered) {
    rows.push_back(MakeRow(
        label, CoverageAtK(joined, group->keys, options.k, options.include_exact)));
  }
  return rows;
}

double DuplicatesPer10k(double mean_duplicates, std::size_t sample_size,
                        double pool_fraction) {
  if (sample_size < 1) throw ConfigError("sample size must be >= 1");
  if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) {
    throw ConfigError("pool fraction must be in (0, 1]");
  }
  return mean_duplicates / static_cast<double>(sample_size) * pool_fraction * 10000.0;
}

nlohmann::json CalibrationToJson(const CalibrationCurve& curve) {
  nlohmann::json out = nlohmann::json::array();
  for (const CalibrationBin& bin : curve.bins) {
    out.push_back({{"lower", bin.lower},
                   {"upper", bin.upper},
                   {"n", bin.n},
                   {"duplicates", bin.duplicates},
                   {"p", bin.p ? nlohmann::json(*bin.p) : nlohmann::json(nullptr)},
                   {"ci_low", bin.p ? nlohmann::json(bin.ci_low) : nlohmann::json(nullptr)},
                   {"ci_high", bin.p ? nlohmann::json(bin.ci_high) : nlohmann::json(nullptr)}});
  }
  return out;
}

ContaminationReport BuildReport(std::span<const JoinedMatch> joined,
                                std::span<const BenchmarkItem> items,
                                const ReportOptions& options) {
  const std::vector<std::string> keys = ItemKeys(items);
  ContaminationReport report;
  std::set<std::string> benchmarks;
  for (const BenchmarkItem& item : items) benchmarks.insert(item.benchmark_id);
  std::set<std::string> datasets;
  for (const JoinedMatch& m : joined) datasets.insert(m.match.dataset_id);

  CoverageResult inclusive = CoverageAtK(joined, keys, options.k, true);
  CoverageResult exclusive = CoverageAtK(joined, keys, options.k, false);
  nlohmann::json& s = report.summary;
  s["benchmark_ids"] = benchmarks;
  s["n_items"] = keys.size();
  s["k"] = options.k;
  s["coverage_at_k"] = {{"exact_inclusive", inclusive.fraction},
                        {"exact_exclusive", exclusive.fraction}};
  s["unannotated_items"] = inclusive.warnings.size();
  nlohmann::json per_dataset = nlohmann::json::object();
  for (const std::string& ds : datasets) {
    per_dataset[ds] = {
        {"exact_inclusive", CoverageAtK(joined, keys, options.k, true, ds).fraction},
        {"exact_exclusive", CoverageAtK(joined, keys, options.k, false, ds).fraction}};
  }
  s["per_dataset"] = per_dataset;
  std::size_t annotated = 0;
  for (const JoinedMatch& m : joined) annotated += m.annotation ? 1 : 0;
  s["annotated_pairs"] = annotated;
  s["matches"] = joined.size();

  report.coverage_vs_k_inclusive = CoverageVsK(joined, keys, options.ks, true);
  report.coverage_vs_k_exclusive = CoverageVsK(joined, keys, options.ks, false);

  std::vector<ScoredLabel> labels = CalibrationLabels(joined, true);
  if (!labels.empty()) {
    report.calibration = BuildCalibrationCurve(labels, options.calibration);
  }

  for (StrataKey key : options.strata) {
    report.strata[std::string(StrataKeyName(key))] =
        Stratify(joined, items, key,
                 StrataOptions{options.k, true, options.elo_bucket_width});
  }

  if (options.pool_fraction && options.sample_size) {
    // Mean duplicates per (item, dataset) sample list.
    std::map<std::pair<std::string, std::string>, std::size_t> dup_counts;
    for (const JoinedMatch& m : joined) {
      if (!m.annotation) continue;
      auto& count = dup_counts[{ItemKey(m.match.benchmark_id, m.match.item_id),
                                m.match.dataset_id}];
      count += CountsAsDuplicate(m, true) ? 1 : 0;
    }
    double mean = 0.0;
    for (const auto& [_, count] : dup_counts) mean += static_cast<double>(count);
    if (!dup_counts.empty()) mean /= static_cast<double>(dup_counts.size());
    s["mean_duplicates_per_sample"] = mean;
    s["duplicates_per_10k"] =
        DuplicatesPer10k(mean, *options.sample_size, *options.pool_fraction);
  }
  return report;
}

void WriteReport(const std::filesystem::path& dir, const ContaminationReport& report,
                 const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  nlohmann::json doc = report.summary;
  doc["config_hash"] = config_hash;
  doc["coverage_vs_k"] = {{"exact_inclusive", SeriesToJson(report.coverage_vs_k_inclusive)},
                          {"exact_exclusive", SeriesToJson(report.coverage_vs_k_exclusive)}};
  doc["calibration"] = CalibrationToJson(report.calibration);
  nlohmann::json strata = nlohmann::json::object();
  for (const auto& [key, rows] : report.strata) strata[key] = RowsToJson(rows);
  doc["strata"] = strata;
  OpenOutput(dir / "report.json") << doc.dump(2) << '\n';

  {
    std::ofstream out = OpenOutput(dir / "coverage_vs_k.csv");
    out << "# config_hash=" << config_hash << '\n';
    out << "k,coverage_exact_inclusive,coverage_exact_exclusive\n";
    for (std::size_t i = 0; i < report.coverage_vs_k_inclusive.size(); ++i) {
      out << report.coverage_vs_k_inclusive[i].k << ','
          << FormatDouble(report.coverage_vs_k_inclusive[i].coverage) << ','
          << FormatDouble(report.coverage_vs_k_exclusive[i].coverage) << '\n';
    }
  }
  {
    std::ofstream out = OpenOutput(dir / "calibration.csv");
    out << "# config_hash=" << config_hash << '\n';
    out << "lower,upper,n,duplicates,p,ci_low,ci_high\n";
    for (const CalibrationBin& bin : report.calibration.bins) {
      out << FormatDouble(bin.lower) << ',' << FormatDouble(bin.upper) << ','
          << bin.n << ',' << bin.duplicates << ',';
      if (bin.p) {
        out << FormatDouble(*bin.p) << ',' << FormatDouble(bin.ci_low) << ','
            << FormatDouble(bin.ci_high);
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
  for (const auto& [key, rows] : report.strata) {
    std::ofstream out = OpenOutput(dir / ("strata_" + key + ".csv"));
    out << "# config_hash=" << config_hash << '\n';
    out << "group,n_items,covered,coverage,stddev\n";
    for (const StratumRow& r : rows) {
      out << CsvField(r.group) << ',' << r.n_items << ',' << r.covered << ','
          << FormatDouble(r.coverage) << ',' << FormatDouble(r.stddev) << '\n';
    }
  }
}

}  // namespace dupaudit
