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

#ifndef DUPAUDIT_CONTAMINATION_STATS_H_
#define DUPAUDIT_CONTAMINATION_STATS_H_

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dupaudit/annotation.h"
#include "dupaudit/lexical_metrics.h"
#include "dupaudit/similarity_search.h"
#include "json.hpp"

namespace dupaudit {

inline constexpr std::size_t kAllRanks = std::numeric_limits<std::size_t>::max();

// A candidate match with its judge verdict, if any.
struct JoinedMatch {
  SimilarityMatch match;
  std::optional<AnnotationRecord> annotation;
};

// Attaches records to matches by (benchmark_id, item_id, chunk_id).
std::vector<JoinedMatch> JoinAnnotations(std::span<const SimilarityMatch> matches,
                                         std::span<const AnnotationRecord> records);

struct ExactConflict {
  PairId pair;
  std::string judge_match_type;  // empty when the pair had no annotation
  std::string resolution;
};

// String-level exactness is authoritative: a pair whose texts are exact
// duplicates under `config` is relabelled is_sd=true, match_type=exact (or
// given such a record when unannotated). Judge-exact pairs whose strings
// differ keep their label and are logged.
std::vector<ExactConflict> ReconcileExact(
    std::vector<JoinedMatch>& joined,
    const std::unordered_map<std::string, std::string>& item_texts,  // by item key
    const std::unordered_map<ChunkId, std::string>& chunk_texts,
    const NormalizationConfig& config);

// "benchmark_id\titem_id".
std::string ItemKey(const std::string& benchmark_id, const std::string& item_id);

// True when the annotation marks a duplicate; exact matches count only when
// include_exact is set.
bool CountsAsDuplicate(const JoinedMatch& m, bool include_exact);

struct ItemCoverage {
  std::string item_key;
  bool covered = false;
  std::optional<std::size_t> best_rank;  // lowest rank of a counted duplicate
};

struct CoverageResult {
  double fraction = 0.0;
  std::vector<ItemCoverage> items;
  // Items with no annotated match within the top k; counted as uncovered.
  std::vector<std::string> warnings;
};

// Fraction of `item_keys` having a counted duplicate at rank <= k. When
// `dataset` is set only that dataset's matches are considered.
CoverageResult CoverageAtK(std::span<const JoinedMatch> joined,
                           std::span<const std::string> item_keys, std::size_t k,
                           bool include_exact,
                           const std::optional<std::string>& dataset = std::nullopt);

struct CoveragePoint {
  std::size_t k = 0;
  double coverage = 0.0;
};

std::vector<CoveragePoint> CoverageVsK(std::span<const JoinedMatch> joined,
                                       std::span<const std::string> item_keys,
                                       std::span<const std::size_t> ks,
                                       bool include_exact);

enum class BinRange { kObserved, kUnit };
enum class IntervalMethod { kNormal, kWilson };

struct CalibrationOptions {
  std::size_t bins = 30;
  double z = 1.96;
  BinRange range = BinRange::kObserved;
  IntervalMethod method = IntervalMethod::kNormal;
};

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  std::size_t duplicates = 0;
  std::optional<double> p;  // unset for empty bins
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
};

struct ScoredLabel {
  double score = 0.0;
  bool duplicate = false;
};

// Binomial interval for `successes` of `n`, clamped to [0, 1].
std::pair<double, double> BinomialInterval(std::size_t successes, std::size_t n,
                                           double z, IntervalMethod method);

// Equal-width bins; the top edge is inclusive. Throws ConfigError when
// `labels` is empty or bins < 1.
CalibrationCurve BuildCalibrationCurve(std::span<const ScoredLabel> labels,
                                       const CalibrationOptions& options);

// Annotated matches as (score, counts-as-duplicate) labels.
std::vector<ScoredLabel> CalibrationLabels(std::span<const JoinedMatch> joined,
                                           bool include_exact);

enum class StrataKey { kDataset, kEloBucket, kGridSize };

StrataKey ParseStrataKey(std::string_view name);
std::string_view StrataKeyName(StrataKey key);

struct StratumRow {
  std::string group;
  std::size_t n_items = 0;
  std::size_t covered = 0;
  double coverage = 0.0;
  double stddev = 0.0;  // sqrt(p (1 - p) / n_items)
};

struct StrataOptions {
  std::size_t k = 100;
  bool include_exact = true;
  int elo_bucket_width = 100;
};

// Per-group coverage. Dataset groups evaluate every item against that
// dataset's matches; elo and grid-size groups partition the items by their
// metadata ("unknown" when absent).
std::vector<StratumRow> Stratify(std::span<const JoinedMatch> joined,
                                 std::span<const BenchmarkItem> items,
                                 StrataKey key, const StrataOptions& options);

// (mean_duplicates / sample_size) * pool_fraction * 10000.
double DuplicatesPer10k(double mean_duplicates, std::size_t sample_size,
                        double pool_fraction);

struct ReportOptions {
  std::size_t k = 100;
  std::vector<std::size_t> ks = {1, 2, 5, 10, 20, 50, 100};
  CalibrationOptions calibration;
  std::vector<StrataKey> strata = {StrataKey::kDataset};
  int elo_bucket_width = 100;
  // Set when matches were sampled from a top-percentile pool.
  std::optional<double> pool_fraction;
  std::optional<std::size_t> sample_size;
};

struct ContaminationReport {
  nlohmann::json summary;
  std::vector<CoveragePoint> coverage_vs_k_inclusive;
  std::vector<CoveragePoint> coverage_vs_k_exclusive;
  CalibrationCurve calibration;
  std::map<std::string, std::vector<StratumRow>> strata;
};

// Builds the per-benchmark report over `items`.
ContaminationReport BuildReport(std::span<const JoinedMatch> joined,
                                std::span<const BenchmarkItem> items,
                                const ReportOptions& options);

// report.json, coverage_vs_k.csv, calibration.csv, strata_<key>.csv. Every
// file records `config_hash`.
void WriteReport(const std::filesystem::path& dir, const ContaminationReport& report,
                 const std::string& config_hash);

nlohmann::json CalibrationToJson(const CalibrationCurve& curve);

}  // namespace dupaudit

#endif  // DUPAUDIT_CONTAMINATION_STATS_H_
