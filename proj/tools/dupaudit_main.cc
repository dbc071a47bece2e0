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

// dupaudit command-line tool.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "dupaudit/annotation.h"
#include "dupaudit/contamination_mixer.h"
#include "dupaudit/contamination_stats.h"
#include "dupaudit/corpus_ingest.h"
#include "dupaudit/embed_store.h"
#include "dupaudit/errors.h"
#include "dupaudit/lexical_metrics.h"
#include "dupaudit/pipeline.h"
#include "dupaudit/planted_corpus.h"
#include "dupaudit/reservoir_sampler.h"
#include "dupaudit/similarity_search.h"
#include "dupaudit/synthetic_dupes.h"
#include "dupaudit/text.h"
#include "json.hpp"

namespace {

using namespace dupaudit;
namespace fs = std::filesystem;
using Json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitProvider = 4;

std::string ProviderToken() {
  const char* token = std::getenv("DUPAUDIT_PROVIDER_TOKEN");
  return token == nullptr ? "" : token;
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  if (fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void Log(const std::string& message) { std::cerr << message << '\n'; }

struct Common {
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::string out;
};

void AddCommon(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "random seed");
  auto* out = cmd->add_option("--out", c.out, "output path");
  if (out_required) out->required();
}

// ingest ------------------------------------------------------------------

struct IngestArgs {
  Common common;
  std::string in;
  IngestConfig cfg;
  std::string mode = "whole";
  std::string pair_mode = "joint";
};

void RunIngestCmd(const IngestArgs& a) {
  IngestConfig cfg = a.cfg;
  cfg.mode = a.mode == "paragraph" ? ChunkMode::kParagraphSplit : ChunkMode::kWholeRecord;
  cfg.pair_mode = a.pair_mode == "separate" ? PairMode::kSeparate : PairMode::kJoint;
  cfg.Validate();
  std::ifstream in = OpenIn(a.in);
  std::vector<RawRecord> records = ReadRawRecords(in);
  IngestErrorTally errors;
  std::vector<CorpusChunk> chunks = IngestStream(
      records, cfg, fs::path(a.in).filename().string(), errors, a.common.jobs);
  std::ofstream out = OpenOut(a.common.out);
  WriteChunks(out, chunks);
  Log("ingested " + std::to_string(records.size()) + " records into " +
      std::to_string(chunks.size()) + " chunks; " + std::to_string(errors.count()) +
      " malformed");
}

// sample ------------------------------------------------------------------

struct SampleArgs {
  Common common;
  std::vector<std::string> in;
  double rate = 0.01;
  std::string manifest;
};

void RunSampleCmd(const SampleArgs& a) {
  std::vector<CorpusChunk> chunks;
  for (const std::string& path : a.in) {
    std::ifstream in = OpenIn(path);
    for (CorpusChunk& c : ReadChunks(in)) chunks.push_back(std::move(c));
  }
  StratifiedSampler::Options opts;
  opts.rate = a.rate;
  opts.seed = a.common.seed;
  for (const CorpusChunk& c : chunks) ++opts.expected_sizes[c.SourceKey()];
  StratifiedSampler sampler(opts);
  for (CorpusChunk& c : chunks) sampler.Add(std::move(c));
  SampleResult result = sampler.Finalize();
  std::ofstream out = OpenOut(a.common.out);
  WriteChunks(out, result.chunks);
  if (!a.manifest.empty()) {
    std::ofstream m = OpenOut(a.manifest);
    WriteSampleManifest(m, result, a.rate, a.common.seed);
  }
  Log("sampled " + std::to_string(result.chunks.size()) + " chunks from " +
      std::to_string(result.strata.size()) + " strata");
}

// embed -------------------------------------------------------------------

struct EmbedArgs {
  Common common;
  std::string chunks;
  std::string benchmark;
  std::string benchmark_id = "benchmark";
  std::string variant = "joined";
  std::string provider = "hashing";
  std::uint32_t dim = 256;
  ProviderConfig config;
};

std::unique_ptr<EmbeddingProvider> MakeEmbedder(const EmbedArgs& a) {
  if (a.provider == "hashing") {
    return std::make_unique<HashingEmbedder>(a.dim, a.common.seed, a.config.prefix);
  }
  if (a.provider == "http") {
    ProviderConfig cfg = a.config;
    cfg.api_key = ProviderToken();
    cfg.Validate();
    return std::make_unique<HttpEmbedder>(cfg);
  }
  throw ConfigError("--provider must be hashing or http");
}

void RunEmbedCmd(const EmbedArgs& a) {
  if (a.chunks.empty() == a.benchmark.empty()) {
    throw ConfigError("give exactly one of --chunks or --benchmark");
  }
  std::unique_ptr<EmbeddingProvider> provider = MakeEmbedder(a);
  if (!a.chunks.empty()) {
    std::ifstream in = OpenIn(a.chunks);
    std::vector<CorpusChunk> chunks = ReadChunks(in);
    if (chunks.empty()) throw ConfigError("no chunks in " + a.chunks);
    std::vector<std::string> texts;
    for (const CorpusChunk& c : chunks) texts.push_back(c.text);
    std::vector<std::vector<Half>> vectors = EmbedBatch(texts, *provider, a.config);
    EmbeddingShard shard;
    shard.dim = static_cast<std::uint32_t>(vectors.front().size());
    shard.provider_tag = provider->Tag();
    for (std::size_t i = 0; i < chunks.size(); ++i) shard.Append(chunks[i].chunk_id, vectors[i]);
    WriteShard(fs::path(a.common.out), shard);
    Log("wrote " + std::to_string(shard.count()) + " vectors to " + a.common.out);
  } else {
    std::ifstream in = OpenIn(a.benchmark);
    std::vector<BenchmarkItem> items = ReadBenchmark(in, a.benchmark_id);
    std::vector<Query> queries =
        EmbedQueries(items, ParseTextVariant(a.variant), *provider, a.config);
    std::ofstream out = OpenOut(a.common.out);
    WriteQueries(out, queries);
    Log("wrote " + std::to_string(queries.size()) + " query vectors to " + a.common.out);
  }
}

// scan --------------------------------------------------------------------

struct ScanArgs {
  Common common;
  std::string shards;
  std::string queries;
  std::size_t k = 100;
  std::optional<double> pct;
  std::optional<std::size_t> sample;
  bool union_datasets = false;
};

void RunScanCmd(const ScanArgs& a) {
  if (a.pct.has_value() != a.sample.has_value()) {
    throw ConfigError("--pct and --sample go together");
  }
  std::vector<EmbeddingShard> shards;
  for (const fs::path& p : ListShards(a.shards)) {
    EmbeddingShard s = ReadShard(p);
    s.dataset_id = ShardDatasetId(p);
    shards.push_back(std::move(s));
  }
  if (shards.empty()) throw ConfigError("no .emb shards in " + a.shards);
  std::ifstream in = OpenIn(a.queries);
  std::vector<Query> queries = ReadQueries(in);
  ScanOptions opts{a.k, a.union_datasets, a.common.jobs};
  std::vector<SimilarityMatch> flat;
  if (a.pct) {
    for (const auto& pool : TopPercentilePools(queries, shards, *a.pct, opts)) {
      std::size_t start = 0;
      while (start < pool.size()) {
        std::size_t end = start;
        while (end < pool.size() && pool[end].dataset_id == pool[start].dataset_id) ++end;
        std::span<const SimilarityMatch> group(pool.data() + start, end - start);
        Rng rng(Mix64(a.common.seed ^
                      StableHash64(ItemKey(group[0].benchmark_id, group[0].item_id) + '\t' +
                                   group[0].dataset_id)));
        std::vector<SimilarityMatch> drawn = SamplePool(group, *a.sample, rng);
        for (std::size_t r = 0; r < drawn.size(); ++r) {
          drawn[r].rank = static_cast<std::uint32_t>(r + 1);
          flat.push_back(drawn[r]);
        }
        start = end;
      }
    }
  } else {
    for (auto& per_query : TopKMatches(queries, shards, opts)) {
      flat.insert(flat.end(), per_query.begin(), per_query.end());
    }
  }
  std::ofstream out = OpenOut(a.common.out);
  WriteMatchesCsv(out, flat, "seed=" + std::to_string(a.common.seed));
  Log("wrote " + std::to_string(flat.size()) + " matches");
}

// annotate / stats shared loading -----------------------------------------

std::unordered_map<std::string, std::string> LoadItemTexts(
    const std::vector<std::string>& paths, const std::string& benchmark_id,
    const std::string& variant, std::vector<BenchmarkItem>* items_out = nullptr) {
  std::unordered_map<std::string, std::string> texts;
  const TextVariant v = ParseTextVariant(variant);
  for (const std::string& path : paths) {
    std::ifstream in = OpenIn(path);
    for (BenchmarkItem& item : ReadBenchmark(in, benchmark_id)) {
      texts[ItemKey(item.benchmark_id, item.item_id)] = item.Text(v);
      if (items_out != nullptr) items_out->push_back(std::move(item));
    }
  }
  return texts;
}

std::unordered_map<ChunkId, std::string> LoadChunkTexts(const std::vector<std::string>& paths) {
  std::unordered_map<ChunkId, std::string> texts;
  for (const std::string& path : paths) {
    std::ifstream in = OpenIn(path);
    for (CorpusChunk& c : ReadChunks(in)) texts.emplace(c.chunk_id, std::move(c.text));
  }
  return texts;
}

std::vector<SimilarityMatch> LoadMatches(const std::string& path) {
  std::ifstream in = OpenIn(path);
  return ReadMatchesCsv(in);
}

// annotate ----------------------------------------------------------------

struct AnnotateArgs {
  Common common;
  std::string matches;
  std::vector<std::string> benchmark;
  std::string benchmark_id = "benchmark";
  std::string variant = "joined";
  std::vector<std::string> chunks;
  std::string tmpl = "mbpp";
  std::string mode = "live";
  std::string responses;
  std::string lineage;
  std::size_t concurrency = 4;
  ProviderConfig config;
};

int RunAnnotateCmd(const AnnotateArgs& a) {
  const PromptTemplate tmpl = PromptTemplate::Builtin(a.tmpl);
  const fs::path dir = a.common.out;
  fs::create_directories(dir);
  if (a.mode == "import") {
    if (a.responses.empty()) throw ConfigError("import mode needs --responses");
    std::ifstream in = OpenIn(a.responses);
    std::ofstream rec = OpenOut((dir / "records.jsonl").string());
    std::ofstream fail = OpenOut((dir / "failures.jsonl").string());
    std::size_t accepted = 0;
    std::size_t failed = 0;
    for (const ParseOutcome& o : ImportResponses(in, tmpl, "import")) {
      if (o.status == ParseStatus::kAccepted) {
        rec << o.record->ToJson().dump() << '\n';
        ++accepted;
      } else {
        fail << FailureEntry{o.record ? o.record->pair : PairId{},
                             std::string(ParseStatusName(o.status)), o.reason, o.raw}
                    .ToJson()
                    .dump()
             << '\n';
        ++failed;
      }
    }
    Log("imported " + std::to_string(accepted) + " records, " + std::to_string(failed) +
        " failures");
    return kExitOk;
  }

  std::unordered_map<std::string, std::string> items =
      LoadItemTexts(a.benchmark, a.benchmark_id, a.variant);
  std::unordered_map<ChunkId, std::string> chunks = LoadChunkTexts(a.chunks);
  std::map<std::string, AnnotationPair> unique;
  for (const SimilarityMatch& m : LoadMatches(a.matches)) {
    auto item = items.find(ItemKey(m.benchmark_id, m.item_id));
    auto chunk = chunks.find(m.chunk_id);
    if (item == items.end() || chunk == chunks.end()) {
      throw ConfigError("match " + m.item_id + " / " + m.chunk_id.ToHex() +
                        " has no text; pass the benchmark and sampled chunk files");
    }
    PairId id{m.benchmark_id, m.item_id, m.chunk_id};
    unique.emplace(id.Key(), AnnotationPair{id, item->second, chunk->second});
  }
  std::vector<AnnotationPair> pairs;
  for (auto& [_, p] : unique) pairs.push_back(std::move(p));

  if (a.mode == "export") {
    std::ofstream out = OpenOut((dir / "requests.jsonl").string());
    ExportRequests(out, pairs, tmpl);
    Log("exported " + std::to_string(pairs.size()) + " requests");
    return kExitOk;
  }
  std::unique_ptr<Judge> judge;
  ProviderConfig cfg = a.config;
  if (a.mode == "lineage") {
    if (a.lineage.empty()) throw ConfigError("lineage mode needs --lineage");
    judge = std::make_unique<LineageJudge>(LineageJudge::FromFile(a.lineage));
  } else if (a.mode == "live") {
    cfg.api_key = ProviderToken();
    cfg.Validate();
    judge = std::make_unique<HttpJudge>(cfg);
  } else {
    throw ConfigError("--mode must be live, export, import or lineage");
  }
  AnnotateOptions opts;
  opts.concurrency = std::min<std::size_t>(a.concurrency, a.common.jobs);
  opts.max_retries = cfg.max_retries;
  opts.backoff_seconds = cfg.backoff_seconds;
  opts.records_path = dir / "records.jsonl";
  opts.failures_path = dir / "failures.jsonl";
  AnnotateResult result = AnnotatePairs(pairs, *judge, tmpl, opts);
  Log(std::to_string(result.records.size()) + " records, " +
      std::to_string(result.failures.size()) + " failures, " +
      std::to_string(result.resumed) + " resumed");
  if (result.provider_failures > 0) {
    Log(std::to_string(result.provider_failures) + " provider failures");
    return kExitProvider;
  }
  return kExitOk;
}

// stats -------------------------------------------------------------------

struct StatsArgs {
  Common common;
  std::string matches;
  std::string records;
  std::vector<std::string> benchmark;
  std::string benchmark_id = "benchmark";
  std::string variant = "joined";
  std::vector<std::string> chunks;
  std::size_t k = 100;
  std::vector<std::string> strata = {"dataset"};
  std::size_t bins = 30;
  std::string interval = "normal";
  std::optional<double> pool_fraction;
  std::optional<std::size_t> sample_size;
};

void RunStatsCmd(const StatsArgs& a) {
  std::vector<BenchmarkItem> items;
  std::unordered_map<std::string, std::string> item_texts =
      LoadItemTexts(a.benchmark, a.benchmark_id, a.variant, &items);
  std::vector<AnnotationRecord> records;
  {
    std::ifstream in = OpenIn(a.records);
    records = ReadAnnotationRecords(in);
  }
  std::vector<JoinedMatch> joined = JoinAnnotations(LoadMatches(a.matches), records);
  std::size_t conflicts = 0;
  if (!a.chunks.empty()) {
    conflicts = ReconcileExact(joined, item_texts, LoadChunkTexts(a.chunks), {}).size();
  }
  ReportOptions opts;
  opts.k = a.k;
  opts.calibration.bins = a.bins;
  if (a.interval == "wilson") {
    opts.calibration.method = IntervalMethod::kWilson;
  } else if (a.interval != "normal") {
    throw ConfigError("--interval must be normal or wilson");
  }
  opts.strata.clear();
  for (const std::string& s : a.strata) opts.strata.push_back(ParseStrataKey(s));
  opts.pool_fraction = a.pool_fraction;
  opts.sample_size = a.sample_size;
  ContaminationReport report = BuildReport(joined, items, opts);
  report.summary["exact_conflicts"] = conflicts;
  report.summary["seed"] = a.common.seed;
  WriteReport(a.common.out, report, "");
  std::cout << report.summary["coverage_at_k"].dump() << '\n';
}

// metrics -----------------------------------------------------------------

struct MetricsArgs {
  Common common;
  std::string pairs;
  std::string a;
  std::string b;
  std::string denominator = "min";
};

void RunMetricsCmd(const MetricsArgs& args) {
  const OverlapDenominator denom =
      args.denominator == "union" ? OverlapDenominator::kUnion : OverlapDenominator::kMin;
  if (args.denominator != "min" && args.denominator != "union") {
    throw ConfigError("--denominator must be min or union");
  }
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.common.out.empty()) {
    file = OpenOut(args.common.out);
    out = &file;
  }
  auto emit = [&](Json id, const std::string& a, const std::string& b) {
    Json j = MetricVectorToJson(ComputeMetrics(a, b, denom));
    if (!id.is_null()) j["id"] = std::move(id);
    *out << j.dump() << '\n';
  };
  if (args.pairs.empty()) {
    emit(nullptr, args.a, args.b);
    return;
  }
  std::ifstream in = OpenIn(args.pairs);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("a") || !j.contains("b")) {
      throw ParseError("pairs line " + std::to_string(n) + " needs \"a\" and \"b\"");
    }
    emit(j.value("id", Json(nullptr)), j.at("a").get<std::string>(),
         j.at("b").get<std::string>());
  }
}

// gen-dupes ---------------------------------------------------------------

struct GenArgs {
  Common common;
  std::string in;
  std::string transform = "shuffle";
  std::size_t count = 2;
  double max_gestalt = 0.85;
  std::string plan;
  std::string grammar;
  std::string prompt;
  std::string check_command;
};

std::string RecordId(const Json& j, std::size_t line_no) {
  for (const char* key : {"item_id", "id"}) {
    if (j.contains(key)) return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
  }
  return std::to_string(line_no - 1);
}

std::string RecordText(const Json& j) {
  for (const char* key : {"puzzle", "text", "input"}) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  }
  throw ParseError("record has no puzzle, text or input field");
}

void RunGenCmd(const GenArgs& a) {
  ClueGrammar grammar;
  if (!a.grammar.empty()) grammar.pattern = a.grammar;
  std::optional<SubstitutionPlan> plan;
  if (!a.plan.empty()) {
    std::ifstream in = OpenIn(a.plan);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("plan is not valid JSON");
    plan = SubstitutionPlan::FromJson(j);
    plan->Validate();
  }
  std::optional<TransformPrompt> prompt;
  if (!a.prompt.empty()) prompt = ParseTransformPrompt(a.prompt);
  const std::vector<TransformKind> chain = prompt ? std::vector<TransformKind>{}
                                                  : ParseChain(a.transform);
  if (std::find(chain.begin(), chain.end(), TransformKind::kParaphrase) != chain.end()) {
    throw ConfigError("paraphrase is model-generated; use --prompt paraphrase to export "
                      "requests");
  }
  if (std::find(chain.begin(), chain.end(), TransformKind::kSubstitute) != chain.end() &&
      !plan) {
    throw ConfigError("substitute needs --plan");
  }
  std::ifstream in = OpenIn(a.in);
  std::ofstream out = OpenOut(a.common.out);
  std::string line;
  std::size_t line_no = 0;
  std::size_t written = 0;
  std::size_t accepted = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("line " + std::to_string(line_no) + " is not JSON");
    const std::string id = RecordId(j, line_no);
    const std::string text = RecordText(j);
    if (prompt) {
      std::optional<Json> solution;
      if (j.contains("solution")) solution = j["solution"];
      std::optional<Json> plan_json;
      if (plan) plan_json = plan->ToJson();
      Json req = BuildTransformPrompt(text, *prompt, solution, plan_json);
      req["original_id"] = id;
      out << req.dump() << '\n';
      ++written;
      continue;
    }
    Rng rng(Mix64(a.common.seed ^ StableHash64(id)));
    const PuzzleDocument doc = ParsePuzzle(text, grammar);
    StructuralContext ctx;
    ctx.chain = chain;
    ctx.plan = plan;
    ctx.grammar = grammar;
    if (plan && j.contains("solution")) {
      ctx.original_solution = j["solution"];
      ctx.variant_solution = TransformSolution(j["solution"], *plan);
    }
    std::vector<std::string> siblings;
    for (std::size_t v = 0; v < a.count; ++v) {
      DuplicateVariant dv;
      dv.original_id = id;
      dv.chain = chain;
      std::string current = text;
      if (chain.front() == TransformKind::kShuffle) {
        current = ShuffleClues(doc, rng).Render();
      }
      if (plan) current = ApplySubstitutionPlan(current, *plan);
      dv.text = current;
      dv.validation = ValidateVariant(dv.text, text, siblings, a.max_gestalt, ctx);
      if (!a.check_command.empty()) {
        const bool ok = RunExternalCheck(a.check_command, dv.text);
        if (!ok) {
          dv.validation.accepted = false;
          dv.validation.reasons.push_back("external check failed");
        }
      }
      Json record = dv.ToJson();
      if (ctx.variant_solution) record["solution"] = *ctx.variant_solution;
      if (dv.validation.accepted) {
        siblings.push_back(dv.text);
        ++accepted;
      }
      out << record.dump() << '\n';
      ++written;
    }
  }
  Log("wrote " + std::to_string(written) + " records, " + std::to_string(accepted) +
      " accepted");
}

// mix ---------------------------------------------------------------------

struct MixArgs {
  Common common;
  std::string clean;
  std::string pool;
  std::string benchmark;
  double seen_fraction = 0.5;
  bool random_split = false;
  double fraction = 0.05;
  std::string manifest;
  bool invert = false;
  std::string contaminated;
  std::optional<double> dose_rate;
  std::optional<std::size_t> clean_size;
  std::optional<std::size_t> seen_items;
  std::optional<std::size_t> variants_per_item;
};

int RunMixCmd(const MixArgs& a) {
  if (a.dose_rate) {
    if (!a.clean_size || !a.seen_items) {
      throw ConfigError("--dose-rate needs --clean-size and --seen-items");
    }
    std::cout << DoseFromRate(*a.dose_rate, *a.clean_size, *a.seen_items, a.variants_per_item)
              << '\n';
    return kExitOk;
  }
  if (a.manifest.empty()) throw ConfigError("--manifest is required");
  if (a.common.out.empty()) throw ConfigError("--out is required");
  if (a.invert) {
    std::ifstream min = OpenIn(a.manifest);
    Json mj = Json::parse(min, nullptr, false);
    if (mj.is_discarded()) throw ConfigError("manifest is not valid JSON");
    MixManifest manifest = MixManifest::FromJson(mj);
    std::ifstream in = OpenIn(a.contaminated.empty() ? a.clean : a.contaminated);
    std::vector<std::string> lines = ReadLines(in);
    std::vector<std::string> restored = InvertMix(lines, manifest);
    std::ofstream out = OpenOut(a.common.out);
    WriteLines(out, restored, manifest.final_newline);
    Log("restored " + std::to_string(restored.size()) + " records");
    return kExitOk;
  }
  if (a.clean.empty() || a.pool.empty() || a.benchmark.empty()) {
    throw ConfigError("mix needs --clean, --pool and --benchmark");
  }
  std::vector<std::string> ids;
  {
    std::ifstream in = OpenIn(a.benchmark);
    for (const BenchmarkItem& item : ReadBenchmark(in, "benchmark")) ids.push_back(item.item_id);
  }
  SeenSplit split = SplitSeenUnseen(
      ids, a.seen_fraction, a.random_split ? std::optional<std::uint64_t>(a.common.seed)
                                           : std::nullopt);
  bool final_newline = true;
  std::vector<std::string> clean_lines;
  {
    std::ifstream in = OpenIn(a.clean);
    clean_lines = ReadLines(in, &final_newline);
  }
  std::vector<std::string> pool_lines;
  {
    std::ifstream in = OpenIn(a.pool);
    pool_lines = ReadLines(in);
  }
  MixResult result = MixDatasets(ParseCleanRecords(clean_lines), ParseDuplicatePool(pool_lines),
                                 split, a.fraction, a.common.seed,
                                 fs::path(a.clean).filename().string());
  result.manifest.final_newline = final_newline;
  {
    std::ofstream out = OpenOut(a.common.out);
    WriteLines(out, result.lines, final_newline);
  }
  {
    std::ofstream out = OpenOut(a.manifest);
    out << result.manifest.ToJson().dump(2) << '\n';
  }
  Log("swapped " + std::to_string(result.manifest.swaps.size()) + " of " +
      std::to_string(result.lines.size()) + " records; seen " +
      std::to_string(split.seen.size()) + ", unseen " + std::to_string(split.unseen.size()));
  return kExitOk;
}

// demo / run --------------------------------------------------------------

void PrintSummary(const RunSummary& summary) {
  if (summary.awaiting_responses) {
    std::cout << "requests exported; rerun the annotate stage in import mode\n";
    return;
  }
  if (!summary.report.is_null()) std::cout << summary.report.dump(2) << '\n';
}

int RunDemoCmd(const Common& c, bool seed_given) {
  PlantedOptions opts;
  if (seed_given) opts.seed = c.seed;
  const fs::path config_path = WritePlantedDemo(c.out, opts);
  PipelineConfig config = PipelineConfig::Load(config_path);
  config.jobs = c.jobs;
  RunOptions run;
  run.log = Log;
  RunSummary summary = RunPipeline(config, run);
  PrintSummary(summary);
  PlantedCorpus planted = GeneratePlantedCorpus(opts);
  const double inc = summary.report["coverage_at_k"]["exact_inclusive"].get<double>();
  const double exc = summary.report["coverage_at_k"]["exact_exclusive"].get<double>();
  const bool ok = inc == planted.ExpectedInclusive() && exc == planted.ExpectedExclusive();
  std::cout << "planted ground truth: inclusive " << planted.ExpectedInclusive()
            << ", exclusive " << planted.ExpectedExclusive() << (ok ? " (match)" : " (MISMATCH)")
            << '\n';
  return ok ? kExitOk : kExitStage;
}

struct RunArgs {
  Common common;
  std::string config;
  std::string stages;
  bool seed_given = false;
  bool jobs_given = false;
};

int RunRunCmd(const RunArgs& a) {
  PipelineConfig config = PipelineConfig::Load(a.config);
  if (!a.common.out.empty()) config.output_dir = a.common.out;
  if (a.seed_given) config.seed = a.common.seed;
  if (a.jobs_given) config.jobs = a.common.jobs;
  RunOptions run;
  run.provider_token = ProviderToken();
  run.log = Log;
  if (!a.stages.empty()) {
    std::size_t start = 0;
    while (start <= a.stages.size()) {
      std::size_t comma = a.stages.find(',', start);
      if (comma == std::string::npos) comma = a.stages.size();
      std::string_view name = Trim(std::string_view(a.stages).substr(start, comma - start));
      if (!name.empty()) run.stages.push_back(ParseStage(name));
      start = comma + 1;
    }
  }
  PrintSummary(RunPipeline(config, run));
  return kExitOk;
}

int Dispatch(int argc, char** argv) {
  CLI::App app{"dupaudit: semantic-duplicate audit of training corpora against benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DUPAUDIT_VERSION);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "chunk a line-delimited corpus file");
  AddCommon(c_ingest, ingest.common);
  c_ingest->add_option("--in", ingest.in, "corpus .jsonl")->required();
  c_ingest->add_option("--dataset-id", ingest.cfg.dataset_id)->required();
  c_ingest->add_option("--mode", ingest.mode)->check(CLI::IsMember({"whole", "paragraph"}));
  c_ingest->add_option("--pair-mode", ingest.pair_mode)
      ->check(CLI::IsMember({"joint", "separate"}));
  c_ingest->add_option("--min-tokens", ingest.cfg.min_tokens);
  c_ingest->add_option("--max-tokens", ingest.cfg.max_tokens);

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "stratified reservoir sample of chunks");
  AddCommon(c_sample, sample.common);
  c_sample->add_option("--in", sample.in, "chunk files")->required();
  c_sample->add_option("--rate", sample.rate)->required();
  c_sample->add_option("--manifest", sample.manifest, "per-stratum CSV");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "embed chunks into a shard or items into queries");
  AddCommon(c_embed, embed.common);
  c_embed->add_option("--chunks", embed.chunks);
  c_embed->add_option("--benchmark", embed.benchmark);
  c_embed->add_option("--benchmark-id", embed.benchmark_id);
  c_embed->add_option("--variant", embed.variant)
      ->check(CLI::IsMember({"input", "output", "joined"}));
  c_embed->add_option("--provider", embed.provider)->check(CLI::IsMember({"hashing", "http"}));
  c_embed->add_option("--dim", embed.dim);
  c_embed->add_option("--endpoint", embed.config.endpoint);
  c_embed->add_option("--batch-size", embed.config.batch_size);
  c_embed->add_option("--max-retries", embed.config.max_retries);
  c_embed->add_option("--timeout", embed.config.timeout_seconds);
  c_embed->add_option("--prefix", embed.config.prefix);

  ScanArgs scan;
  auto* c_scan = app.add_subcommand("scan", "exact top-k cosine search");
  AddCommon(c_scan, scan.common);
  c_scan->add_option("--shards", scan.shards, "directory of .emb shards")->required();
  c_scan->add_option("--queries", scan.queries)->required();
  c_scan->add_option("--k", scan.k)->check(CLI::PositiveNumber);
  c_scan->add_option("--pct", scan.pct, "top-percentile pool fraction");
  c_scan->add_option("--sample", scan.sample, "matches drawn from each pool");
  c_scan->add_flag("--union", scan.union_datasets, "rank across all datasets together");

  AnnotateArgs ann;
  auto* c_ann = app.add_subcommand("annotate", "judge candidate pairs");
  AddCommon(c_ann, ann.common);
  c_ann->add_option("--matches", ann.matches);
  c_ann->add_option("--benchmark", ann.benchmark);
  c_ann->add_option("--benchmark-id", ann.benchmark_id);
  c_ann->add_option("--variant", ann.variant);
  c_ann->add_option("--chunks", ann.chunks);
  c_ann->add_option("--template", ann.tmpl)->check(CLI::IsMember({"mbpp", "codeforces"}));
  c_ann->add_option("--mode", ann.mode)
      ->check(CLI::IsMember({"live", "export", "import", "lineage"}));
  c_ann->add_option("--responses", ann.responses);
  c_ann->add_option("--lineage", ann.lineage);
  c_ann->add_option("--concurrency", ann.concurrency);
  c_ann->add_option("--endpoint", ann.config.endpoint);
  c_ann->add_option("--max-retries", ann.config.max_retries);
  c_ann->add_option("--timeout", ann.config.timeout_seconds);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "coverage, calibration and strata report");
  AddCommon(c_stats, stats.common);
  c_stats->add_option("--matches", stats.matches)->required();
  c_stats->add_option("--records", stats.records)->required();
  c_stats->add_option("--benchmark", stats.benchmark)->required();
  c_stats->add_option("--benchmark-id", stats.benchmark_id);
  c_stats->add_option("--variant", stats.variant);
  c_stats->add_option("--chunks", stats.chunks, "sampled chunks, for exact reconciliation");
  c_stats->add_option("--k", stats.k)->check(CLI::PositiveNumber);
  c_stats->add_option("--strata", stats.strata);
  c_stats->add_option("--bins", stats.bins);
  c_stats->add_option("--interval", stats.interval);
  c_stats->add_option("--pool-fraction", stats.pool_fraction);
  c_stats->add_option("--sample-size", stats.sample_size);

  MetricsArgs metrics;
  auto* c_metrics = app.add_subcommand("metrics", "lexical similarity of text pairs");
  AddCommon(c_metrics, metrics.common, false);
  c_metrics->add_option("--pairs", metrics.pairs, "jsonl of {id, a, b}");
  c_metrics->add_option("--a", metrics.a);
  c_metrics->add_option("--b", metrics.b);
  c_metrics->add_option("--denominator", metrics.denominator);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-dupes", "programmatic puzzle duplicates");
  AddCommon(c_gen, gen.common);
  c_gen->add_option("--in", gen.in)->required();
  c_gen->add_option("--transform", gen.transform, "chain, e.g. shuffle or shuffle,substitute");
  c_gen->add_option("--count", gen.count, "variants per item");
  c_gen->add_option("--max-gestalt", gen.max_gestalt);
  c_gen->add_option("--plan", gen.plan, "substitution plan JSON");
  c_gen->add_option("--grammar", gen.grammar, "clue line regex with 4 groups");
  c_gen->add_option("--prompt", gen.prompt,
                    "export generator requests: paraphrase, code-paraphrase, "
                    "substitution-plan, substitution-apply");
  c_gen->add_option("--check-command", gen.check_command, "external validator command");

  MixArgs mix;
  auto* c_mix = app.add_subcommand("mix", "build a contaminated finetuning set");
  AddCommon(c_mix, mix.common, false);
  c_mix->add_option("--clean", mix.clean);
  c_mix->add_option("--pool", mix.pool);
  c_mix->add_option("--benchmark", mix.benchmark);
  c_mix->add_option("--seen-fraction", mix.seen_fraction);
  c_mix->add_flag("--random-split", mix.random_split);
  c_mix->add_option("--fraction", mix.fraction);
  c_mix->add_option("--manifest", mix.manifest);
  c_mix->add_flag("--invert", mix.invert);
  c_mix->add_option("--contaminated", mix.contaminated);
  c_mix->add_option("--dose-rate", mix.dose_rate, "duplicates per 10k per item");
  c_mix->add_option("--clean-size", mix.clean_size);
  c_mix->add_option("--seen-items", mix.seen_items);
  c_mix->add_option("--variants-per-item", mix.variants_per_item);

  Common demo;
  auto* c_demo = app.add_subcommand("demo", "run the pipeline on a planted mini-corpus");
  AddCommon(c_demo, demo);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "run the pipeline from a config file");
  AddCommon(c_run, run.common, false);
  c_run->add_option("--config", run.config)->required();
  c_run->add_option("--stages", run.stages, "comma separated subset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*c_ingest) RunIngestCmd(ingest);
  if (*c_sample) RunSampleCmd(sample);
  if (*c_embed) RunEmbedCmd(embed);
  if (*c_scan) RunScanCmd(scan);
  if (*c_ann) return RunAnnotateCmd(ann);
  if (*c_stats) RunStatsCmd(stats);
  if (*c_metrics) RunMetricsCmd(metrics);
  if (*c_gen) RunGenCmd(gen);
  if (*c_mix) return RunMixCmd(mix);
  if (*c_demo) return RunDemoCmd(demo, c_demo->count("--seed") > 0);
  if (*c_run) {
    run.seed_given = c_run->count("--seed") > 0;
    run.jobs_given = c_run->count("--jobs") > 0;
    return RunRunCmd(run);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Dispatch(argc, argv);
  } catch (const StageError& e) {
    std::cerr << "error: stage " << e.what() << '\n';
    return e.provider_failure() ? kExitProvider : kExitStage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const TransientProviderError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
