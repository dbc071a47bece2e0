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

#include "dupaudit/pipeline.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dupaudit/chunk_id.h"
#include "dupaudit/csv.h"
#include "dupaudit/reservoir_sampler.h"
#include "dupaudit/text.h"

#ifndef DUPAUDIT_VERSION
#define DUPAUDIT_VERSION "0.0.0"
#endif

namespace dupaudit {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::json;

void CheckKeys(const Json& j, std::initializer_list<std::string_view> allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
T Get(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

ChunkMode ParseChunkMode(const std::string& s) {
  if (s == "whole") return ChunkMode::kWholeRecord;
  if (s == "paragraph") return ChunkMode::kParagraphSplit;
  throw ConfigError("chunk_mode must be whole or paragraph");
}

std::string ChunkModeName(ChunkMode m) {
  return m == ChunkMode::kWholeRecord ? "whole" : "paragraph";
}

PairMode ParsePairMode(const std::string& s) {
  if (s == "joint") return PairMode::kJoint;
  if (s == "separate") return PairMode::kSeparate;
  throw ConfigError("pair_mode must be joint or separate");
}

std::string TextVariantName(TextVariant v) {
  switch (v) {
    case TextVariant::kInput: return "input";
    case TextVariant::kOutput: return "output";
    case TextVariant::kJoined: return "joined";
  }
  return "joined";
}

ProviderConfig ParseProvider(const Json& j, const std::string& where) {
  ProviderConfig p;
  p.endpoint = Get<std::string>(j, "endpoint", p.endpoint, where);
  p.batch_size = Get<std::size_t>(j, "batch_size", p.batch_size, where);
  p.max_retries = Get<int>(j, "max_retries", p.max_retries, where);
  p.timeout_seconds = Get<double>(j, "timeout_seconds", p.timeout_seconds, where);
  p.backoff_seconds = Get<double>(j, "backoff_seconds", p.backoff_seconds, where);
  p.prefix = Get<std::string>(j, "prefix", p.prefix, where);
  return p;
}

Json ProviderToJson(const ProviderConfig& p) {
  return {{"endpoint", p.endpoint},
          {"batch_size", p.batch_size},
          {"max_retries", p.max_retries},
          {"timeout_seconds", p.timeout_seconds},
          {"backoff_seconds", p.backoff_seconds},
          {"prefix", p.prefix}};
}

fs::path Resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

template <typename Fn>
void AtomicWrite(const fs::path& path, Fn&& fn) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    fn(out);
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::ifstream OpenInput(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing input " + path.string());
  return in;
}

std::string MetaLine(const std::string& hash, Stage stage, Json extra = Json::object()) {
  extra["config_hash"] = hash;
  extra["stage"] = StageName(stage);
  return Json{{"_meta", extra}}.dump();
}

struct Context {
  const PipelineConfig& config;
  const RunOptions& options;
  std::string hash;

  void Log(const std::string& message) const {
    if (options.log) options.log(message);
  }
  fs::path Dir(Stage s) const { return StageDir(config, s); }
  fs::path Input(const fs::path& p) const { return Resolve(config.base_dir, p); }
};

std::vector<BenchmarkItem> LoadItems(const Context& ctx,
                                     std::unordered_map<std::string, std::string>* texts) {
  std::vector<BenchmarkItem> all;
  for (const BenchmarkSpec& b : ctx.config.benchmarks) {
    std::ifstream in = OpenInput(ctx.Input(b.path));
    std::vector<BenchmarkItem> items = ReadBenchmark(in, b.benchmark_id, b.metadata_keys);
    for (BenchmarkItem& item : items) {
      if (texts != nullptr) {
        (*texts)[ItemKey(item.benchmark_id, item.item_id)] = item.Text(b.variant);
      }
      all.push_back(std::move(item));
    }
  }
  return all;
}

std::unordered_map<ChunkId, std::string> LoadSampledTexts(const Context& ctx) {
  std::unordered_map<ChunkId, std::string> texts;
  for (const DatasetSpec& d : ctx.config.datasets) {
    std::ifstream in = OpenInput(ctx.Dir(Stage::kSample) / (d.ingest.dataset_id + ".jsonl"));
    for (CorpusChunk& c : ReadChunks(in)) texts.emplace(c.chunk_id, std::move(c.text));
  }
  return texts;
}

std::vector<SimilarityMatch> LoadMatches(const Context& ctx) {
  std::ifstream in = OpenInput(ctx.Dir(Stage::kScan) / "matches.csv");
  return ReadMatchesCsv(in);
}

void RunIngest(const Context& ctx) {
  for (const DatasetSpec& d : ctx.config.datasets) {
    const fs::path input = ctx.Input(d.path);
    std::ifstream in = OpenInput(input);
    std::vector<RawRecord> records = ReadRawRecords(in);
    IngestErrorTally errors;
    std::vector<CorpusChunk> chunks =
        IngestStream(records, d.ingest, input.filename().string(), errors, ctx.config.jobs);
    AtomicWrite(ctx.Dir(Stage::kIngest) / (d.ingest.dataset_id + ".jsonl"),
                [&](std::ostream& out) {
                  out << MetaLine(ctx.hash, Stage::kIngest,
                                  {{"dataset_id", d.ingest.dataset_id},
                                   {"records", records.size()},
                                   {"malformed", errors.count()},
                                   {"chunks", chunks.size()}})
                      << '\n';
                  WriteChunks(out, chunks);
                });
    ctx.Log("ingest " + d.ingest.dataset_id + ": " + std::to_string(records.size()) +
            " records, " + std::to_string(chunks.size()) + " chunks, " +
            std::to_string(errors.count()) + " malformed");
  }
}

void RunSample(const Context& ctx) {
  for (const DatasetSpec& d : ctx.config.datasets) {
    std::ifstream in = OpenInput(ctx.Dir(Stage::kIngest) / (d.ingest.dataset_id + ".jsonl"));
    std::vector<CorpusChunk> chunks = ReadChunks(in);
    StratifiedSampler::Options opts;
    opts.rate = d.sample_rate;
    opts.seed = Mix64(ctx.config.seed ^ StableHash64(d.ingest.dataset_id));
    for (const CorpusChunk& c : chunks) ++opts.expected_sizes[c.SourceKey()];
    StratifiedSampler sampler(opts);
    for (CorpusChunk& c : chunks) sampler.Add(std::move(c));
    SampleResult result = sampler.Finalize();
    const fs::path dir = ctx.Dir(Stage::kSample);
    AtomicWrite(dir / (d.ingest.dataset_id + ".jsonl"), [&](std::ostream& out) {
      out << MetaLine(ctx.hash, Stage::kSample,
                      {{"dataset_id", d.ingest.dataset_id},
                       {"rate", d.sample_rate},
                       {"seed", opts.seed},
                       {"chunks", result.chunks.size()}})
          << '\n';
      WriteChunks(out, result.chunks);
    });
    AtomicWrite(dir / (d.ingest.dataset_id + ".manifest.csv"), [&](std::ostream& out) {
      out << "# config_hash=" << ctx.hash << " run_seed=" << ctx.config.seed << '\n';
      WriteSampleManifest(out, result, d.sample_rate, opts.seed);
    });
    ctx.Log("sample " + d.ingest.dataset_id + ": " + std::to_string(result.chunks.size()) +
            " chunks from " + std::to_string(result.strata.size()) + " strata");
  }
}

struct Providers {
  std::shared_ptr<EmbeddingProvider> corpus;
  std::shared_ptr<EmbeddingProvider> query;
  ProviderConfig config;
};

Providers MakeProviders(const Context& ctx) {
  const EmbedderSpec& e = ctx.config.embedder;
  Providers p;
  p.config = e.provider;
  if (!ctx.options.provider_token.empty()) p.config.api_key = ctx.options.provider_token;
  if (ctx.options.embedder) {
    p.corpus = p.query = ctx.options.embedder;
  } else if (e.kind == "hashing") {
    p.corpus = std::make_shared<HashingEmbedder>(e.dim, e.seed);
    p.query = std::make_shared<HashingEmbedder>(e.dim, e.seed, e.query_prefix);
  } else {
    p.corpus = std::make_shared<HttpEmbedder>(p.config);
    ProviderConfig q = p.config;
    q.prefix = e.query_prefix;
    p.query = std::make_shared<HttpEmbedder>(q);
  }
  return p;
}

void RunEmbed(const Context& ctx) {
  Providers providers = MakeProviders(ctx);
  const fs::path dir = ctx.Dir(Stage::kEmbed);
  for (const DatasetSpec& d : ctx.config.datasets) {
    std::ifstream in = OpenInput(ctx.Dir(Stage::kSample) / (d.ingest.dataset_id + ".jsonl"));
    std::vector<CorpusChunk> chunks = ReadChunks(in);
    if (chunks.empty()) {
      ctx.Log("embed " + d.ingest.dataset_id + ": no sampled chunks, shard skipped");
      fs::remove(dir / (d.ingest.dataset_id + ".emb"));
      continue;
    }
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const CorpusChunk& c : chunks) texts.push_back(c.text);
    std::vector<std::vector<Half>> vectors = EmbedBatch(texts, *providers.corpus, providers.config);
    EmbeddingShard shard;
    shard.dim = static_cast<std::uint32_t>(vectors.front().size());
    shard.provider_tag = providers.corpus->Tag() + ";config_hash=" + ctx.hash;
    for (std::size_t i = 0; i < chunks.size(); ++i) shard.Append(chunks[i].chunk_id, vectors[i]);
    AtomicWrite(dir / (d.ingest.dataset_id + ".emb"),
                [&](std::ostream& out) { WriteShard(out, shard); });
    ctx.Log("embed " + d.ingest.dataset_id + ": " + std::to_string(shard.count()) +
            " vectors, dim " + std::to_string(shard.dim));
  }
  std::vector<Query> queries;
  for (const BenchmarkSpec& b : ctx.config.benchmarks) {
    std::ifstream in = OpenInput(ctx.Input(b.path));
    std::vector<BenchmarkItem> items = ReadBenchmark(in, b.benchmark_id, b.metadata_keys);
    std::vector<Query> q = EmbedQueries(items, b.variant, *providers.query, providers.config);
    std::move(q.begin(), q.end(), std::back_inserter(queries));
  }
  AtomicWrite(dir / "queries.jsonl", [&](std::ostream& out) {
    WriteQueries(out, queries, MetaLine(ctx.hash, Stage::kEmbed, {{"queries", queries.size()}}));
  });
  ctx.Log("embed queries: " + std::to_string(queries.size()));
}

std::vector<Query> LoadQueries(const Context& ctx) {
  std::ifstream in = OpenInput(ctx.Dir(Stage::kEmbed) / "queries.jsonl");
  return ReadQueries(in);
}

void RunScan(const Context& ctx) {
  std::vector<EmbeddingShard> shards;
  for (const fs::path& p : ListShards(ctx.Dir(Stage::kEmbed))) {
    EmbeddingShard shard = ReadShard(p);
    shard.dataset_id = ShardDatasetId(p);
    shards.push_back(std::move(shard));
  }
  std::vector<Query> queries = LoadQueries(ctx);
  ScanOptions opts{ctx.config.k, ctx.config.union_datasets, ctx.config.jobs};
  std::vector<SimilarityMatch> flat;
  if (ctx.config.percentile) {
    auto pools = TopPercentilePools(queries, shards, *ctx.config.percentile, opts);
    for (const std::vector<SimilarityMatch>& pool : pools) {
      std::size_t start = 0;
      while (start < pool.size()) {
        std::size_t end = start;
        while (end < pool.size() && pool[end].dataset_id == pool[start].dataset_id) ++end;
        std::span<const SimilarityMatch> group(pool.data() + start, end - start);
        Rng rng(Mix64(ctx.config.seed ^
                      StableHash64(ItemKey(group[0].benchmark_id, group[0].item_id) + '\t' +
                                   group[0].dataset_id)));
        std::vector<SimilarityMatch> drawn = SamplePool(group, *ctx.config.sample_n, rng);
        for (std::size_t r = 0; r < drawn.size(); ++r) {
          drawn[r].rank = static_cast<std::uint32_t>(r + 1);
          flat.push_back(std::move(drawn[r]));
        }
        start = end;
      }
    }
  } else {
    for (std::vector<SimilarityMatch>& per_query : TopKMatches(queries, shards, opts)) {
      std::move(per_query.begin(), per_query.end(), std::back_inserter(flat));
    }
  }
  AtomicWrite(ctx.Dir(Stage::kScan) / "matches.csv", [&](std::ostream& out) {
    WriteMatchesCsv(out, flat,
                    "config_hash=" + ctx.hash + " seed=" + std::to_string(ctx.config.seed));
  });
  ctx.Log("scan: " + std::to_string(flat.size()) + " matches for " +
          std::to_string(queries.size()) + " queries over " +
          std::to_string(shards.size()) + " shards");
}

std::vector<AnnotationPair> BuildPairs(const Context& ctx) {
  std::unordered_map<std::string, std::string> item_texts;
  LoadItems(ctx, &item_texts);
  std::unordered_map<ChunkId, std::string> chunk_texts = LoadSampledTexts(ctx);
  std::map<std::string, AnnotationPair> pairs;
  for (const SimilarityMatch& m : LoadMatches(ctx)) {
    auto item = item_texts.find(ItemKey(m.benchmark_id, m.item_id));
    auto chunk = chunk_texts.find(m.chunk_id);
    if (item == item_texts.end() || chunk == chunk_texts.end()) {
      throw Error("match refers to unknown item or chunk: " + m.item_id + " / " +
                  m.chunk_id.ToHex());
    }
    PairId id{m.benchmark_id, m.item_id, m.chunk_id};
    pairs.emplace(id.Key(), AnnotationPair{id, item->second, chunk->second});
  }
  std::vector<AnnotationPair> out;
  out.reserve(pairs.size());
  for (auto& [_, p] : pairs) out.push_back(std::move(p));
  return out;
}

template <typename T>
void WriteSortedLedger(const fs::path& path, std::vector<T> rows, const std::string& meta) {
  std::sort(rows.begin(), rows.end(),
            [](const T& a, const T& b) { return a.pair.Key() < b.pair.Key(); });
  AtomicWrite(path, [&](std::ostream& out) {
    out << meta << '\n';
    for (const T& r : rows) out << r.ToJson().dump() << '\n';
  });
}

// Returns false when the run must wait for offline responses.
bool RunAnnotate(const Context& ctx) {
  const JudgeSpec& spec = ctx.config.judge;
  const PromptTemplate tmpl = PromptTemplate::Builtin(spec.template_name);
  const std::vector<AnnotationPair> pairs = BuildPairs(ctx);
  const fs::path dir = ctx.Dir(Stage::kAnnotate);
  const std::string meta = MetaLine(ctx.hash, Stage::kAnnotate, {{"template", tmpl.name()}});
  const fs::path records_path = dir / "records.jsonl";
  const fs::path failures_path = dir / "failures.jsonl";

  if (spec.mode == "export" && !ctx.options.judge) {
    AtomicWrite(dir / "requests.jsonl", [&](std::ostream& out) {
      out << meta << '\n';
      ExportRequests(out, pairs, tmpl);
    });
    ctx.Log("annotate: exported " + std::to_string(pairs.size()) + " requests");
    return false;
  }
  if (spec.mode == "import" && !ctx.options.judge) {
    std::ifstream in = OpenInput(ctx.Input(spec.responses_path));
    std::vector<AnnotationRecord> records;
    std::vector<FailureEntry> failures;
    for (ParseOutcome& o : ImportResponses(in, tmpl, "import")) {
      if (o.status == ParseStatus::kAccepted) {
        records.push_back(std::move(*o.record));
      } else {
        PairId pair = o.record ? o.record->pair : PairId{};
        failures.push_back(
            FailureEntry{pair, std::string(ParseStatusName(o.status)), o.reason, o.raw});
      }
    }
    ctx.Log("annotate: imported " + std::to_string(records.size()) + " records, " +
            std::to_string(failures.size()) + " failures");
    WriteSortedLedger(records_path, std::move(records), meta);
    WriteSortedLedger(failures_path, std::move(failures), meta);
    return true;
  }

  std::shared_ptr<Judge> judge = ctx.options.judge;
  ProviderConfig provider = spec.provider;
  if (!ctx.options.provider_token.empty()) provider.api_key = ctx.options.provider_token;
  if (!judge) {
    if (spec.mode == "lineage") {
      judge = std::make_shared<LineageJudge>(LineageJudge::FromFile(ctx.Input(spec.lineage_path)));
    } else {
      judge = std::make_shared<HttpJudge>(provider);
    }
  }
  fs::create_directories(dir);
  for (const fs::path& p : {records_path, failures_path}) {
    if (!fs::exists(p)) std::ofstream(p) << meta << '\n';
  }
  AnnotateOptions opts;
  opts.concurrency = std::max<std::size_t>(1, std::min<std::size_t>(spec.concurrency, ctx.config.jobs));
  opts.max_retries = provider.max_retries;
  opts.backoff_seconds = provider.backoff_seconds;
  opts.records_path = records_path;
  opts.failures_path = failures_path;
  AnnotateResult result = AnnotatePairs(pairs, *judge, tmpl, opts);
  ctx.Log("annotate: " + std::to_string(result.records.size()) + " records, " +
          std::to_string(result.failures.size()) + " failures, " +
          std::to_string(result.resumed) + " resumed");
  const bool all_failed = result.provider_failures > 0 && result.records.empty();
  WriteSortedLedger(records_path, std::move(result.records), meta);
  WriteSortedLedger(failures_path, std::move(result.failures), meta);
  if (all_failed) throw ProviderError("every judge request failed", {});
  return true;
}

Json RunStats(const Context& ctx) {
  std::unordered_map<std::string, std::string> item_texts;
  std::vector<BenchmarkItem> items = LoadItems(ctx, &item_texts);
  std::unordered_map<ChunkId, std::string> chunk_texts = LoadSampledTexts(ctx);
  std::vector<SimilarityMatch> matches = LoadMatches(ctx);
  std::vector<AnnotationRecord> records;
  {
    std::ifstream in = OpenInput(ctx.Dir(Stage::kAnnotate) / "records.jsonl");
    records = ReadAnnotationRecords(in);
  }
  std::size_t failures = 0;
  if (std::ifstream in(ctx.Dir(Stage::kAnnotate) / "failures.jsonl"); in) {
    failures = ReadFailureEntries(in).size();
  }
  std::vector<JoinedMatch> joined = JoinAnnotations(matches, records);
  std::vector<ExactConflict> conflicts =
      ReconcileExact(joined, item_texts, chunk_texts, ctx.config.normalization);
  ContaminationReport report = BuildReport(joined, items, ctx.config.report);
  report.summary["seed"] = ctx.config.seed;
  report.summary["annotation_failures"] = failures;
  report.summary["exact_conflicts"] = conflicts.size();
  const fs::path dir = ctx.Dir(Stage::kStats);
  WriteReport(dir, report, ctx.hash);
  AtomicWrite(dir / "exact_conflicts.csv", [&](std::ostream& out) {
    out << "# config_hash=" << ctx.hash << '\n';
    out << "benchmark_id,item_id,chunk_id,judge_type,resolution\n";
    for (const ExactConflict& c : conflicts) {
      out << CsvField(c.pair.benchmark_id) << ',' << CsvField(c.pair.item_id) << ','
          << c.pair.chunk_id.ToHex() << ',' << CsvField(c.judge_match_type) << ','
          << CsvField(c.resolution) << '\n';
    }
  });
  ctx.Log("stats: coverage@" + std::to_string(ctx.config.report.k) + " " +
          report.summary["coverage_at_k"].dump());
  Json summary = report.summary;
  summary["config_hash"] = ctx.hash;
  return summary;
}

void WriteLedger(const Context& ctx, const std::vector<Stage>& completed) {
  Json inputs = Json::array();
  auto add = [&](const fs::path& p) {
    const fs::path resolved = ctx.Input(p);
    Json entry = {{"path", p.string()}};
    if (fs::exists(resolved)) entry["blake2b_128"] = ContentHashHex(ReadFile(resolved));
    inputs.push_back(entry);
  };
  for (const DatasetSpec& d : ctx.config.datasets) add(d.path);
  for (const BenchmarkSpec& b : ctx.config.benchmarks) add(b.path);
  if (ctx.config.judge.mode == "import") add(ctx.config.judge.responses_path);
  if (ctx.config.judge.mode == "lineage") add(ctx.config.judge.lineage_path);
  Json stages = Json::array();
  for (Stage s : completed) stages.push_back(StageName(s));
  Json ledger = {{"tool", "dupaudit"},
                 {"version", DUPAUDIT_VERSION},
                 {"seed", ctx.config.seed},
                 {"config_hash", ctx.hash},
                 {"config", ctx.config.ToJson()},
                 {"inputs", inputs},
                 {"stages", stages}};
  AtomicWrite(ctx.config.output_dir / "run_ledger.json",
              [&](std::ostream& out) { out << ledger.dump(2) << '\n'; });
}

}  // namespace

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kSample: return "sample";
    case Stage::kEmbed: return "embed";
    case Stage::kScan: return "scan";
    case Stage::kAnnotate: return "annotate";
    case Stage::kStats: return "stats";
  }
  return "ingest";
}

Stage ParseStage(std::string_view name) {
  for (Stage s : AllStages()) {
    if (StageName(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

const std::vector<Stage>& AllStages() {
  static const std::vector<Stage> stages = {Stage::kIngest, Stage::kSample,   Stage::kEmbed,
                                            Stage::kScan,   Stage::kAnnotate, Stage::kStats};
  return stages;
}

void WriteQueries(std::ostream& out, std::span<const Query> queries,
                  const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << '\n';
  for (const Query& q : queries) {
    out << Json{{"benchmark_id", q.benchmark_id}, {"item_id", q.item_id}, {"vector", q.vector}}
               .dump()
        << '\n';
  }
}

std::vector<Query> ReadQueries(std::istream& in) {
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError("query line " + std::to_string(line_no) + " is not a JSON object");
    }
    if (j.contains("_meta")) continue;
    try {
      queries.push_back(Query{j.at("benchmark_id").get<std::string>(),
                              j.at("item_id").get<std::string>(),
                              j.at("vector").get<std::vector<float>>()});
    } catch (const Json::exception& e) {
      throw ParseError("query line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return queries;
}

fs::path StageDir(const PipelineConfig& config, Stage stage) {
  return config.output_dir / std::string(StageName(stage));
}

PipelineConfig PipelineConfig::FromJson(const Json& j, const fs::path& base_dir) {
  const std::string top = "config";
  CheckKeys(j, {"datasets", "benchmarks", "embedder", "judge", "k", "percentile",
                "sample_n", "union", "seed", "output_dir", "jobs", "normalization",
                "report"},
            top);
  PipelineConfig c;
  c.base_dir = base_dir;
  if (!j.contains("datasets") || !j.at("datasets").is_array()) {
    throw ConfigError("config needs a datasets array");
  }
  for (const Json& d : j.at("datasets")) {
    const std::string where = "dataset";
    CheckKeys(d, {"path", "dataset_id", "sample_rate", "chunk_mode", "pair_mode",
                  "min_tokens", "max_tokens"},
              where);
    DatasetSpec spec;
    spec.path = Get<std::string>(d, "path", "", where);
    spec.sample_rate = Get<double>(d, "sample_rate", spec.sample_rate, where);
    spec.ingest.dataset_id = Get<std::string>(d, "dataset_id", "", where);
    spec.ingest.mode = ParseChunkMode(Get<std::string>(d, "chunk_mode", "whole", where));
    spec.ingest.pair_mode = ParsePairMode(Get<std::string>(d, "pair_mode", "joint", where));
    spec.ingest.min_tokens = Get<std::size_t>(d, "min_tokens", spec.ingest.min_tokens, where);
    spec.ingest.max_tokens = Get<std::size_t>(d, "max_tokens", spec.ingest.max_tokens, where);
    c.datasets.push_back(std::move(spec));
  }
  if (!j.contains("benchmarks") || !j.at("benchmarks").is_array()) {
    throw ConfigError("config needs a benchmarks array");
  }
  for (const Json& b : j.at("benchmarks")) {
    const std::string where = "benchmark";
    CheckKeys(b, {"path", "benchmark_id", "text_variant", "metadata_keys"}, where);
    BenchmarkSpec spec;
    spec.path = Get<std::string>(b, "path", "", where);
    spec.benchmark_id = Get<std::string>(b, "benchmark_id", "", where);
    spec.variant = ParseTextVariant(Get<std::string>(b, "text_variant", "joined", where));
    spec.metadata_keys = Get<std::vector<std::string>>(b, "metadata_keys", {}, where);
    c.benchmarks.push_back(std::move(spec));
  }
  if (j.contains("embedder")) {
    const Json& e = j.at("embedder");
    const std::string where = "embedder";
    CheckKeys(e, {"kind", "dim", "seed", "query_prefix", "endpoint", "batch_size",
                  "max_retries", "timeout_seconds", "backoff_seconds", "prefix"},
              where);
    c.embedder.kind = Get<std::string>(e, "kind", c.embedder.kind, where);
    c.embedder.dim = Get<std::uint32_t>(e, "dim", c.embedder.dim, where);
    c.embedder.seed = Get<std::uint64_t>(e, "seed", c.embedder.seed, where);
    c.embedder.query_prefix = Get<std::string>(e, "query_prefix", "", where);
    c.embedder.provider = ParseProvider(e, where);
  }
  if (j.contains("judge")) {
    const Json& jd = j.at("judge");
    const std::string where = "judge";
    CheckKeys(jd, {"mode", "template", "concurrency", "responses_path", "lineage_path",
                   "endpoint", "batch_size", "max_retries", "timeout_seconds",
                   "backoff_seconds", "prefix"},
              where);
    c.judge.mode = Get<std::string>(jd, "mode", c.judge.mode, where);
    c.judge.template_name = Get<std::string>(jd, "template", c.judge.template_name, where);
    c.judge.concurrency = Get<std::size_t>(jd, "concurrency", c.judge.concurrency, where);
    c.judge.responses_path = Get<std::string>(jd, "responses_path", "", where);
    c.judge.lineage_path = Get<std::string>(jd, "lineage_path", "", where);
    c.judge.provider = ParseProvider(jd, where);
  }
  c.k = Get<std::size_t>(j, "k", c.k, top);
  if (j.contains("percentile") && !j.at("percentile").is_null()) {
    c.percentile = Get<double>(j, "percentile", 0.0, top);
  }
  if (j.contains("sample_n") && !j.at("sample_n").is_null()) {
    c.sample_n = Get<std::size_t>(j, "sample_n", 0, top);
  }
  c.union_datasets = Get<bool>(j, "union", false, top);
  c.seed = Get<std::uint64_t>(j, "seed", 0, top);
  c.output_dir = Resolve(base_dir, Get<std::string>(j, "output_dir", "dupaudit-out", top));
  c.jobs = Get<unsigned>(j, "jobs", 1, top);
  if (j.contains("normalization")) {
    const Json& n = j.at("normalization");
    const std::string where = "normalization";
    CheckKeys(n, {"nfc", "collapse_whitespace", "lowercase", "containment"}, where);
    c.normalization.nfc = Get<bool>(n, "nfc", true, where);
    c.normalization.collapse_whitespace = Get<bool>(n, "collapse_whitespace", true, where);
    c.normalization.lowercase = Get<bool>(n, "lowercase", false, where);
    c.normalization.containment = Get<bool>(n, "containment", false, where);
  }
  if (j.contains("report")) {
    const Json& r = j.at("report");
    const std::string where = "report";
    CheckKeys(r, {"ks", "bins", "z", "interval", "bin_range", "strata", "elo_bucket_width"},
              where);
    c.report.ks = Get<std::vector<std::size_t>>(r, "ks", c.report.ks, where);
    c.report.calibration.bins = Get<std::size_t>(r, "bins", c.report.calibration.bins, where);
    c.report.calibration.z = Get<double>(r, "z", c.report.calibration.z, where);
    const std::string interval = Get<std::string>(r, "interval", "normal", where);
    if (interval == "normal") {
      c.report.calibration.method = IntervalMethod::kNormal;
    } else if (interval == "wilson") {
      c.report.calibration.method = IntervalMethod::kWilson;
    } else {
      throw ConfigError("report.interval must be normal or wilson");
    }
    const std::string range = Get<std::string>(r, "bin_range", "observed", where);
    if (range == "observed") {
      c.report.calibration.range = BinRange::kObserved;
    } else if (range == "unit") {
      c.report.calibration.range = BinRange::kUnit;
    } else {
      throw ConfigError("report.bin_range must be observed or unit");
    }
    if (r.contains("strata")) {
      c.report.strata.clear();
      for (const std::string& s : Get<std::vector<std::string>>(r, "strata", {}, where)) {
        c.report.strata.push_back(ParseStrataKey(s));
      }
    }
    c.report.elo_bucket_width =
        Get<int>(r, "elo_bucket_width", c.report.elo_bucket_width, where);
  }
  c.report.k = c.sample_n ? *c.sample_n : c.k;
  c.report.pool_fraction = c.percentile;
  c.report.sample_size = c.sample_n;
  return c;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return FromJson(j, path.parent_path());
}

Json PipelineConfig::ToJson() const {
  Json datasets = Json::array();
  for (const DatasetSpec& d : this->datasets) {
    datasets.push_back({{"path", d.path.string()},
                        {"dataset_id", d.ingest.dataset_id},
                        {"sample_rate", d.sample_rate},
                        {"chunk_mode", ChunkModeName(d.ingest.mode)},
                        {"pair_mode", d.ingest.pair_mode == PairMode::kJoint ? "joint" : "separate"},
                        {"min_tokens", d.ingest.min_tokens},
                        {"max_tokens", d.ingest.max_tokens}});
  }
  Json benchmarks = Json::array();
  for (const BenchmarkSpec& b : this->benchmarks) {
    benchmarks.push_back({{"path", b.path.string()},
                          {"benchmark_id", b.benchmark_id},
                          {"text_variant", TextVariantName(b.variant)},
                          {"metadata_keys", b.metadata_keys}});
  }
  Json e = ProviderToJson(embedder.provider);
  e["kind"] = embedder.kind;
  e["dim"] = embedder.dim;
  e["seed"] = embedder.seed;
  e["query_prefix"] = embedder.query_prefix;
  Json jd = ProviderToJson(judge.provider);
  jd["mode"] = judge.mode;
  jd["template"] = judge.template_name;
  jd["concurrency"] = judge.concurrency;
  jd["responses_path"] = judge.responses_path.string();
  jd["lineage_path"] = judge.lineage_path.string();
  Json strata = Json::array();
  for (StrataKey s : report.strata) strata.push_back(StrataKeyName(s));
  return {{"datasets", datasets},
          {"benchmarks", benchmarks},
          {"embedder", e},
          {"judge", jd},
          {"k", k},
          {"percentile", percentile ? Json(*percentile) : Json(nullptr)},
          {"sample_n", sample_n ? Json(*sample_n) : Json(nullptr)},
          {"union", union_datasets},
          {"seed", seed},
          {"output_dir", output_dir.string()},
          {"jobs", jobs},
          {"normalization",
           {{"nfc", normalization.nfc},
            {"collapse_whitespace", normalization.collapse_whitespace},
            {"lowercase", normalization.lowercase},
            {"containment", normalization.containment}}},
          {"report",
           {{"ks", report.ks},
            {"bins", report.calibration.bins},
            {"z", report.calibration.z},
            {"interval",
             report.calibration.method == IntervalMethod::kNormal ? "normal" : "wilson"},
            {"bin_range", report.calibration.range == BinRange::kObserved ? "observed" : "unit"},
            {"strata", strata},
            {"elo_bucket_width", report.elo_bucket_width}}}};
}

void PipelineConfig::Validate() const {
  if (datasets.empty()) throw ConfigError("no datasets configured");
  if (benchmarks.empty()) throw ConfigError("no benchmarks configured");
  std::set<std::string> ids;
  for (const DatasetSpec& d : datasets) {
    if (d.path.empty()) throw ConfigError("dataset without a path");
    if (d.ingest.dataset_id.empty()) throw ConfigError("dataset without a dataset_id");
    if (d.ingest.dataset_id.find_first_of("./\\") != std::string::npos) {
      throw ConfigError("dataset_id '" + d.ingest.dataset_id +
                        "' may not contain '.', '/' or '\\'");
    }
    if (!ids.insert(d.ingest.dataset_id).second) {
      throw ConfigError("dataset_id '" + d.ingest.dataset_id + "' repeats");
    }
    if (!(d.sample_rate > 0.0 && d.sample_rate <= 1.0)) {
      throw ConfigError("sample rate for '" + d.ingest.dataset_id + "' must be in (0, 1]");
    }
    d.ingest.Validate();
  }
  for (const BenchmarkSpec& b : benchmarks) {
    if (b.path.empty()) throw ConfigError("benchmark without a path");
    if (b.benchmark_id.empty()) throw ConfigError("benchmark without a benchmark_id");
  }
  if (k < 1) throw ConfigError("k must be >= 1");
  if (percentile.has_value() != sample_n.has_value()) {
    throw ConfigError("percentile and sample_n must be given together");
  }
  if (percentile && !(*percentile > 0.0 && *percentile <= 1.0)) {
    throw ConfigError("percentile must be in (0, 1]");
  }
  if (sample_n && *sample_n < 1) throw ConfigError("sample_n must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (embedder.kind == "hashing") {
    if (embedder.dim < 1) throw ConfigError("embedder.dim must be >= 1");
  } else if (embedder.kind == "http") {
    embedder.provider.Validate();
  } else {
    throw ConfigError("embedder.kind must be hashing or http");
  }
  if (judge.mode == "live") {
    judge.provider.Validate();
  } else if (judge.mode == "import") {
    if (judge.responses_path.empty()) throw ConfigError("import mode needs responses_path");
  } else if (judge.mode == "lineage") {
    if (judge.lineage_path.empty()) throw ConfigError("lineage mode needs lineage_path");
  } else if (judge.mode != "export") {
    throw ConfigError("judge.mode must be live, export, import or lineage");
  }
  if (judge.concurrency < 1) throw ConfigError("judge.concurrency must be >= 1");
  PromptTemplate::Builtin(judge.template_name);
  for (std::size_t kk : report.ks) {
    if (kk < 1) throw ConfigError("report.ks entries must be >= 1");
  }
  if (report.calibration.bins < 1) throw ConfigError("report.bins must be >= 1");
  if (report.elo_bucket_width < 1) throw ConfigError("report.elo_bucket_width must be >= 1");
}

std::string PipelineConfig::Hash() const {
  Json j = ToJson();
  j.erase("output_dir");
  j.erase("jobs");
  return ContentHashHex(j.dump());
}

LineageJudge::LineageJudge(std::map<std::string, MatchType> labels)
    : labels_(std::move(labels)) {}

LineageJudge LineageJudge::FromFile(const fs::path& path) {
  std::ifstream in = OpenInput(path);
  std::map<std::string, MatchType> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("bad lineage line");
    if (j.contains("_meta")) continue;
    try {
      PairId id{j.at("benchmark_id").get<std::string>(), j.at("item_id").get<std::string>(),
                ChunkId::FromHex(j.at("chunk_id").get<std::string>())};
      labels[id.Key()] = ParseMatchType(j.at("match_type").get<std::string>());
    } catch (const Json::exception& e) {
      throw ParseError(std::string("bad lineage line: ") + e.what());
    }
  }
  return LineageJudge(std::move(labels));
}

std::string LineageJudge::Evaluate(const Json& request) {
  PairId pair = PairId::FromJson(request.at("pair_id"));
  MatchType type = MatchType::kUnrelated;
  if (auto it = labels_.find(pair.Key()); it != labels_.end()) type = it->second;
  return Json{{"is_sd", IsDuplicateType(type)},
              {"confidence", 1.0},
              {"reasoning", "planted lineage"},
              {"match_type", MatchTypeName(type)}}
      .dump();
}

RunSummary RunPipeline(const PipelineConfig& config, const RunOptions& options) {
  config.Validate();
  Context ctx{config, options, config.Hash()};
  std::vector<Stage> stages = options.stages.empty() ? AllStages() : options.stages;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  fs::create_directories(config.output_dir);

  RunSummary summary;
  for (Stage stage : stages) {
    ctx.Log(std::string("stage ") + std::string(StageName(stage)));
    try {
      switch (stage) {
        case Stage::kIngest: RunIngest(ctx); break;
        case Stage::kSample: RunSample(ctx); break;
        case Stage::kEmbed: RunEmbed(ctx); break;
        case Stage::kScan: RunScan(ctx); break;
        case Stage::kAnnotate:
          if (!RunAnnotate(ctx)) summary.awaiting_responses = true;
          break;
        case Stage::kStats: summary.report = RunStats(ctx); break;
      }
    } catch (const ProviderError& e) {
      WriteLedger(ctx, summary.completed);
      throw StageError(stage, e.what(), true);
    } catch (const TransientProviderError& e) {
      WriteLedger(ctx, summary.completed);
      throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
      WriteLedger(ctx, summary.completed);
      throw StageError(stage, e.what(), false);
    }
    summary.completed.push_back(stage);
    if (summary.awaiting_responses) break;
  }
  WriteLedger(ctx, summary.completed);
  return summary;
}

}  // namespace dupaudit
