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

#include "dupaudit/corpus_ingest.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <thread>

#include "dupaudit/errors.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t tokens = 0;
};

// Paragraphs are maximal runs of non-blank lines.
std::vector<Span> SplitParagraphs(std::string_view text) {
  std::vector<Span> paragraphs;
  std::size_t pos = 0;
  bool open = false;
  Span current;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (Trim(line).empty()) {
      if (open) {
        paragraphs.push_back(current);
        open = false;
      }
    } else {
      if (!open) {
        current = Span{pos, eol, 0};
        open = true;
      }
      current.end = eol;
      current.tokens += CountTokens(line);
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  if (open) paragraphs.push_back(current);
  return paragraphs;
}

// Cuts one oversize paragraph into windows of at most `max_tokens` tokens.
std::vector<Span> TokenWindows(std::string_view text, const Span& para,
                               std::size_t max_tokens) {
  std::vector<Span> windows;
  std::string_view body = text.substr(para.begin, para.end - para.begin);
  std::vector<std::string_view> tokens = WhitespaceTokens(body);
  for (std::size_t i = 0; i < tokens.size(); i += max_tokens) {
    std::size_t last = std::min(tokens.size(), i + max_tokens) - 1;
    std::size_t begin = para.begin + (tokens[i].data() - body.data());
    std::size_t end =
        para.begin + (tokens[last].data() - body.data()) + tokens[last].size();
    windows.push_back(Span{begin, end, last - i + 1});
  }
  return windows;
}

std::vector<Span> PackParagraphs(std::string_view text, std::size_t max_tokens) {
  std::vector<Span> groups;
  bool open = false;
  Span current;
  auto flush = [&] {
    if (open) groups.push_back(current);
    open = false;
  };
  for (const Span& para : SplitParagraphs(text)) {
    if (para.tokens > max_tokens) {
      flush();
      std::vector<Span> windows = TokenWindows(text, para, max_tokens);
      for (std::size_t w = 0; w + 1 < windows.size(); ++w) {
        groups.push_back(windows[w]);
      }
      current = windows.back();
      open = true;
      continue;
    }
    if (open && current.tokens + para.tokens > max_tokens) flush();
    if (!open) {
      current = para;
      open = true;
    } else {
      current.end = para.end;
      current.tokens += para.tokens;
    }
  }
  flush();
  return groups;
}

void ChunkText(std::string_view text, const IngestConfig& cfg,
               const std::vector<std::string>& source_path,
               const ChunkOrigin& base, std::vector<CorpusChunk>& out) {
  auto emit = [&](std::string_view piece, std::size_t tokens) {
    if (tokens < cfg.min_tokens || tokens > cfg.max_tokens) return;
    CorpusChunk chunk;
    chunk.chunk_id = ComputeChunkId(cfg.dataset_id, piece);
    chunk.dataset_id = cfg.dataset_id;
    chunk.source_path = source_path;
    chunk.text = std::string(piece);
    chunk.token_count = tokens;
    chunk.origin = base;
    chunk.origin.chunk_index = static_cast<std::uint32_t>(out.size());
    out.push_back(std::move(chunk));
  };

  std::size_t tokens = CountTokens(text);
  if (cfg.mode == ChunkMode::kWholeRecord || tokens <= cfg.max_tokens) {
    emit(text, tokens);
    return;
  }
  for (const Span& group : PackParagraphs(text, cfg.max_tokens)) {
    emit(text.substr(group.begin, group.end - group.begin), group.tokens);
  }
}

const std::string& RequireString(const nlohmann::json& record,
                                 const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw ParseError(std::string("record lacks string field '") + field + "'");
  }
  return it->get_ref<const std::string&>();
}

}  // namespace

std::string CorpusChunk::SourceKey() const {
  std::string key;
  for (const std::string& level : source_path) {
    if (!key.empty()) key.push_back('/');
    key += level;
  }
  return key;
}

void IngestConfig::Validate() const {
  if (min_tokens < 1) throw ConfigError("min_tokens must be at least 1");
  if (min_tokens >= max_tokens) {
    throw ConfigError("min_tokens must be smaller than max_tokens");
  }
  if (dataset_id.empty()) throw ConfigError("dataset_id must be non-empty");
}

std::size_t CountTokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    bool space = IsAsciiSpace(c);
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

std::vector<std::string> ParseSourcePath(std::string_view raw_path) {
  std::vector<std::string> levels;
  std::size_t pos = 0;
  while (pos <= raw_path.size()) {
    std::size_t next = raw_path.find('/', pos);
    if (next == std::string_view::npos) next = raw_path.size();
    std::string_view level = Trim(raw_path.substr(pos, next - pos));
    if (!level.empty()) levels.emplace_back(level);
    pos = next + 1;
  }
  if (levels.empty()) throw ParseError("missing source");
  return levels;
}

std::vector<CorpusChunk> ChunkRecord(const nlohmann::json& record,
                                     const IngestConfig& cfg,
                                     const ChunkOrigin& base) {
  if (!record.is_object()) throw ParseError("record is not a JSON object");
  std::vector<std::string> source_path =
      ParseSourcePath(RequireString(record, "source"));
  std::vector<CorpusChunk> out;
  if (record.contains("text")) {
    ChunkText(RequireString(record, "text"), cfg, source_path, base, out);
    return out;
  }
  const std::string& prompt = RequireString(record, "prompt");
  const std::string& response = RequireString(record, "response");
  if (cfg.pair_mode == PairMode::kJoint) {
    ChunkText(prompt + "\n\n" + response, cfg, source_path, base, out);
  } else {
    ChunkText(prompt, cfg, source_path, base, out);
    ChunkText(response, cfg, source_path, base, out);
  }
  return out;
}

std::vector<CorpusChunk> IngestStream(std::span<const RawRecord> records,
                                      const IngestConfig& cfg,
                                      std::string_view file_name,
                                      IngestErrorTally& errors,
                                      unsigned jobs) {
  cfg.Validate();
  jobs = std::max(1u, std::min<unsigned>(
                          jobs, static_cast<unsigned>(records.size() / 64 + 1)));
  auto work = [&](std::size_t begin, std::size_t end,
                  std::vector<CorpusChunk>& out) {
    for (std::size_t i = begin; i < end; ++i) {
      const RawRecord& raw = records[i];
      if (Trim(raw.line).empty()) continue;
      try {
        nlohmann::json record = nlohmann::json::parse(raw.line);
        ChunkOrigin base{std::string(file_name), raw.index, 0};
        std::vector<CorpusChunk> chunks = ChunkRecord(record, cfg, base);
        std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
      } catch (const nlohmann::json::exception&) {
        errors.Add();
      } catch (const ParseError&) {
        errors.Add();
      }
    }
  };

  std::vector<std::vector<CorpusChunk>> parts(jobs);
  std::size_t block = (records.size() + jobs - 1) / jobs;
  if (jobs == 1) {
    work(0, records.size(), parts[0]);
  } else {
    std::vector<std::thread> threads;
    for (unsigned j = 0; j < jobs; ++j) {
      std::size_t begin = std::min(records.size(), j * block);
      std::size_t end = std::min(records.size(), begin + block);
      threads.emplace_back(work, begin, end, std::ref(parts[j]));
    }
    for (std::thread& t : threads) t.join();
  }
  std::vector<CorpusChunk> out;
  for (auto& part : parts) {
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<RawRecord> ReadRawRecords(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::uint64_t index = 0;
  while (std::getline(in, line)) {
    records.push_back(RawRecord{std::move(line), index++});
    line.clear();
  }
  return records;
}

nlohmann::json ChunkToJson(const CorpusChunk& chunk) {
  return nlohmann::json{
      {"text", chunk.text},
      {"source", chunk.SourceKey()},
      {"token_count", chunk.token_count},
      {"chunk_id", chunk.chunk_id.ToHex()},
      {"dataset_id", chunk.dataset_id},
      {"origin",
       {{"file", chunk.origin.file},
        {"record", chunk.origin.record_index},
        {"chunk", chunk.origin.chunk_index}}},
  };
}

CorpusChunk ChunkFromJson(const nlohmann::json& j) {
  CorpusChunk chunk;
  chunk.text = RequireString(j, "text");
  chunk.source_path = ParseSourcePath(RequireString(j, "source"));
  chunk.dataset_id = RequireString(j, "dataset_id");
  chunk.chunk_id = ChunkId::FromHex(RequireString(j, "chunk_id"));
  chunk.token_count = j.value("token_count", CountTokens(chunk.text));
  if (auto it = j.find("origin"); it != j.end() && it->is_object()) {
    chunk.origin.file = it->value("file", "");
    chunk.origin.record_index = it->value("record", std::uint64_t{0});
    chunk.origin.chunk_index = it->value("chunk", std::uint32_t{0});
  }
  return chunk;
}

void WriteChunks(std::ostream& out, std::span<const CorpusChunk> chunks) {
  for (const CorpusChunk& chunk : chunks) {
    out << ChunkToJson(chunk).dump() << '\n';
  }
}

std::vector<CorpusChunk> ReadChunks(std::istream& in) {
  std::vector<CorpusChunk> chunks;
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (j.contains("_meta")) continue;
    chunks.push_back(ChunkFromJson(j));
  }
  return chunks;
}

}  // namespace dupaudit
