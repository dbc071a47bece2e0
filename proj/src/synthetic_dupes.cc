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

#include "dupaudit/synthetic_dupes.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <unordered_map>

#include "dupaudit/errors.h"
#include "dupaudit/prompt_templates.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

struct Term {
  std::string from;
  std::string to;
};

// Non-ASCII bytes count as word characters so multi-byte letters are never
// split.
bool IsWordByte(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z');
}

bool MatchesAt(std::string_view text, std::size_t i, const std::string& term) {
  if (text.compare(i, term.size(), term) != 0) return false;
  if (IsWordByte(term.front()) && i > 0 && IsWordByte(text[i - 1])) return false;
  const std::size_t end = i + term.size();
  if (IsWordByte(term.back()) && end < text.size() && IsWordByte(text[end])) {
    return false;
  }
  return true;
}

std::string WithInitial(const std::string& s, bool upper) {
  std::string out = s;
  char& c = out.front();
  if (upper && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (!upper && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<Term> BuildTerms(const SubstitutionPlan& plan,
                             const SubstitutionOptions& options) {
  std::vector<Term> terms;
  std::set<std::string> froms;
  for (auto& [from, to] : plan.Terms()) {
    terms.push_back(Term{from, to});
    froms.insert(from);
  }
  if (options.case_variants) {
    const std::size_t base = terms.size();
    for (std::size_t i = 0; i < base; ++i) {
      for (bool upper : {false, true}) {
        Term variant{WithInitial(terms[i].from, upper), WithInitial(terms[i].to, upper)};
        if (froms.insert(variant.from).second) terms.push_back(std::move(variant));
      }
    }
  }
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    if (a.from.size() != b.from.size()) return a.from.size() > b.from.size();
    return a.from < b.from;
  });
  return terms;
}

std::string ReplaceTerms(std::string_view text, const std::vector<Term>& terms) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    for (const Term& term : terms) {
      if (MatchesAt(text, i, term.from)) {
        out += term.to;
        i += term.from.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(text[i++]);
  }
  return out;
}

bool ContainsTerm(std::string_view text, const std::string& term) {
  for (std::size_t pos = text.find(term); pos != std::string_view::npos;
       pos = text.find(term, pos + 1)) {
    if (MatchesAt(text, pos, term)) return true;
  }
  return false;
}

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string JoinLines(const std::vector<std::string>& lines, std::size_t begin,
                      std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string FormatRatio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

bool ChainHas(std::span<const TransformKind> chain, TransformKind kind) {
  return std::find(chain.begin(), chain.end(), kind) != chain.end();
}

void CheckStructure(std::string_view variant, std::string_view original,
                    const StructuralContext& ctx, VariantValidation& out) {
  const bool shuffled = ChainHas(ctx.chain, TransformKind::kShuffle);
  const bool substituted = ChainHas(ctx.chain, TransformKind::kSubstitute);
  const bool paraphrased = ChainHas(ctx.chain, TransformKind::kParaphrase);
  auto fail = [&](std::string reason) {
    out.structural_ok = false;
    out.reasons.push_back(std::move(reason));
  };
  if (substituted && !ctx.plan) {
    out.structural_checked = true;
    fail("substitute chain without a plan");
    return;
  }
  if ((shuffled || substituted) && !paraphrased) {
    out.structural_checked = true;
    std::string restored(variant);
    if (substituted) {
      restored = ReplaceTerms(variant, BuildTerms(ctx.plan->Inverse(), {}));
    }
    try {
      PuzzleDocument a = ParsePuzzle(original, ctx.grammar);
      PuzzleDocument b = ParsePuzzle(restored, ctx.grammar);
      if (a.preamble != b.preamble || a.trailer != b.trailer) {
        fail("preamble or trailer changed");
      }
      std::vector<std::string> ta = a.ClueTexts();
      std::vector<std::string> tb = b.ClueTexts();
      if (shuffled) {
        std::sort(ta.begin(), ta.end());
        std::sort(tb.begin(), tb.end());
      }
      if (ta != tb) fail(shuffled ? "clue multiset differs" : "clues differ");
    } catch (const ParseError& e) {
      fail(std::string("unparseable puzzle: ") + e.what());
    }
  }
  if (ctx.original_solution && ctx.variant_solution) {
    out.structural_checked = true;
    nlohmann::json expected = substituted
                                  ? TransformSolution(*ctx.original_solution, *ctx.plan)
                                  : *ctx.original_solution;
    if (expected != *ctx.variant_solution) {
      fail("solution does not map through the plan");
    }
  }
}

}  // namespace

std::string PuzzleDocument::Render() const {
  std::vector<std::string> parts;
  if (preamble) parts.push_back(*preamble);
  for (const Clue& c : clues) {
    parts.push_back(c.indent + std::to_string(c.number) + c.delimiter + c.gap + c.text);
  }
  if (trailer) parts.push_back(*trailer);
  return JoinLines(parts, 0, parts.size());
}

std::vector<std::string> PuzzleDocument::ClueTexts() const {
  std::vector<std::string> texts;
  texts.reserve(clues.size());
  for (const Clue& c : clues) texts.push_back(c.text);
  return texts;
}

namespace {

// Starts with whitespace and has something after it.
bool IsIndentedLine(const std::string& line) {
  return !line.empty() && IsAsciiSpace(line[0]) && !Trim(line).empty();
}

}  // namespace

PuzzleDocument ParsePuzzle(std::string_view text, const ClueGrammar& grammar) {
  std::regex re;
  try {
    re = std::regex(grammar.pattern);
  } catch (const std::regex_error& e) {
    throw ConfigError("bad clue grammar: " + std::string(e.what()));
  }
  if (re.mark_count() != 4) {
    throw ConfigError("clue grammar needs 4 groups (indent, digits, delimiter, gap)");
  }
  const std::vector<std::string> lines = SplitLines(text);
  std::vector<std::size_t> numbered;
  std::vector<std::smatch> found;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::smatch m;
    if (std::regex_search(lines[i], m, re)) {
      numbered.push_back(i);
      found.push_back(m);
    }
  }
  if (numbered.empty()) throw ParseError("no numbered clue list found");

  PuzzleDocument doc;
  std::size_t trailer_start = lines.size();
  if (numbered.front() > 0) doc.preamble = JoinLines(lines, 0, numbered.front());
  for (std::size_t c = 0; c < numbered.size(); ++c) {
    const std::smatch& m = found[c];
    const std::string digits = m.str(2);
    const std::size_t expected = c + 1;
    if (digits != std::to_string(expected)) {
      throw ParseError("clue numbers must run 1..n; line " +
                       std::to_string(numbered[c] + 1) + " has '" + digits + "'");
    }
    Clue clue;
    clue.number = expected;
    clue.indent = m.str(1);
    clue.delimiter = m.str(3);
    clue.gap = m.str(4);
    const std::string& line = lines[numbered[c]];
    clue.text = line.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
    if (m.position(0) != 0) {
      throw ParseError("clue marker must start the line");
    }
    std::size_t end = c + 1 < numbered.size() ? numbered[c + 1] : numbered[c] + 1;
    if (c + 1 == numbered.size()) {
      while (end < lines.size() && IsIndentedLine(lines[end])) ++end;
    }
    for (std::size_t l = numbered[c] + 1; l < end; ++l) {
      clue.text += '\n';
      clue.text += lines[l];
    }
    trailer_start = end;
    doc.clues.push_back(std::move(clue));
  }
  if (trailer_start < lines.size()) {
    doc.trailer = JoinLines(lines, trailer_start, lines.size());
  }
  return doc;
}

PuzzleDocument ShuffleClues(const PuzzleDocument& doc, Rng& rng) {
  PuzzleDocument out = doc;
  std::vector<std::string> texts = doc.ClueTexts();
  std::shuffle(texts.begin(), texts.end(), rng);
  for (std::size_t i = 0; i < out.clues.size(); ++i) {
    out.clues[i].number = i + 1;
    out.clues[i].text = std::move(texts[i]);
  }
  return out;
}

SubstitutionPlan SubstitutionPlan::FromJson(const nlohmann::json& j) {
  const nlohmann::json& inner =
      j.is_object() && j.contains("substitution_plan") ? j.at("substitution_plan") : j;
  if (!inner.is_object()) throw ParseError("substitution plan must be an object");
  SubstitutionPlan plan;
  try {
    for (auto it = inner.begin(); it != inner.end(); ++it) {
      CategoryMapping mapping;
      mapping.category = it.key();
      mapping.new_category = it.value().at("new_category").get<std::string>();
      const nlohmann::json& values = it.value().at("values");
      if (!values.is_object()) throw ParseError("plan values must be an object");
      for (auto v = values.begin(); v != values.end(); ++v) {
        mapping.values.emplace_back(v.key(), v.value().get<std::string>());
      }
      plan.categories.push_back(std::move(mapping));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad substitution plan: ") + e.what());
  }
  return plan;
}

nlohmann::json SubstitutionPlan::ToJson() const {
  nlohmann::json inner = nlohmann::json::object();
  for (const CategoryMapping& c : categories) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [from, to] : c.values) values[from] = to;
    inner[c.category] = {{"new_category", c.new_category}, {"values", values}};
  }
  return {{"substitution_plan", inner}};
}

std::vector<std::pair<std::string, std::string>> SubstitutionPlan::Terms() const {
  std::vector<std::pair<std::string, std::string>> terms;
  for (const CategoryMapping& c : categories) {
    terms.emplace_back(c.category, c.new_category);
    for (const auto& kv : c.values) terms.push_back(kv);
  }
  return terms;
}

SubstitutionPlan SubstitutionPlan::Inverse() const {
  SubstitutionPlan inv;
  for (const CategoryMapping& c : categories) {
    CategoryMapping m;
    m.category = c.new_category;
    m.new_category = c.category;
    for (const auto& [from, to] : c.values) m.values.emplace_back(to, from);
    inv.categories.push_back(std::move(m));
  }
  return inv;
}

void SubstitutionPlan::Validate() const {
  std::set<std::string> olds;
  std::set<std::string> news;
  for (const auto& [from, to] : Terms()) {
    if (from.empty() || to.empty()) throw ConfigError("substitution plan has an empty term");
    if (!olds.insert(from).second) {
      throw ConfigError("substitution plan maps '" + from + "' more than once");
    }
    if (!news.insert(to).second) {
      throw ConfigError("substitution plan is not injective: '" + to +
                        "' is a target twice");
    }
  }
  for (const std::string& to : news) {
    if (olds.count(to) != 0) {
      throw ConfigError("substitution plan reuses original term '" + to + "'");
    }
  }
}

std::string ApplySubstitutionPlan(std::string_view text, const SubstitutionPlan& plan,
                                  const SubstitutionOptions& options) {
  plan.Validate();
  const std::vector<Term> forward = BuildTerms(plan, options);
  const std::vector<Term> backward = BuildTerms(plan.Inverse(), options);
  for (const Term& t : backward) {
    if (ContainsTerm(text, t.from)) {
      throw Error("ambiguous plan: '" + t.from + "' already occurs in the text");
    }
  }
  std::string out = ReplaceTerms(text, forward);
  if (ReplaceTerms(out, backward) != text) {
    throw Error("ambiguous plan: the substitution cannot be inverted on this text");
  }
  return out;
}

nlohmann::json TransformSolution(const nlohmann::json& solution,
                                 const SubstitutionPlan& plan) {
  std::unordered_map<std::string, std::string> map;
  for (auto& [from, to] : plan.Terms()) map.emplace(from, to);
  auto lookup = [&](const std::string& s) {
    auto it = map.find(s);
    return it == map.end() ? s : it->second;
  };
  auto walk = [&](auto&& self, const nlohmann::json& node) -> nlohmann::json {
    if (node.is_object()) {
      nlohmann::json out = nlohmann::json::object();
      for (auto it = node.begin(); it != node.end(); ++it) {
        out[lookup(it.key())] = self(self, it.value());
      }
      return out;
    }
    if (node.is_array()) {
      nlohmann::json out = nlohmann::json::array();
      for (const nlohmann::json& v : node) out.push_back(self(self, v));
      return out;
    }
    if (node.is_string()) return lookup(node.get<std::string>());
    return node;
  };
  return walk(walk, solution);
}

std::string_view TransformKindName(TransformKind kind) {
  switch (kind) {
    case TransformKind::kShuffle: return "shuffle";
    case TransformKind::kSubstitute: return "substitute";
    case TransformKind::kParaphrase: return "paraphrase";
  }
  return "shuffle";
}

TransformKind ParseTransformKind(std::string_view name) {
  if (name == "shuffle") return TransformKind::kShuffle;
  if (name == "substitute") return TransformKind::kSubstitute;
  if (name == "paraphrase") return TransformKind::kParaphrase;
  throw ConfigError("unknown transform '" + std::string(name) + "'");
}

void ValidateChain(std::span<const TransformKind> chain) {
  if (chain.empty()) throw ConfigError("empty transform chain");
  std::set<TransformKind> kinds(chain.begin(), chain.end());
  if (kinds.size() != chain.size()) {
    throw ConfigError("transform chain repeats a transform");
  }
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain[i] == TransformKind::kShuffle && i != 0) {
      throw ConfigError("shuffle must come first in a transform chain");
    }
    if (chain[i] == TransformKind::kParaphrase && i + 1 != chain.size()) {
      throw ConfigError("paraphrase must come last in a transform chain");
    }
  }
}

std::vector<TransformKind> ParseChain(std::string_view text) {
  std::vector<TransformKind> chain;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view part = Trim(text.substr(start, comma - start));
    if (!part.empty()) chain.push_back(ParseTransformKind(part));
    start = comma + 1;
  }
  ValidateChain(chain);
  return chain;
}

TransformPrompt ParseTransformPrompt(std::string_view name) {
  if (name == "paraphrase") return TransformPrompt::kPuzzleParaphrase;
  if (name == "code-paraphrase") return TransformPrompt::kCodeParaphrase;
  if (name == "substitution-plan") return TransformPrompt::kSubstitutionPlan;
  if (name == "substitution-apply") return TransformPrompt::kSubstitutionApply;
  throw ConfigError("unknown prompt kind '" + std::string(name) + "'");
}

nlohmann::json BuildTransformPrompt(std::string_view item_text, TransformPrompt kind,
                                    const std::optional<nlohmann::json>& solution_json,
                                    const std::optional<nlohmann::json>& plan_json) {
  if (Trim(item_text).empty()) throw ConfigError("empty item text");
  const std::string text(item_text);
  nlohmann::json doc;
  switch (kind) {
    case TransformPrompt::kPuzzleParaphrase:
      doc["kind"] = "paraphrase";
      doc["system"] = prompts::kZebraParaphraseSystem;
      doc["prompt"] = SubstituteSlots(prompts::kZebraParaphraseUser, {{"puzzle", text}});
      doc["parameters"] = {{"response_format", "text"}};
      break;
    case TransformPrompt::kCodeParaphrase:
      doc["kind"] = "code-paraphrase";
      doc["system"] = "";
      doc["prompt"] = SubstituteSlots(prompts::kMbppParaphraseTemplate, {{"text", text}});
      doc["parameters"] = {{"response_format", "json"}};
      break;
    case TransformPrompt::kSubstitutionPlan:
      if (!solution_json) throw ConfigError("substitution-plan prompt needs a solution");
      doc["kind"] = "substitution-plan";
      doc["system"] = prompts::kSubstitutionPlanSystem;
      doc["prompt"] = SubstituteSlots(
          prompts::kSubstitutionPlanUser,
          {{"puzzle", text}, {"solution_json", solution_json->dump(2)}});
      doc["parameters"] = {{"response_format", "json"}};
      break;
    case TransformPrompt::kSubstitutionApply:
      if (!plan_json) throw ConfigError("substitution-apply prompt needs a plan");
      doc["kind"] = "substitution-apply";
      doc["system"] = prompts::kSubstitutionApplySystem;
      doc["prompt"] = SubstituteSlots(prompts::kSubstitutionApplyUser,
                                      {{"plan_json", plan_json->dump(2)}, {"puzzle", text}});
      doc["parameters"] = {{"response_format", "text"}};
      break;
  }
  return doc;
}

VariantValidation ValidateVariant(std::string_view variant, std::string_view original,
                                  std::span<const std::string> siblings,
                                  double max_gestalt,
                                  const std::optional<StructuralContext>& structure) {
  if (!(max_gestalt > 0.0 && max_gestalt <= 1.0)) {
    throw ConfigError("max_gestalt must be in (0, 1]");
  }
  VariantValidation out;
  out.metrics = ComputeMetrics(original, variant);
  out.metrics.gestalt = GestaltRatio(variant, original);
  bool similar = false;
  if (out.metrics.gestalt >= max_gestalt) {
    similar = true;
    out.reasons.push_back("gestalt " + FormatRatio(out.metrics.gestalt) +
                          " versus original");
  }
  for (std::size_t i = 0; i < siblings.size(); ++i) {
    const double g = GestaltRatio(variant, siblings[i]);
    out.max_sibling_gestalt = std::max(out.max_sibling_gestalt, g);
    if (g >= max_gestalt) {
      similar = true;
      out.reasons.push_back("gestalt " + FormatRatio(g) + " versus sibling " +
                            std::to_string(i));
    }
  }
  if (structure) {
    ValidateChain(structure->chain);
    CheckStructure(variant, original, *structure, out);
  }
  out.accepted = !similar && out.structural_ok;
  return out;
}

nlohmann::json MetricVectorToJson(const MetricVector& m) {
  return {{"ngram2", m.ngram2},       {"ngram3", m.ngram3},
          {"rouge_l_f", m.rouge_l_f}, {"jaccard", m.jaccard},
          {"gestalt", m.gestalt},     {"exact", m.exact}};
}

nlohmann::json DuplicateVariant::ToJson() const {
  nlohmann::json chain_json = nlohmann::json::array();
  for (TransformKind k : chain) chain_json.push_back(TransformKindName(k));
  nlohmann::json metrics = MetricVectorToJson(validation.metrics);
  metrics["max_sibling_gestalt"] = validation.max_sibling_gestalt;
  nlohmann::json j = {{"original_id", original_id},
                      {"chain", chain_json},
                      {"text", text},
                      {"metrics", metrics},
                      {"accepted", validation.accepted},
                      {"reasons", validation.reasons}};
  if (validation.structural_checked) j["structural_ok"] = validation.structural_ok;
  return j;
}

std::vector<DuplicateVariant> ShuffleVariants(const std::string& original_id,
                                              std::string_view text, std::size_t count,
                                              Rng& rng, double max_gestalt,
                                              const ClueGrammar& grammar) {
  const PuzzleDocument doc = ParsePuzzle(text, grammar);
  StructuralContext ctx;
  ctx.chain = {TransformKind::kShuffle};
  ctx.grammar = grammar;
  std::vector<DuplicateVariant> variants;
  std::vector<std::string> accepted;
  for (std::size_t i = 0; i < count; ++i) {
    DuplicateVariant v;
    v.original_id = original_id;
    v.chain = ctx.chain;
    v.text = ShuffleClues(doc, rng).Render();
    v.validation = ValidateVariant(v.text, text, accepted, max_gestalt, ctx);
    if (v.validation.accepted) accepted.push_back(v.text);
    variants.push_back(std::move(v));
  }
  return variants;
}

bool RunExternalCheck(const std::string& command, std::string_view text) {
  static std::atomic<unsigned> counter{0};
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() /
      ("dupaudit-check-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter.fetch_add(1)) + ".txt");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
  }
  const int status = std::system((command + " '" + path.string() + "'").c_str());
  std::filesystem::remove(path);
  return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

}  // namespace dupaudit
