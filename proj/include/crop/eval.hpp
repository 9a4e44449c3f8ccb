// Copyright 2026 The crop Authors.
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

// Entity-level evaluation with exact-match (conlleval) semantics, boundary
// precision of labeled translation, and projection quality.

#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/labeled_seq.hpp"
#include "crop/projection.hpp"

namespace crop {

struct EntityCounts {
  size_t gold = 0;
  size_t predicted = 0;
  size_t correct = 0;

  double precision() const { return predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted; }
  double recall() const { return gold == 0 ? 0.0 : static_cast<double>(correct) / gold; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
  }
  // F1 is ill-defined with neither gold nor predicted entities.
  bool defined() const { return gold + predicted > 0; }
  std::optional<double> f1_if_defined() const {
    return defined() ? std::optional<double>(f1()) : std::nullopt;
  }

  EntityCounts& operator+=(const EntityCounts& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
};

struct SentenceConfusion {
  std::vector<EntitySpan> gold;
  std::vector<EntitySpan> predicted;
};

struct EvalReport {
  EntityCounts overall;
  std::map<std::string, EntityCounts> per_type;
  // Per-sentence entity lists the counts were computed from.
  std::vector<SentenceConfusion> confusion;

  std::string to_kv(const std::string& prefix = "") const {
    std::string out;
    auto emit = [&](const std::string& key, const EntityCounts& c) {
      out += prefix + key + ".gold=" + std::to_string(c.gold) + "\n";
      out += prefix + key + ".predicted=" + std::to_string(c.predicted) + "\n";
      out += prefix + key + ".correct=" + std::to_string(c.correct) + "\n";
      out += prefix + key + ".precision=" + format_fixed(c.precision()) + "\n";
      out += prefix + key + ".recall=" + format_fixed(c.recall()) + "\n";
      out += prefix + key + ".f1=" + (c.defined() ? format_fixed(c.f1()) : std::string("N/A")) + "\n";
    };
    emit("overall", overall);
    for (const auto& [type, c] : per_type) emit("type." + type, c);
    return out;
  }

  std::string to_table() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %9s %9s %9s\n", "type", "gold", "pred", "correct",
                  "precision", "recall", "f1");
    out += line;
    auto row = [&](const std::string& name, const EntityCounts& c) {
      const std::string f1 = c.defined() ? format_fixed(100 * c.f1(), 2) : "N/A";
      std::snprintf(line, sizeof(line), "%-10s %8zu %8zu %8zu %9.2f %9.2f %9s\n", name.c_str(), c.gold, c.predicted,
                    c.correct, 100 * c.precision(), 100 * c.recall(), f1.c_str());
      out += line;
    };
    for (const auto& [type, c] : per_type) row(type, c);
    row("overall", overall);
    return out;
  }
};

// An entity is correct iff its span and type both match a gold entity.
inline EvalReport evaluate(const Corpus& pred, const Corpus& gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorCode::kCorpusMismatch, std::to_string(pred.size()) + " predicted sentences vs " +
                                                std::to_string(gold.size()) + " gold");
  }
  EvalReport report;
  report.confusion.reserve(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto& p = pred.sentences[i];
    const auto& g = gold.sentences[i];
    if (p.tokens.size() != g.tokens.size() || p.tags.size() != p.tokens.size() || g.tags.size() != g.tokens.size()) {
      throw Error(ErrorCode::kCorpusMismatch, "sentence " + std::to_string(i) + " differs in length");
    }
    SentenceConfusion sc{spans_from_tags(g.tags), spans_from_tags(p.tags)};
    const std::set<EntitySpan> gold_set(sc.gold.begin(), sc.gold.end());
    for (const auto& e : sc.gold) {
      ++report.overall.gold;
      ++report.per_type[e.etype].gold;
    }
    for (const auto& e : sc.predicted) {
      ++report.overall.predicted;
      ++report.per_type[e.etype].predicted;
      if (gold_set.count(e)) {
        ++report.overall.correct;
        ++report.per_type[e.etype].correct;
      }
    }
    report.confusion.push_back(std::move(sc));
  }
  return report;
}

// Recomputes the counts from the confusion lists alone.
inline EntityCounts recount(const std::vector<SentenceConfusion>& confusion) {
  EntityCounts c;
  for (const auto& sc : confusion) {
    c.gold += sc.gold.size();
    c.predicted += sc.predicted.size();
    for (const auto& e : sc.predicted) {
      if (std::find(sc.gold.begin(), sc.gold.end(), e) != sc.gold.end()) ++c.correct;
    }
  }
  return c;
}

// "token<TAB>gold<TAB>pred" lines, blank line between sentences.
inline std::string write_confusion_conll(const Corpus& pred, const Corpus& gold) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::kCorpusMismatch, "sentence counts differ");
  std::string out;
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold.sentences[i];
    const auto& p = pred.sentences[i];
    if (p.tags.size() != g.tags.size()) throw Error(ErrorCode::kCorpusMismatch, "sentence lengths differ");
    for (size_t k = 0; k < g.tokens.size(); ++k) out += g.tokens[k] + "\t" + g.tags[k] + "\t" + p.tags[k] + "\n";
    out += "\n";
  }
  return out;
}

struct AverageReport {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<std::string> included;  // languages with a defined F1
  std::vector<std::string> excluded;
};

// Unweighted mean of per-language F1; languages whose F1 is N/A are left
// out. Micro F1 pools the counts of the included languages.
inline AverageReport average_report(const std::map<std::string, EvalReport>& per_language) {
  if (per_language.empty()) throw Error(ErrorCode::kEmptyInput, "no per-language reports to average");
  AverageReport out;
  EntityCounts pooled;
  double sum = 0;
  for (const auto& [lang, report] : per_language) {
    if (!report.overall.defined()) {
      out.excluded.push_back(lang);
      continue;
    }
    out.included.push_back(lang);
    sum += report.overall.f1();
    pooled += report.overall;
  }
  if (out.included.empty()) throw Error(ErrorCode::kEmptyInput, "no language has a defined F1");
  out.macro_f1 = sum / static_cast<double>(out.included.size());
  out.micro_f1 = pooled.f1();
  return out;
}

// Decides whether a bracketed target phrase translates a source phrase.
using EquivalenceOracle = std::function<bool(const Tokens& src_span, const Tokens& tgt_span)>;

// Equivalent when the target phrase is the word-by-word lexicon image of the
// source phrase.
inline EquivalenceOracle lexicon_oracle(Lexicon lexicon) {
  return [lex = std::move(lexicon)](const Tokens& src, const Tokens& tgt) {
    if (src.size() != tgt.size()) return false;
    for (size_t i = 0; i < src.size(); ++i) {
      auto it = lex.find(src[i]);
      if (it == lex.end() || it->second != tgt[i]) return false;
    }
    return true;
  };
}

// Judgment file: "source phrase<TAB>target phrase<TAB>1|0" per line.
inline EquivalenceOracle judgment_oracle(std::string_view text) {
  std::map<std::pair<std::string, std::string>, bool> judgments;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const auto cols = split_char(lines[n], '\t');
    if (cols.size() != 3 || (cols[2] != "1" && cols[2] != "0")) {
      throw Error(ErrorCode::kMalformedLine, "judgment line " + std::to_string(n + 1));
    }
    judgments[{join(split_ws(cols[0]), " "), join(split_ws(cols[1]), " ")}] = cols[2] == "1";
  }
  return [j = std::move(judgments)](const Tokens& src, const Tokens& tgt) {
    auto it = j.find({join(src, " "), join(tgt, " ")});
    return it != j.end() && it->second;
  };
}

struct LabeledTranslationPair {
  LabeledSequence source;
  Tokens target;  // raw translator output, possibly malformed
};

// Whether every slot of `source` decodes in `target` and brackets an
// oracle-equivalent phrase on both sides.
inline bool boundary_correct(const LabeledTranslationPair& pair, const BoundarySymbolTable& table,
                             const EquivalenceOracle& oracle) {
  auto src_regions = locate_slots(pair.source.tokens, pair.source.slot_types, table);
  auto tgt_regions = locate_slots(pair.target, pair.source.slot_types, table);
  if (!src_regions || !tgt_regions) return false;
  auto contents = [&](const Tokens& tokens, const SlotRegion& r) {
    Tokens out;
    for (size_t i = r.open + 1; i < r.close; ++i) out.push_back(tokens[i]);
    return out;
  };
  std::map<int, Tokens> src_spans;
  for (const auto& r : src_regions.value()) src_spans[r.slot] = contents(pair.source.tokens, r);
  for (const auto& r : tgt_regions.value()) {
    if (!oracle(src_spans.at(r.slot), contents(pair.target, r))) return false;
  }
  return true;
}

inline double boundary_precision(const std::vector<LabeledTranslationPair>& pairs, const EquivalenceOracle& oracle,
                                 const BoundarySymbolTable& table = BoundarySymbolTable()) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no labeled translation pairs");
  size_t good = 0;
  for (const auto& p : pairs) {
    if (boundary_correct(p, table, oracle)) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(pairs.size());
}

struct ProjectionQuality {
  std::string language;
  std::optional<double> f1;  // nullopt when nothing was kept
  double kept_ratio = 0.0;
  size_t kept = 0;
  size_t raw = 0;
  std::optional<EvalReport> report;

  std::string to_kv() const {
    std::string out = "language=" + language + "\n";
    out += "raw=" + std::to_string(raw) + "\n";
    out += "kept=" + std::to_string(kept) + "\n";
    out += "kept_ratio=" + format_fixed(kept_ratio) + "\n";
    out += "projection_f1=" + (f1 ? format_fixed(*f1) : std::string("N/A")) + "\n";
    return out;
  }
};

// evaluate() over the kept sentences against their gold counterparts.
inline ProjectionQuality projection_quality(const Corpus& kept, const std::vector<size_t>& kept_indices,
                                            const Corpus& gold) {
  if (kept.size() != kept_indices.size()) {
    throw Error(ErrorCode::kCorpusMismatch, "kept sentences and indices differ in number");
  }
  ProjectionQuality q;
  q.language = gold.language;
  q.raw = gold.size();
  q.kept = kept.size();
  q.kept_ratio = gold.size() == 0 ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(gold.size());
  if (kept.size() == 0) return q;
  Corpus gold_kept;
  gold_kept.language = gold.language;
  for (size_t idx : kept_indices) {
    if (idx >= gold.size()) throw Error(ErrorCode::kCorpusMismatch, "kept index " + std::to_string(idx) + " beyond gold");
    gold_kept.sentences.push_back(gold.sentences[idx]);
  }
  q.report = evaluate(kept, gold_kept);
  q.f1 = q.report->overall.f1_if_defined();
  return q;
}

inline ProjectionQuality projection_quality(const PseudoLabeledCorpus& pseudo, const Corpus& gold) {
  if (pseudo.records.size() != gold.size()) {
    throw Error(ErrorCode::kCorpusMismatch, "pseudo corpus covers " + std::to_string(pseudo.records.size()) +
                                                " sentences, gold has " + std::to_string(gold.size()));
  }
  return projection_quality(pseudo.kept(), pseudo.kept_indices(), gold);
}

}  // namespace crop
