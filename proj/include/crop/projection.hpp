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

// Cross-lingual entity projection. A raw target sentence is translated into
// the source language, tagged there, translated back with its entities
// bracketed by boundary symbols, and the recovered entities are matched word
// by word against the raw sentence. Labels always land on the original raw
// tokens.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "crop/align_builder.hpp"
#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/labeled_seq.hpp"
#include "crop/postprocess.hpp"

namespace crop {

enum class DiscardKind {
  kDecodeFailure,
  kUnmatchedEntity,
  kOverlapConflict,
  kLanguageMismatch,
  kTooLong,
  kAllO,
  kTooManyEntities,
  kTranslationFailure,
};

inline constexpr DiscardKind kAllDiscardKinds[] = {
    DiscardKind::kDecodeFailure,   DiscardKind::kUnmatchedEntity, DiscardKind::kOverlapConflict,
    DiscardKind::kLanguageMismatch, DiscardKind::kTooLong,        DiscardKind::kAllO,
    DiscardKind::kTooManyEntities, DiscardKind::kTranslationFailure,
};

inline const char* discard_kind_name(DiscardKind kind) {
  switch (kind) {
    case DiscardKind::kDecodeFailure: return "DecodeFailure";
    case DiscardKind::kUnmatchedEntity: return "UnmatchedEntity";
    case DiscardKind::kOverlapConflict: return "OverlapConflict";
    case DiscardKind::kLanguageMismatch: return "LanguageMismatch";
    case DiscardKind::kTooLong: return "TooLong";
    case DiscardKind::kAllO: return "AllO";
    case DiscardKind::kTooManyEntities: return "TooManyEntities";
    case DiscardKind::kTranslationFailure: return "TranslationFailure";
  }
  return "Unknown";
}

struct DiscardReason {
  DiscardKind kind;
  int slot = -1;
  std::string detail;

  std::string describe() const {
    std::string out = discard_kind_name(kind);
    if (slot >= 0) out += "(" + std::to_string(slot) + ")";
    if (!detail.empty()) out += ": " + detail;
    return out;
  }
  bool operator==(const DiscardReason&) const = default;
};

struct MatchPolicy {
  bool case_sensitive = true;
};

// All occurrences of `entity_tokens` as a contiguous run of `raw_tokens`,
// leftmost first and non-overlapping.
inline std::vector<TokenRange> match_entity(const Tokens& entity_tokens, const Tokens& raw_tokens,
                                            const MatchPolicy& policy = {}) {
  std::vector<TokenRange> out;
  const size_t n = entity_tokens.size();
  if (n == 0 || n > raw_tokens.size()) return out;
  auto eq = [&](const std::string& a, const std::string& b) {
    return policy.case_sensitive ? a == b : fold_case(a) == fold_case(b);
  };
  size_t i = 0;
  while (i + n <= raw_tokens.size()) {
    bool hit = true;
    for (size_t k = 0; k < n && hit; ++k) hit = eq(entity_tokens[k], raw_tokens[i + k]);
    if (hit) {
      out.push_back({static_cast<int>(i), static_cast<int>(i + n)});
      i += n;
    } else {
      ++i;
    }
  }
  return out;
}

// Projects the entities of the back-translated sentence onto `raw_tokens`.
// Longer entities claim tokens first; every occurrence of an entity gets its
// type. An unmatched entity or two entities claiming the same token discard
// the sentence. No entities yields an all-O sentence.
inline Expected<TaggedSentence, DiscardReason> project(const TaggedSentence& back_translated, const Tokens& raw_tokens,
                                                       const MatchPolicy& policy = {},
                                                       const std::string& language = "") {
  struct Entity {
    Tokens tokens;
    std::string type;
    std::string key;
  };
  std::vector<Entity> entities;
  for (const auto& span : spans_from_tags(back_translated.tags)) {
    Entity e;
    e.tokens.assign(back_translated.tokens.begin() + span.start, back_translated.tokens.begin() + span.end);
    e.type = span.etype;
    for (const auto& t : e.tokens) e.key += (policy.case_sensitive ? t : fold_case(t)) + '\x1f';
    auto same = std::find_if(entities.begin(), entities.end(), [&](const Entity& o) { return o.key == e.key; });
    if (same == entities.end()) {
      entities.push_back(std::move(e));
    } else if (same->type != e.type) {
      return DiscardReason{DiscardKind::kOverlapConflict, -1, "'" + join(e.tokens, " ") + "' typed both " +
                                                                  same->type + " and " + e.type};
    }
  }
  std::stable_sort(entities.begin(), entities.end(),
                   [](const Entity& a, const Entity& b) { return a.tokens.size() > b.tokens.size(); });

  std::vector<EntitySpan> claimed;
  std::vector<bool> taken(raw_tokens.size(), false);
  for (const auto& e : entities) {
    const auto matches = match_entity(e.tokens, raw_tokens, policy);
    if (matches.empty()) return DiscardReason{DiscardKind::kUnmatchedEntity, -1, join(e.tokens, " ")};
    for (const auto& m : matches) {
      for (int i = m.start; i < m.end; ++i) {
        if (taken[i]) return DiscardReason{DiscardKind::kOverlapConflict, -1, join(e.tokens, " ")};
      }
      for (int i = m.start; i < m.end; ++i) taken[i] = true;
      claimed.push_back({m.start, m.end, e.type});
    }
  }
  return TaggedSentence{raw_tokens, tags_from_spans(std::move(claimed), raw_tokens.size()), language};
}

// Translates raw target sentences into the source language, order preserved.
inline std::vector<TranslationResult> forward_translate(const Corpus& raw_corpus, TranslatorBackend& translator,
                                                        const std::string& source_language) {
  std::vector<Tokens> batch;
  batch.reserve(raw_corpus.size());
  for (const auto& s : raw_corpus.sentences) batch.push_back(s.tokens);
  if (batch.empty()) return {};
  auto out = translator.translate(batch, raw_corpus.language, source_language);
  if (out.size() != batch.size()) {
    throw Error(ErrorCode::kBackendContractViolation, "forward translation returned wrong batch size");
  }
  return out;
}

struct BackTranslationError {
  enum class Kind { kTooManySlots, kContractViolation, kRecordError, kDecode };
  Kind kind;
  int slot = -1;
  std::string message;

  DiscardReason as_discard() const {
    switch (kind) {
      case Kind::kTooManySlots: return {DiscardKind::kTooManyEntities, -1, message};
      case Kind::kRecordError: return {DiscardKind::kTranslationFailure, -1, message};
      case Kind::kContractViolation:
      case Kind::kDecode: return {DiscardKind::kDecodeFailure, slot, message};
    }
    return {DiscardKind::kDecodeFailure, slot, message};
  }
};

// encode -> translate -> symbol conservation -> decode, for a batch of
// tagged source sentences.
inline std::vector<Expected<TaggedSentence, BackTranslationError>> back_translate_labeled(
    const std::vector<TaggedSentence>& tagged_source, TranslatorBackend& translator, const BoundarySymbolTable& table,
    const std::string& src_lang, const std::string& tgt_lang) {
  using Result = Expected<TaggedSentence, BackTranslationError>;
  std::vector<std::optional<Result>> out(tagged_source.size());
  std::vector<LabeledSequence> encoded;
  std::vector<size_t> encoded_index;
  for (size_t i = 0; i < tagged_source.size(); ++i) {
    const auto spans = spans_from_tags(tagged_source[i].tags);
    if (static_cast<int>(spans.size()) > table.max_slots()) {
      out[i] = Result(BackTranslationError{BackTranslationError::Kind::kTooManySlots, -1,
                                           std::to_string(spans.size()) + " entities"});
      continue;
    }
    encoded.push_back(encode(tagged_source[i], table));
    encoded_index.push_back(i);
  }
  std::vector<Tokens> batch;
  batch.reserve(encoded.size());
  for (const auto& e : encoded) batch.push_back(e.tokens);
  const auto translated = translate_conserving(translator, batch, src_lang, tgt_lang, table);
  for (size_t k = 0; k < encoded.size(); ++k) {
    const size_t i = encoded_index[k];
    const auto& t = translated[k];
    if (!t) {
      const auto& fault = t.error();
      const auto kind = fault.kind == TranslationFault::Kind::kSymbolCountChanged
                            ? BackTranslationError::Kind::kContractViolation
                            : BackTranslationError::Kind::kRecordError;
      out[i] = Result(BackTranslationError{kind, fault.slot, fault.message});
      continue;
    }
    auto decoded = decode(t.value(), encoded[k].slot_types, table, tgt_lang);
    if (!decoded) {
      out[i] = Result(BackTranslationError{BackTranslationError::Kind::kDecode, decoded.error().slot,
                                           decoded.error().describe()});
    } else {
      out[i] = Result(std::move(decoded).value());
    }
  }
  std::vector<Result> results;
  results.reserve(out.size());
  for (auto& r : out) results.push_back(std::move(*r));
  return results;
}

struct ProjectionRecord {
  size_t index = 0;  // position in the raw corpus
  TaggedSentence raw;
  Tokens fwd;
  std::optional<TaggedSentence> fwd_tagged;
  std::optional<TaggedSentence> bt;
  std::optional<DiscardReason> discard;
  std::optional<TaggedSentence> projected;
  std::vector<std::string> provenance;

  bool kept() const { return projected.has_value(); }
};

struct ProjectionStats {
  std::string language;
  size_t raw = 0;
  size_t kept = 0;
  std::map<DiscardKind, size_t> discarded;

  double kept_ratio() const { return raw == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(raw); }

  // Line-oriented key=value report.
  std::string to_kv() const {
    std::string out = "language=" + language + "\n";
    out += "raw=" + std::to_string(raw) + "\n";
    out += "kept=" + std::to_string(kept) + "\n";
    for (DiscardKind k : kAllDiscardKinds) {
      auto it = discarded.find(k);
      out += std::string("discard.") + discard_kind_name(k) + "=" +
             std::to_string(it == discarded.end() ? 0 : it->second) + "\n";
    }
    out += "kept_ratio=" + format_fixed(kept_ratio()) + "\n";
    return out;
  }
};

struct PseudoLabeledCorpus {
  std::string language;
  std::vector<ProjectionRecord> records;

  Corpus kept() const {
    Corpus c;
    c.language = language;
    c.labeled = true;
    for (const auto& r : records) {
      if (r.projected) c.sentences.push_back(*r.projected);
    }
    return c;
  }

  std::vector<size_t> kept_indices() const {
    std::vector<size_t> out;
    for (const auto& r : records) {
      if (r.projected) out.push_back(r.index);
    }
    return out;
  }

  // Raw sentences whose projection was discarded.
  Corpus discarded_raw() const {
    Corpus c;
    c.language = language;
    c.labeled = false;
    for (const auto& r : records) {
      if (!r.projected) c.sentences.push_back(r.raw);
    }
    return c;
  }

  ProjectionStats stats() const {
    ProjectionStats s;
    s.language = language;
    s.raw = records.size();
    for (const auto& r : records) {
      if (r.projected) {
        ++s.kept;
      } else if (r.discard) {
        ++s.discarded[r.discard->kind];
      }
    }
    return s;
  }

  // One line per raw sentence: index, status, reason, provenance.
  std::string provenance_tsv() const {
    std::string out;
    for (const auto& r : records) {
      out += std::to_string(r.index);
      out += r.projected ? "\tkept\t-" : "\tdiscarded\t" + (r.discard ? r.discard->describe() : std::string("?"));
      out += "\t" + join(r.provenance, ";") + "\n";
    }
    return out;
  }
};

// Reads the kept indices back from provenance_tsv() output.
inline std::vector<size_t> parse_kept_indices(std::string_view provenance) {
  std::vector<size_t> out;
  const auto lines = split_lines(provenance);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const auto cols = split_char(lines[n], '\t');
    long long idx = 0;
    if (cols.size() < 2 || !parse_nonnegative_int(cols[0], idx)) {
      throw Error(ErrorCode::kMalformedLine, "provenance line " + std::to_string(n + 1));
    }
    if (cols[1] == "kept") out.push_back(static_cast<size_t>(idx));
  }
  return out;
}

struct ProjectionConfig {
  std::string source_language = "en";
  BoundarySymbolTable table;
  MatchPolicy match;
  size_t max_words = kDefaultMaxWords;
  std::shared_ptr<const LanguageVerifier> verifier;  // null: no language check
  size_t batch_size = 64;
  int jobs = 1;
  // Rewrite orphan I- tags from the source tagger instead of failing.
  bool repair_tags = true;
};

namespace detail {

inline void project_batch(std::span<ProjectionRecord> records, const std::string& tgt_lang,
                          TranslatorBackend& translator, TaggerBackend& tagger, const ProjectionConfig& cfg) {
  std::vector<ProjectionRecord*> live;
  for (auto& r : records) {
    if (r.raw.tokens.size() > cfg.max_words) {
      r.discard = DiscardReason{DiscardKind::kTooLong, -1, std::to_string(r.raw.tokens.size()) + " words"};
      r.provenance.push_back("length:too-long");
    } else {
      live.push_back(&r);
    }
  }
  if (live.empty()) return;

  // Forward translation into the source language.
  std::vector<Tokens> raw_batch;
  for (auto* r : live) raw_batch.push_back(r->raw.tokens);
  const auto fwd = translator.translate(raw_batch, tgt_lang, cfg.source_language);
  if (fwd.size() != raw_batch.size()) {
    throw Error(ErrorCode::kBackendContractViolation, "forward translation returned wrong batch size");
  }
  std::vector<ProjectionRecord*> translated;
  for (size_t i = 0; i < live.size(); ++i) {
    if (!fwd[i] || fwd[i].value().empty()) {
      live[i]->discard =
          DiscardReason{DiscardKind::kTranslationFailure, -1, fwd[i] ? "empty translation" : fwd[i].error().message};
      live[i]->provenance.push_back("fwd:failed");
      continue;
    }
    live[i]->fwd = fwd[i].value();
    live[i]->provenance.push_back("fwd:ok");
    translated.push_back(live[i]);
  }
  if (translated.empty()) return;

  // Tag in the source language.
  std::vector<Tokens> src_batch;
  for (auto* r : translated) src_batch.push_back(r->fwd);
  std::vector<bool> repaired;
  const auto tags = tag_checked(tagger, src_batch, cfg.repair_tags, &repaired);
  std::vector<TaggedSentence> tagged;
  for (size_t i = 0; i < translated.size(); ++i) {
    translated[i]->fwd_tagged = TaggedSentence{translated[i]->fwd, tags[i], cfg.source_language};
    translated[i]->provenance.push_back(repaired[i] ? "tag:repaired" : "tag:ok");
    tagged.push_back(*translated[i]->fwd_tagged);
  }

  // Labeled back-translation, language check, entity matching.
  const auto bt = back_translate_labeled(tagged, translator, cfg.table, cfg.source_language, tgt_lang);
  for (size_t i = 0; i < translated.size(); ++i) {
    auto* r = translated[i];
    if (!bt[i]) {
      r->discard = bt[i].error().as_discard();
      r->provenance.push_back("bt:" + r->discard->describe());
      continue;
    }
    r->bt = bt[i].value();
    r->provenance.push_back("bt:ok");
    if (cfg.verifier && !cfg.verifier->accept(r->bt->tokens, tgt_lang)) {
      r->discard = DiscardReason{DiscardKind::kLanguageMismatch, -1, "expected " + tgt_lang};
      r->provenance.push_back("lang:mismatch");
      continue;
    }
    auto projected = project(*r->bt, r->raw.tokens, cfg.match, tgt_lang);
    if (!projected) {
      r->discard = projected.error();
      r->provenance.push_back("match:" + r->discard->describe());
      continue;
    }
    if (is_all_o(projected.value())) {
      r->discard = DiscardReason{DiscardKind::kAllO, -1, ""};
      r->provenance.push_back("match:all-o");
      continue;
    }
    r->projected = std::move(projected).value();
    r->provenance.push_back("match:ok");
  }
}

}  // namespace detail

// Projects one raw target-language corpus. Per-sentence failures become
// discard records; only backend failures abort.
inline PseudoLabeledCorpus project_corpus(const Corpus& raw, TranslatorBackend& translator, TaggerBackend& tagger,
                                          const ProjectionConfig& cfg) {
  PseudoLabeledCorpus out;
  out.language = raw.language;
  out.records.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    out.records[i].index = i;
    out.records[i].raw = raw.sentences[i];
    out.records[i].raw.language = raw.language;
  }
  const size_t batch = std::max<size_t>(1, cfg.batch_size);
  const size_t batches = (raw.size() + batch - 1) / batch;
  auto run = [&](size_t b) {
    const size_t begin = b * batch;
    const size_t end = std::min(raw.size(), begin + batch);
    detail::project_batch(std::span(out.records).subspan(begin, end - begin), raw.language, translator, tagger, cfg);
  };
  int jobs = std::max(1, cfg.jobs);
  if (translator.single_flight() || tagger.single_flight()) jobs = 1;
  if (jobs == 1 || batches <= 1) {
    for (size_t b = 0; b < batches; ++b) run(b);
    return out;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (int w = 0; w < std::min<int>(jobs, static_cast<int>(batches)); ++w) {
    workers.emplace_back([&]() {
      for (size_t b; (b = next.fetch_add(1)) < batches;) {
        try {
          run(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = batches;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Projects every raw corpus, keyed by target language.
inline std::map<std::string, PseudoLabeledCorpus> run_projection(const std::map<std::string, Corpus>& raw_corpora,
                                                                  TranslatorBackend& translator,
                                                                  TaggerBackend& source_tagger,
                                                                  const ProjectionConfig& cfg) {
  std::map<std::string, PseudoLabeledCorpus> out;
  for (const auto& [lang, corpus] : raw_corpora) {
    Corpus c = corpus;
    c.language = lang;
    out.emplace(lang, project_corpus(c, translator, source_tagger, cfg));
  }
  return out;
}

}  // namespace crop
