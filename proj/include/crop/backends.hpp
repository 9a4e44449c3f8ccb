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

// Translator and tagger backend contracts plus the deterministic built-in
// backends used for desk-scale runs.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/labeled_seq.hpp"

namespace crop {

// Per-record translation failure. Batch-level failures are exceptions.
struct TranslationFault {
  enum class Kind { kRecordError, kSymbolCountChanged };
  Kind kind = Kind::kRecordError;
  int slot = -1;
  std::string message;

  bool operator==(const TranslationFault&) const = default;
};

using TranslationResult = Expected<Tokens, TranslationFault>;

class TranslatorBackend {
 public:
  virtual ~TranslatorBackend() = default;

  // One result per input sequence, in order. Boundary symbols are opaque and
  // their counts must be preserved.
  virtual std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string& src_lang,
                                                   const std::string& tgt_lang) = 0;

  // Single-flight backends must not receive concurrent calls.
  virtual bool single_flight() const { return false; }
};

struct WeightedCorpus {
  Corpus corpus;
  double weight = 1.0;
};

class TaggerBackend {
 public:
  virtual ~TaggerBackend() = default;

  virtual const TagScheme& scheme() const = 0;

  // One tag sequence per input sequence with matching length.
  virtual std::vector<Tags> tag(std::span<const Tokens> batch) = 0;

  // Trains a fresh model on the weighted union of `corpora`.
  virtual std::shared_ptr<TaggerBackend> train(std::span<const WeightedCorpus> corpora) {
    (void)corpora;
    throw Error(ErrorCode::kUnsupported, "this tagger backend cannot be trained");
  }

  virtual bool single_flight() const { return false; }
};

// Smallest slot whose symbol count differs between `input` and `output`.
inline std::optional<int> symbol_count_mismatch(const Tokens& input, const Tokens& output,
                                                const BoundarySymbolTable& table) {
  std::map<int, int> delta;
  for (const auto& t : input) {
    if (auto s = table.slot_of(t)) ++delta[*s];
  }
  for (const auto& t : output) {
    if (auto s = table.slot_of(t)) --delta[*s];
  }
  for (const auto& [slot, d] : delta) {
    if (d != 0) return slot;
  }
  return std::nullopt;
}

// Translates and rejects, per sentence, any output that changed the symbol
// multiset.
inline std::vector<TranslationResult> translate_conserving(TranslatorBackend& translator,
                                                           std::span<const Tokens> batch,
                                                           const std::string& src_lang, const std::string& tgt_lang,
                                                           const BoundarySymbolTable& table) {
  auto results = translator.translate(batch, src_lang, tgt_lang);
  if (results.size() != batch.size()) {
    throw Error(ErrorCode::kBackendContractViolation, "translator returned " + std::to_string(results.size()) +
                                                          " results for " + std::to_string(batch.size()) +
                                                          " inputs");
  }
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    if (auto slot = symbol_count_mismatch(batch[i], results[i].value(), table)) {
      results[i] = TranslationFault{TranslationFault::Kind::kSymbolCountChanged, *slot,
                                    "symbol " + table.render(*slot) + " count changed"};
    }
  }
  return results;
}

// Tags a batch and enforces the tagger contract. With `repair`, orphan I-X
// tags are rewritten and flagged in `repaired`; otherwise they are a
// contract violation.
inline std::vector<Tags> tag_checked(TaggerBackend& tagger, std::span<const Tokens> batch, bool repair = false,
                                     std::vector<bool>* repaired = nullptr) {
  auto tags = tagger.tag(batch);
  if (tags.size() != batch.size()) {
    throw Error(ErrorCode::kBackendContractViolation, "tagger returned " + std::to_string(tags.size()) +
                                                          " sequences for " + std::to_string(batch.size()));
  }
  if (repaired) repaired->assign(batch.size(), false);
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].size() != batch[i].size()) {
      throw Error(ErrorCode::kBackendContractViolation, "tag count " + std::to_string(tags[i].size()) +
                                                            " != token count " + std::to_string(batch[i].size()));
    }
    for (const auto& t : tags[i]) {
      if (!tagger.scheme().is_valid_tag(t)) {
        throw Error(ErrorCode::kBackendContractViolation, "tag '" + t + "' outside the scheme");
      }
    }
    if (!is_valid_bio2(tags[i])) {
      if (!repair) throw Error(ErrorCode::kBackendContractViolation, "tagger emitted invalid BIO-2");
      repair_bio2(tags[i]);
      if (repaired) (*repaired)[i] = true;
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Lexicons

using Lexicon = std::unordered_map<std::string, std::string>;

// Lines "src_word<TAB>tgt_word". Later duplicates are an error.
inline Lexicon parse_lexicon(std::string_view text) {
  Lexicon lex;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const auto cols = split_char(lines[n], '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw Error(ErrorCode::kMalformedLine, "lexicon line " + std::to_string(n + 1) + ": expected 'src<TAB>tgt'");
    }
    if (!lex.emplace(std::string(cols[0]), std::string(cols[1])).second) {
      throw Error(ErrorCode::kMalformedLine, "lexicon line " + std::to_string(n + 1) + ": duplicate source word '" +
                                                 std::string(cols[0]) + "'");
    }
  }
  return lex;
}

inline std::string write_lexicon(const Lexicon& lex) {
  std::vector<std::pair<std::string, std::string>> entries(lex.begin(), lex.end());
  std::sort(entries.begin(), entries.end());
  std::string out;
  for (const auto& [s, t] : entries) out += s + "\t" + t + "\n";
  return out;
}

inline bool is_bijective(const Lexicon& lex) {
  std::unordered_map<std::string, int> seen;
  for (const auto& [s, t] : lex) {
    if (++seen[t] > 1) return false;
  }
  return true;
}

inline Lexicon invert_lexicon(const Lexicon& lex) {
  if (!is_bijective(lex)) throw Error(ErrorCode::kInvalidArgument, "lexicon is not bijective");
  Lexicon inv;
  for (const auto& [s, t] : lex) inv.emplace(t, s);
  return inv;
}

// ---------------------------------------------------------------------------
// DictionaryTranslator

enum class Reorder { kNone, kReverseGroups };
enum class UnknownPolicy { kCopy, kDrop };

// Word-by-word translation. Under kReverseGroups the sentence is cut into
// units (a bracketed group from a symbol to its partner, or a single plain
// token) and the unit order is reversed; tokens inside a group keep their
// order.
class DictionaryTranslator : public TranslatorBackend {
 public:
  struct Direction {
    Lexicon lexicon;
    Reorder reorder = Reorder::kNone;
  };

  DictionaryTranslator(BoundarySymbolTable table = BoundarySymbolTable(),
                       UnknownPolicy unknown = UnknownPolicy::kCopy)
      : table_(table), unknown_(unknown) {}

  void add_direction(const std::string& src, const std::string& tgt, Lexicon lexicon,
                     Reorder reorder = Reorder::kNone) {
    directions_[{src, tgt}] = Direction{std::move(lexicon), reorder};
  }

  // Registers src->tgt with `reorder` and, when the lexicon is bijective,
  // the inverse direction with `inverse_reorder`.
  static DictionaryTranslator from_lexicon(const std::string& src, const std::string& tgt, const Lexicon& lexicon,
                                           Reorder reorder = Reorder::kNone,
                                           Reorder inverse_reorder = Reorder::kNone,
                                           UnknownPolicy unknown = UnknownPolicy::kCopy,
                                           BoundarySymbolTable table = BoundarySymbolTable()) {
    DictionaryTranslator t(table, unknown);
    t.add_direction(src, tgt, lexicon, reorder);
    if (is_bijective(lexicon)) t.add_direction(tgt, src, invert_lexicon(lexicon), inverse_reorder);
    return t;
  }

  bool supports(const std::string& src, const std::string& tgt) const { return directions_.count({src, tgt}) > 0; }

  const Direction& direction(const std::string& src, const std::string& tgt) const {
    auto it = directions_.find({src, tgt});
    if (it == directions_.end()) throw Error(ErrorCode::kUnknownLanguagePair, src + "->" + tgt);
    return it->second;
  }

  Tokens translate_one(const Tokens& tokens, const Direction& dir) const {
    std::vector<std::pair<size_t, size_t>> units;  // [begin, end) into tokens
    if (dir.reorder == Reorder::kReverseGroups) {
      size_t i = 0;
      while (i < tokens.size()) {
        size_t end = i + 1;
        if (auto slot = table_.slot_of(tokens[i])) {
          for (size_t j = i + 1; j < tokens.size(); ++j) {
            if (table_.slot_of(tokens[j]) == slot) {
              end = j + 1;
              break;
            }
          }
        }
        units.emplace_back(i, end);
        i = end;
      }
      std::reverse(units.begin(), units.end());
    } else {
      units.emplace_back(0, tokens.size());
    }
    Tokens out;
    out.reserve(tokens.size());
    for (const auto& [b, e] : units) {
      for (size_t i = b; i < e; ++i) {
        const auto& t = tokens[i];
        if (table_.is_symbol(t)) {
          out.push_back(t);
          continue;
        }
        auto it = dir.lexicon.find(t);
        if (it != dir.lexicon.end()) {
          out.push_back(it->second);
        } else if (unknown_ == UnknownPolicy::kCopy) {
          out.push_back(t);
        }
      }
    }
    return out;
  }

  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string& src_lang,
                                           const std::string& tgt_lang) override {
    const Direction& dir = direction(src_lang, tgt_lang);
    std::vector<TranslationResult> out;
    out.reserve(batch.size());
    for (const auto& tokens : batch) out.emplace_back(translate_one(tokens, dir));
    return out;
  }

 private:
  BoundarySymbolTable table_;
  UnknownPolicy unknown_;
  std::map<std::pair<std::string, std::string>, Direction> directions_;
};

// Returns its input unchanged for every language pair.
class IdentityTranslator : public TranslatorBackend {
 public:
  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string&,
                                           const std::string&) override {
    return std::vector<TranslationResult>(batch.begin(), batch.end());
  }
};

// ---------------------------------------------------------------------------
// GazetteerTagger

// Lines "entity phrase<TAB>TYPE".
inline std::vector<std::pair<Tokens, std::string>> parse_gazetteer(std::string_view text) {
  std::vector<std::pair<Tokens, std::string>> out;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const auto cols = split_char(lines[n], '\t');
    auto phrase = cols.empty() ? Tokens{} : split_ws(cols[0]);
    if (cols.size() != 2 || phrase.empty() || trim(cols[1]).empty()) {
      throw Error(ErrorCode::kMalformedLine, "gazetteer line " + std::to_string(n + 1) +
                                                 ": expected 'phrase<TAB>TYPE'");
    }
    out.emplace_back(std::move(phrase), std::string(trim(cols[1])));
  }
  return out;
}

// Longest-match-first dictionary tagger; deterministic and context-free.
class GazetteerTagger : public TaggerBackend {
 public:
  GazetteerTagger(TagScheme scheme, const std::vector<std::pair<Tokens, std::string>>& entries)
      : scheme_(std::move(scheme)) {
    for (const auto& [phrase, type] : entries) {
      if (!scheme_.type_index(type)) throw Error(ErrorCode::kSchemeMismatch, "gazetteer type '" + type + "'");
      entries_[join(phrase, " ")] = type;
      max_len_ = std::max(max_len_, phrase.size());
    }
  }

  const TagScheme& scheme() const override { return scheme_; }

  Tags tag_one(const Tokens& tokens) const {
    Tags tags(tokens.size(), "O");
    size_t i = 0;
    while (i < tokens.size()) {
      size_t matched = 0;
      const std::string* type = nullptr;
      for (size_t len = std::min(max_len_, tokens.size() - i); len >= 1; --len) {
        Tokens window(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + len));
        auto it = entries_.find(join(window, " "));
        if (it != entries_.end()) {
          matched = len;
          type = &it->second;
          break;
        }
      }
      if (!matched) {
        ++i;
        continue;
      }
      tags[i] = "B-" + *type;
      for (size_t k = 1; k < matched; ++k) tags[i + k] = "I-" + *type;
      i += matched;
    }
    return tags;
  }

  std::vector<Tags> tag(std::span<const Tokens> batch) override {
    std::vector<Tags> out;
    out.reserve(batch.size());
    for (const auto& tokens : batch) out.push_back(tag_one(tokens));
    return out;
  }

 private:
  TagScheme scheme_;
  std::unordered_map<std::string, std::string> entries_;
  size_t max_len_ = 0;
};

}  // namespace crop
