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

// Boundary-symbol encoding of tagged sentences. Every entity is wrapped in a
// pair of __SLOT{i}__ tokens so that its position survives translation; the
// entity type travels next to the tokens in `slot_types`.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crop/common.hpp"
#include "crop/corpus_io.hpp"

namespace crop {

class BoundarySymbolTable {
 public:
  static constexpr int kDefaultMaxSlots = 10;

  BoundarySymbolTable() = default;
  explicit BoundarySymbolTable(int max_slots) : max_slots_(max_slots) {
    if (max_slots < 1) throw Error(ErrorCode::kInvalidArgument, "max_slots must be positive");
  }

  int max_slots() const { return max_slots_; }

  std::string render(int slot) const { return "__SLOT" + std::to_string(slot) + "__"; }

  // Slot index of a boundary symbol, or nullopt for plain tokens. Symbols
  // beyond max_slots still parse; decoding reports them as unknown.
  std::optional<int> slot_of(std::string_view token) const {
    if (!is_reserved_symbol(token)) return std::nullopt;
    long long v = 0;
    if (!parse_nonnegative_int(token.substr(6, token.size() - 8), v) || v > 1'000'000) return std::nullopt;
    return static_cast<int>(v);
  }

  bool is_symbol(std::string_view token) const { return slot_of(token).has_value(); }

 private:
  int max_slots_ = kDefaultMaxSlots;
};

using SlotTypes = std::map<int, std::string>;

struct LabeledSequence {
  Tokens tokens;
  SlotTypes slot_types;
  std::string language;

  bool operator==(const LabeledSequence&) const = default;
};

enum class DecodeErrorKind { kUnpairedSymbol, kUnknownSlot, kEmptySlot, kNestedSlots, kMissingSlot };

inline const char* decode_error_name(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::kUnpairedSymbol: return "UnpairedSymbol";
    case DecodeErrorKind::kUnknownSlot: return "UnknownSlot";
    case DecodeErrorKind::kEmptySlot: return "EmptySlot";
    case DecodeErrorKind::kNestedSlots: return "NestedSlots";
    case DecodeErrorKind::kMissingSlot: return "MissingSlot";
  }
  return "Unknown";
}

struct DecodeError {
  DecodeErrorKind kind;
  int slot;

  std::string describe() const { return std::string(decode_error_name(kind)) + "(" + std::to_string(slot) + ")"; }
  bool operator==(const DecodeError&) const = default;
};

inline Tokens strip_symbols(const Tokens& tokens, const BoundarySymbolTable& table) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!table.is_symbol(t)) out.push_back(t);
  }
  return out;
}

// Wraps each entity of `sentence` in its slot symbol; slots are numbered
// left to right from 0.
inline LabeledSequence encode(const TaggedSentence& sentence, const BoundarySymbolTable& table) {
  for (const auto& t : sentence.tokens) {
    if (table.is_symbol(t)) throw Error(ErrorCode::kSymbolCollision, "token '" + t + "' collides with a boundary symbol");
  }
  const auto spans = spans_from_tags(sentence.tags);
  if (static_cast<int>(spans.size()) > table.max_slots()) {
    throw Error(ErrorCode::kTooManySlots, std::to_string(spans.size()) + " entities exceed " +
                                              std::to_string(table.max_slots()) + " slots");
  }
  LabeledSequence out;
  out.language = sentence.language;
  out.tokens.reserve(sentence.tokens.size() + 2 * spans.size());
  size_t next = 0;
  for (size_t slot = 0; slot < spans.size(); ++slot) {
    const auto& span = spans[slot];
    for (; next < static_cast<size_t>(span.start); ++next) out.tokens.push_back(sentence.tokens[next]);
    const std::string symbol = table.render(static_cast<int>(slot));
    out.tokens.push_back(symbol);
    for (; next < static_cast<size_t>(span.end); ++next) out.tokens.push_back(sentence.tokens[next]);
    out.tokens.push_back(symbol);
    out.slot_types[static_cast<int>(slot)] = span.etype;
  }
  for (; next < sentence.tokens.size(); ++next) out.tokens.push_back(sentence.tokens[next]);
  return out;
}

// A bracketed region: positions of the opening and closing symbol.
struct SlotRegion {
  int slot;
  size_t open;
  size_t close;
};

// Locates every slot region in `tokens`, validating the bracketing against
// `slot_types`. Errors are reported in a fixed order so each malformed input
// maps to exactly one classification: unknown symbols first (leftmost), then
// per slot in ascending order missing/unpaired, then nesting, then emptiness.
inline Expected<std::vector<SlotRegion>, DecodeError> locate_slots(const Tokens& tokens, const SlotTypes& slot_types,
                                                                   const BoundarySymbolTable& table) {
  std::map<int, std::vector<size_t>> positions;
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto slot = table.slot_of(tokens[i]);
    if (!slot) continue;
    if (!slot_types.count(*slot)) return DecodeError{DecodeErrorKind::kUnknownSlot, *slot};
    positions[*slot].push_back(i);
  }
  std::vector<SlotRegion> regions;
  for (const auto& [slot, type] : slot_types) {
    auto it = positions.find(slot);
    if (it == positions.end()) return DecodeError{DecodeErrorKind::kMissingSlot, slot};
    if (it->second.size() != 2) return DecodeError{DecodeErrorKind::kUnpairedSymbol, slot};
    regions.push_back({slot, it->second[0], it->second[1]});
  }
  std::sort(regions.begin(), regions.end(), [](const SlotRegion& a, const SlotRegion& b) { return a.open < b.open; });
  for (size_t i = 1; i < regions.size(); ++i) {
    if (regions[i].open < regions[i - 1].close) return DecodeError{DecodeErrorKind::kNestedSlots, regions[i].slot};
  }
  for (const auto& r : regions) {
    if (r.close == r.open + 1) return DecodeError{DecodeErrorKind::kEmptySlot, r.slot};
    // A region holding only other symbols is empty too, but the nesting check
    // above already rejects that.
  }
  return regions;
}

inline Expected<TaggedSentence, DecodeError> decode(const Tokens& tokens, const SlotTypes& slot_types,
                                                    const BoundarySymbolTable& table,
                                                    const std::string& language = "") {
  auto located = locate_slots(tokens, slot_types, table);
  if (!located) return located.error();
  TaggedSentence out;
  out.language = language;
  out.tokens.reserve(tokens.size());
  out.tags.reserve(tokens.size());
  const auto& regions = located.value();
  size_t r = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (table.is_symbol(tokens[i])) continue;
    while (r < regions.size() && regions[r].close < i) ++r;
    if (r < regions.size() && regions[r].open < i && i < regions[r].close) {
      const auto& type = slot_types.at(regions[r].slot);
      const bool first = i == regions[r].open + 1;
      out.tags.push_back((first ? "B-" : "I-") + type);
    } else {
      out.tags.push_back("O");
    }
    out.tokens.push_back(tokens[i]);
  }
  return out;
}

inline Expected<TaggedSentence, DecodeError> decode(const LabeledSequence& seq, const BoundarySymbolTable& table) {
  return decode(seq.tokens, seq.slot_types, table, seq.language);
}

// Serialization: a space-joined token line plus a slot line "0:LOC 1:PER".
inline std::string write_slot_line(const SlotTypes& slot_types) {
  std::string out;
  for (const auto& [slot, type] : slot_types) {
    if (!out.empty()) out += ' ';
    out += std::to_string(slot) + ":" + type;
  }
  return out;
}

inline SlotTypes parse_slot_line(std::string_view line) {
  SlotTypes out;
  for (const auto& item : split_ws(line)) {
    const auto colon = item.find(':');
    long long slot = 0;
    if (colon == std::string::npos || colon + 1 == item.size() ||
        !parse_nonnegative_int(std::string_view(item).substr(0, colon), slot)) {
      throw Error(ErrorCode::kMalformedSequence, "bad slot entry '" + item + "'");
    }
    if (!out.emplace(static_cast<int>(slot), item.substr(colon + 1)).second) {
      throw Error(ErrorCode::kMalformedSequence, "duplicate slot " + std::to_string(slot));
    }
  }
  return out;
}

struct LabeledSequenceFiles {
  std::string tokens;
  std::string slots;
};

inline LabeledSequenceFiles write_labeled_sequences(const std::vector<LabeledSequence>& seqs) {
  LabeledSequenceFiles out;
  for (const auto& s : seqs) {
    out.tokens += join(s.tokens, " ") + "\n";
    out.slots += write_slot_line(s.slot_types) + "\n";
  }
  return out;
}

inline std::vector<LabeledSequence> parse_labeled_sequences(std::string_view tokens_text, std::string_view slots_text,
                                                            const std::string& language) {
  const auto token_lines = split_lines(tokens_text);
  const auto slot_lines = split_lines(slots_text);
  if (token_lines.size() != slot_lines.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(token_lines.size()) + " token lines but " +
                                                std::to_string(slot_lines.size()) + " slot lines");
  }
  std::vector<LabeledSequence> out;
  out.reserve(token_lines.size());
  for (size_t i = 0; i < token_lines.size(); ++i) {
    out.push_back({split_ws(token_lines[i]), parse_slot_line(slot_lines[i]), language});
  }
  return out;
}

}  // namespace crop
