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

// Training data for labeled sequence translation: phrase pairs extracted from
// word alignments are bracketed with the same boundary symbol on both sides
// of a sentence pair, and mixed with plain pairs.

#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "crop/common.hpp"
#include "crop/labeled_seq.hpp"

namespace crop {

struct WordAlignment {
  // Sorted, deduplicated (source index, target index) links.
  std::vector<std::pair<int, int>> links;

  bool operator==(const WordAlignment&) const = default;
};

struct TokenRange {
  int start = 0;
  int end = 0;  // exclusive

  int size() const { return end - start; }
  bool overlaps(const TokenRange& o) const { return start < o.end && o.start < end; }
  bool operator==(const TokenRange&) const = default;
  auto operator<=>(const TokenRange&) const = default;
};

struct PhrasePair {
  TokenRange src;
  TokenRange tgt;

  bool operator==(const PhrasePair&) const = default;
  auto operator<=>(const PhrasePair&) const = default;
};

// One alignment per line, whitespace-separated "i-j" links.
inline std::vector<WordAlignment> parse_pharaoh(std::string_view text) {
  std::vector<WordAlignment> out;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    WordAlignment a;
    for (const auto& item : split_ws(lines[n])) {
      const auto dash = item.find('-');
      long long i = 0, j = 0;
      if (dash == std::string::npos || !parse_nonnegative_int(std::string_view(item).substr(0, dash), i) ||
          !parse_nonnegative_int(std::string_view(item).substr(dash + 1), j) || i > INT32_MAX || j > INT32_MAX) {
        throw Error(ErrorCode::kMalformedLink, "line " + std::to_string(n + 1) + ": bad link '" + item + "'");
      }
      a.links.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
    std::sort(a.links.begin(), a.links.end());
    a.links.erase(std::unique(a.links.begin(), a.links.end()), a.links.end());
    out.push_back(std::move(a));
  }
  return out;
}

inline std::string write_pharaoh(const std::vector<WordAlignment>& alignments) {
  std::string out;
  for (const auto& a : alignments) {
    for (size_t k = 0; k < a.links.size(); ++k) {
      if (k) out += ' ';
      out += std::to_string(a.links[k].first) + "-" + std::to_string(a.links[k].second);
    }
    out += '\n';
  }
  return out;
}

inline void check_alignment(const WordAlignment& a, int src_len, int tgt_len) {
  for (const auto& [i, j] : a.links) {
    if (i >= src_len || j >= tgt_len) {
      throw Error(ErrorCode::kIndexOutOfRange, "link " + std::to_string(i) + "-" + std::to_string(j) +
                                                   " outside " + std::to_string(src_len) + "x" +
                                                   std::to_string(tgt_len) + " sentence pair");
    }
  }
}

// All consistent phrase pairs with both sides at most `max_phrase_len` long.
// A pair is consistent when it contains at least one link and no link leaves
// it on one side only. Unaligned words are never absorbed: the first and last
// word of each side must carry a link.
inline std::vector<PhrasePair> extract_phrase_pairs(int src_len, int tgt_len, const WordAlignment& alignment,
                                                    int max_phrase_len = 7) {
  check_alignment(alignment, src_len, tgt_len);
  std::vector<std::vector<int>> by_src(src_len);
  std::vector<std::vector<int>> by_tgt(tgt_len);
  for (const auto& [i, j] : alignment.links) {
    by_src[i].push_back(j);
    by_tgt[j].push_back(i);
  }
  std::vector<PhrasePair> out;
  for (int s1 = 0; s1 < src_len; ++s1) {
    if (by_src[s1].empty()) continue;
    int t_min = tgt_len, t_max = -1;
    for (int s2 = s1; s2 < src_len && s2 - s1 < max_phrase_len; ++s2) {
      for (int j : by_src[s2]) {
        t_min = std::min(t_min, j);
        t_max = std::max(t_max, j);
      }
      if (by_src[s2].empty()) continue;  // last source word unaligned
      if (t_max - t_min + 1 > max_phrase_len) continue;
      bool consistent = true;
      for (int j = t_min; j <= t_max && consistent; ++j) {
        for (int i : by_tgt[j]) {
          if (i < s1 || i > s2) {
            consistent = false;
            break;
          }
        }
      }
      if (consistent) out.push_back({{s1, s2 + 1}, {t_min, t_max + 1}});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Samples k pairwise non-overlapping pairs (on both sides), k uniform in
// [0, min(k_max, m)] where m is the size of a maximal non-overlapping set
// grown greedily over a seeded shuffle of `pairs`. Output is ordered by
// source start.
inline std::vector<PhrasePair> sample_spans(const std::vector<PhrasePair>& pairs, int k_max, Rng& rng) {
  if (pairs.empty() || k_max <= 0) return {};
  std::vector<PhrasePair> order = pairs;
  rng.shuffle(order);
  std::vector<PhrasePair> maximal;
  for (const auto& p : order) {
    bool free = std::none_of(maximal.begin(), maximal.end(), [&](const PhrasePair& q) {
      return p.src.overlaps(q.src) || p.tgt.overlaps(q.tgt);
    });
    if (free) maximal.push_back(p);
  }
  const int cap = std::min<int>(k_max, static_cast<int>(maximal.size()));
  const int k = static_cast<int>(rng.uniform_int(0, cap));
  maximal.resize(k);
  std::sort(maximal.begin(), maximal.end());
  return maximal;
}

inline constexpr const char* kSpanPseudoType = "SPAN";

namespace detail {

// Inserts symbol `slots[i]` around ranges[i].
inline Tokens bracket(const Tokens& tokens, const std::vector<std::pair<TokenRange, int>>& ranges,
                      const BoundarySymbolTable& table) {
  std::vector<std::pair<TokenRange, int>> sorted = ranges;
  std::sort(sorted.begin(), sorted.end());
  Tokens out;
  out.reserve(tokens.size() + 2 * ranges.size());
  size_t r = 0;
  for (int i = 0; i <= static_cast<int>(tokens.size()); ++i) {
    // Close before open so adjacent ranges stay flat.
    for (const auto& [range, slot] : sorted) {
      if (range.end == i) out.push_back(table.render(slot));
    }
    while (r < sorted.size() && sorted[r].first.start == i) {
      out.push_back(table.render(sorted[r].second));
      ++r;
    }
    if (i < static_cast<int>(tokens.size())) out.push_back(tokens[i]);
  }
  return out;
}

}  // namespace detail

// Brackets the i-th span (ordered by source start) with symbol i on both
// sides. Every slot carries the pseudo-type SPAN.
inline std::pair<LabeledSequence, LabeledSequence> build_labeled_pair(const Tokens& src_tokens,
                                                                      const Tokens& tgt_tokens,
                                                                      std::vector<PhrasePair> spans,
                                                                      const BoundarySymbolTable& table,
                                                                      const std::string& src_lang = "",
                                                                      const std::string& tgt_lang = "") {
  if (static_cast<int>(spans.size()) > table.max_slots()) {
    throw Error(ErrorCode::kTooManySlots, std::to_string(spans.size()) + " spans exceed " +
                                              std::to_string(table.max_slots()) + " slots");
  }
  for (const auto& t : src_tokens) {
    if (table.is_symbol(t)) throw Error(ErrorCode::kSymbolCollision, "source token '" + t + "'");
  }
  for (const auto& t : tgt_tokens) {
    if (table.is_symbol(t)) throw Error(ErrorCode::kSymbolCollision, "target token '" + t + "'");
  }
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<TokenRange, int>> src_ranges, tgt_ranges;
  SlotTypes slot_types;
  for (size_t i = 0; i < spans.size(); ++i) {
    const auto& p = spans[i];
    if (p.src.start < 0 || p.src.end > static_cast<int>(src_tokens.size()) || p.src.size() <= 0 || p.tgt.start < 0 ||
        p.tgt.end > static_cast<int>(tgt_tokens.size()) || p.tgt.size() <= 0) {
      throw Error(ErrorCode::kSpanOutOfRange, "phrase pair outside sentence pair");
    }
    for (size_t j = 0; j < i; ++j) {
      if (p.src.overlaps(spans[j].src) || p.tgt.overlaps(spans[j].tgt)) {
        throw Error(ErrorCode::kOverlappingSpans, "phrase pairs overlap");
      }
    }
    src_ranges.emplace_back(p.src, static_cast<int>(i));
    tgt_ranges.emplace_back(p.tgt, static_cast<int>(i));
    slot_types[static_cast<int>(i)] = kSpanPseudoType;
  }
  return {LabeledSequence{detail::bracket(src_tokens, src_ranges, table), slot_types, src_lang},
          LabeledSequence{detail::bracket(tgt_tokens, tgt_ranges, table), slot_types, tgt_lang}};
}

enum class MixMode { kAlternate, kBernoulli };

struct MixConfig {
  // Fraction of pairs emitted as labeled pairs.
  double alpha = 0.5;
  int k_max = 10;
  uint64_t seed = 0;
  MixMode mode = MixMode::kAlternate;
  int max_phrase_len = 7;
  int max_slots = BoundarySymbolTable::kDefaultMaxSlots;
};

struct BitextPair {
  Tokens src;
  Tokens tgt;
};

struct MixedExample {
  bool labeled = false;
  LabeledSequence src;
  LabeledSequence tgt;
};

// Whether example `index` is labeled under alternation: labeled exactly when
// floor((i+1)·alpha) advances, so alpha=0.5 gives plain, labeled, plain, ...
inline bool alternation_labeled(size_t index, double alpha) {
  const auto before = static_cast<long long>(static_cast<double>(index) * alpha);
  const auto after = static_cast<long long>(static_cast<double>(index + 1) * alpha);
  return after > before;
}

// Builds one example. Each index draws from its own RNG stream so the result
// does not depend on processing order.
inline MixedExample mix_one(const BitextPair& pair, const WordAlignment& alignment, size_t index,
                            const MixConfig& cfg, const std::string& src_lang = "",
                            const std::string& tgt_lang = "") {
  Rng rng = Rng::derive(cfg.seed, index);
  bool labeled = false;
  if (cfg.mode == MixMode::kAlternate) {
    labeled = alternation_labeled(index, cfg.alpha);
  } else {
    labeled = rng.bernoulli(cfg.alpha);
  }
  const BoundarySymbolTable table(cfg.max_slots);
  MixedExample ex;
  ex.labeled = labeled;
  if (!labeled) {
    check_alignment(alignment, static_cast<int>(pair.src.size()), static_cast<int>(pair.tgt.size()));
    ex.src = {pair.src, {}, src_lang};
    ex.tgt = {pair.tgt, {}, tgt_lang};
    return ex;
  }
  const auto pairs = extract_phrase_pairs(static_cast<int>(pair.src.size()), static_cast<int>(pair.tgt.size()),
                                          alignment, cfg.max_phrase_len);
  const auto spans = sample_spans(pairs, std::min(cfg.k_max, cfg.max_slots), rng);
  auto [src, tgt] = build_labeled_pair(pair.src, pair.tgt, spans, table, src_lang, tgt_lang);
  ex.src = std::move(src);
  ex.tgt = std::move(tgt);
  return ex;
}

inline std::vector<MixedExample> emit_mixed_corpus(const std::vector<BitextPair>& bitext,
                                                   const std::vector<WordAlignment>& alignments,
                                                   const MixConfig& cfg, const std::string& src_lang = "",
                                                   const std::string& tgt_lang = "") {
  if (bitext.size() != alignments.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(bitext.size()) + " sentence pairs but " +
                                                std::to_string(alignments.size()) + " alignments");
  }
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw Error(ErrorCode::kInvalidArgument, "alpha outside [0,1]");
  std::vector<MixedExample> out;
  out.reserve(bitext.size());
  for (size_t i = 0; i < bitext.size(); ++i) {
    out.push_back(mix_one(bitext[i], alignments[i], i, cfg, src_lang, tgt_lang));
  }
  return out;
}

// Serialized as three line-aligned files; the slot line is shared by both
// sides because a labeled pair uses identical slots.
struct MixedCorpusFiles {
  std::string src;
  std::string tgt;
  std::string slots;
};

inline MixedCorpusFiles write_mixed_corpus(const std::vector<MixedExample>& examples) {
  MixedCorpusFiles out;
  for (const auto& ex : examples) {
    out.src += join(ex.src.tokens, " ") + "\n";
    out.tgt += join(ex.tgt.tokens, " ") + "\n";
    out.slots += write_slot_line(ex.src.slot_types) + "\n";
  }
  return out;
}

inline std::vector<Tokens> parse_token_lines(std::string_view text) {
  std::vector<Tokens> out;
  for (auto line : split_lines(text)) out.push_back(split_ws(line));
  return out;
}

}  // namespace crop
