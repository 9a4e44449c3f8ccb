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

// BIO-2 tagged corpora in CoNLL column format, and conversion between tag
// sequences and entity spans.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crop/common.hpp"

namespace crop {

// True for tokens of the form __SLOT<digits>__. All such tokens are reserved
// for boundary symbols regardless of the configured slot count.
inline bool is_reserved_symbol(std::string_view token) {
  constexpr std::string_view kPrefix = "__SLOT";
  constexpr std::string_view kSuffix = "__";
  if (token.size() <= kPrefix.size() + kSuffix.size()) return false;
  if (token.substr(0, kPrefix.size()) != kPrefix) return false;
  if (token.substr(token.size() - kSuffix.size()) != kSuffix) return false;
  std::string_view digits =
      token.substr(kPrefix.size(), token.size() - kPrefix.size() - kSuffix.size());
  return std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// A tag split into its prefix ('O', 'B' or 'I') and entity type.
struct TagParts {
  char prefix = 'O';
  std::string_view type;
};

inline std::optional<TagParts> split_tag(std::string_view tag) {
  if (tag == "O") return TagParts{'O', {}};
  if (tag.size() < 3 || tag[1] != '-') return std::nullopt;
  if (tag[0] != 'B' && tag[0] != 'I') return std::nullopt;
  return TagParts{tag[0], tag.substr(2)};
}

class TagScheme {
 public:
  explicit TagScheme(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
    if (types_.empty()) throw Error(ErrorCode::kInvalidScheme, "no entity types");
    for (size_t i = 0; i < types_.size(); ++i) {
      const auto& t = types_[i];
      if (t.empty() || contains_whitespace(t) || t == "O") {
        throw Error(ErrorCode::kInvalidScheme, "invalid entity type '" + t + "'");
      }
      for (size_t j = 0; j < i; ++j) {
        if (types_[j] == t) throw Error(ErrorCode::kInvalidScheme, "duplicate entity type '" + t + "'");
      }
    }
  }

  // Parses "LOC,PER,ORG".
  static TagScheme parse(std::string_view list) {
    std::vector<std::string> types;
    for (auto part : split_char(list, ',')) {
      auto t = trim(part);
      if (!t.empty()) types.emplace_back(t);
    }
    return TagScheme(std::move(types));
  }

  const std::vector<std::string>& entity_types() const { return types_; }
  int tag_count() const { return static_cast<int>(2 * types_.size() + 1); }

  std::optional<int> type_index(std::string_view type) const {
    for (size_t i = 0; i < types_.size(); ++i) {
      if (types_[i] == type) return static_cast<int>(i);
    }
    return std::nullopt;
  }

  // Tag ids: 0 = O, 2k+1 = B-type_k, 2k+2 = I-type_k.
  std::optional<int> tag_index(std::string_view tag) const {
    auto parts = split_tag(tag);
    if (!parts) return std::nullopt;
    if (parts->prefix == 'O') return 0;
    auto k = type_index(parts->type);
    if (!k) return std::nullopt;
    return 2 * *k + (parts->prefix == 'B' ? 1 : 2);
  }

  std::string tag_name(int index) const {
    if (index == 0) return "O";
    const int k = (index - 1) / 2;
    return ((index - 1) % 2 == 0 ? "B-" : "I-") + types_.at(k);
  }

  bool is_valid_tag(std::string_view tag) const { return tag_index(tag).has_value(); }

  bool operator==(const TagScheme&) const = default;

 private:
  std::vector<std::string> types_;
};

struct EntitySpan {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  std::string etype;

  bool operator==(const EntitySpan&) const = default;
  auto operator<=>(const EntitySpan&) const = default;
};

struct TaggedSentence {
  Tokens tokens;
  Tags tags;
  std::string language;

  size_t size() const { return tokens.size(); }
  bool operator==(const TaggedSentence&) const = default;
};

struct Corpus {
  std::vector<TaggedSentence> sentences;
  std::string language;
  bool labeled = true;

  size_t size() const { return sentences.size(); }
  bool operator==(const Corpus&) const = default;
};

enum class ParseMode { kStrict, kRepair };

// Throws InvalidBio if `tags` is not a valid BIO-2 sequence.
inline void validate_bio2(const Tags& tags) {
  std::string_view open;
  bool inside = false;
  for (size_t i = 0; i < tags.size(); ++i) {
    auto parts = split_tag(tags[i]);
    if (!parts) throw Error(ErrorCode::kInvalidBio, "malformed tag '" + tags[i] + "' at " + std::to_string(i));
    if (parts->prefix == 'I' && (!inside || open != parts->type)) {
      throw Error(ErrorCode::kInvalidBio, "'" + tags[i] + "' at " + std::to_string(i) + " does not continue an entity");
    }
    inside = parts->prefix != 'O';
    open = parts->type;
  }
}

inline bool is_valid_bio2(const Tags& tags) {
  try {
    validate_bio2(tags);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// Rewrites orphan I-X tags to B-X. Returns the number of rewrites.
inline int repair_bio2(Tags& tags) {
  int repaired = 0;
  std::string open;
  bool inside = false;
  for (auto& tag : tags) {
    auto parts = split_tag(tag);
    if (!parts) continue;
    std::string type(parts->type);
    if (parts->prefix == 'I' && (!inside || open != type)) {
      tag = "B-" + type;
      ++repaired;
    }
    inside = parts->prefix != 'O';
    open = std::move(type);
  }
  return repaired;
}

inline std::vector<EntitySpan> spans_from_tags(const Tags& tags) {
  validate_bio2(tags);
  std::vector<EntitySpan> spans;
  for (size_t i = 0; i < tags.size(); ++i) {
    auto parts = split_tag(tags[i]);
    if (parts->prefix == 'B') {
      spans.push_back({static_cast<int>(i), static_cast<int>(i) + 1, std::string(parts->type)});
    } else if (parts->prefix == 'I') {
      spans.back().end = static_cast<int>(i) + 1;
    }
  }
  return spans;
}

inline Tags tags_from_spans(std::vector<EntitySpan> spans, size_t length) {
  std::sort(spans.begin(), spans.end());
  Tags tags(length, "O");
  int last_end = 0;
  for (const auto& s : spans) {
    if (s.start < 0 || s.end <= s.start || static_cast<size_t>(s.end) > length) {
      throw Error(ErrorCode::kSpanOutOfRange, "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                                  ") outside sentence of length " + std::to_string(length));
    }
    if (s.start < last_end) {
      throw Error(ErrorCode::kOverlappingSpans, "span starting at " + std::to_string(s.start) + " overlaps");
    }
    tags[s.start] = "B-" + s.etype;
    for (int i = s.start + 1; i < s.end; ++i) tags[i] = "I-" + s.etype;
    last_end = s.end;
  }
  return tags;
}

inline void validate_token(std::string_view token) {
  if (token.empty()) throw Error(ErrorCode::kEmptyToken, "empty token");
  if (contains_whitespace(token)) throw Error(ErrorCode::kInvalidToken, "token contains whitespace");
  if (is_reserved_symbol(token)) {
    throw Error(ErrorCode::kInvalidToken, "token '" + std::string(token) + "' is a reserved boundary symbol");
  }
}

// Checks every TaggedSentence invariant against `scheme`.
inline void validate_sentence(const TaggedSentence& s, const TagScheme& scheme) {
  if (s.tokens.size() != s.tags.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(s.tokens.size()) + " tokens but " +
                                                std::to_string(s.tags.size()) + " tags");
  }
  if (s.tokens.empty()) throw Error(ErrorCode::kEmptyToken, "empty sentence");
  for (const auto& t : s.tokens) validate_token(t);
  for (const auto& tag : s.tags) {
    if (!scheme.is_valid_tag(tag)) throw Error(ErrorCode::kUnknownTag, "tag '" + tag + "' not in scheme");
  }
  validate_bio2(s.tags);
}

inline void validate_corpus(const Corpus& c, const TagScheme& scheme) {
  for (const auto& s : c.sentences) {
    if (s.language != c.language) {
      throw Error(ErrorCode::kCorpusMismatch, "sentence language '" + s.language + "' differs from corpus '" +
                                                  c.language + "'");
    }
    validate_sentence(s, scheme);
  }
}

namespace detail {

inline Error at_line(ErrorCode code, size_t line, const std::string& what) {
  return Error(code, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

// Parses `token<TAB or spaces>tag` lines with blank-line sentence breaks.
// In repair mode orphan I-X tags become B-X; `repaired` (optional) receives
// one flag per sentence telling whether any tag was rewritten.
inline Corpus parse_conll(std::string_view text, const TagScheme& scheme, ParseMode mode = ParseMode::kStrict,
                          const std::string& language = "", std::vector<bool>* repaired = nullptr) {
  Corpus corpus;
  corpus.language = language;
  corpus.labeled = true;
  if (repaired) repaired->clear();

  TaggedSentence current;
  current.language = language;
  size_t sentence_first_line = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    bool fixed = false;
    if (!is_valid_bio2(current.tags)) {
      if (mode == ParseMode::kStrict) {
        for (size_t i = 0; i < current.tags.size(); ++i) {
          Tags prefix(current.tags.begin(), current.tags.begin() + static_cast<long>(i) + 1);
          if (!is_valid_bio2(prefix)) {
            throw detail::at_line(ErrorCode::kOrphanInsideTag, sentence_first_line + i,
                                  "orphan '" + current.tags[i] + "'");
          }
        }
      }
      repair_bio2(current.tags);
      fixed = true;
    }
    corpus.sentences.push_back(std::move(current));
    if (repaired) repaired->push_back(fixed);
    current = TaggedSentence{};
    current.language = language;
  };

  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    const size_t line_no = n + 1;
    const std::string_view line = lines[n];
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (current.tokens.empty()) sentence_first_line = line_no;

    std::vector<std::string_view> cols;
    if (line.find('\t') != std::string_view::npos) {
      cols = split_char(line, '\t');
    } else {
      size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) cols.push_back(line.substr(i, j - i));
        i = j;
      }
    }
    if (cols.size() != 2) {
      throw detail::at_line(ErrorCode::kMalformedLine, line_no,
                            "expected 2 columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].empty()) throw detail::at_line(ErrorCode::kEmptyToken, line_no, "empty token");
    if (cols[1].empty()) throw detail::at_line(ErrorCode::kMalformedLine, line_no, "empty tag column");
    if (is_reserved_symbol(cols[0])) {
      throw detail::at_line(ErrorCode::kInvalidToken, line_no, "reserved boundary symbol used as token");
    }
    if (contains_whitespace(cols[0])) {
      throw detail::at_line(ErrorCode::kMalformedLine, line_no, "whitespace inside token");
    }
    if (!scheme.is_valid_tag(cols[1])) {
      throw detail::at_line(ErrorCode::kUnknownTag, line_no, "tag '" + std::string(cols[1]) + "' not in scheme");
    }
    current.tokens.emplace_back(cols[0]);
    current.tags.emplace_back(cols[1]);
  }
  flush();
  return corpus;
}

inline std::string write_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i];
      out += '\t';
      out += s.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

// Raw text: one sentence per line, space-separated tokens. Produces an
// unlabeled corpus with all-O placeholder tags.
inline Corpus parse_raw(std::string_view text, const std::string& language) {
  Corpus corpus;
  corpus.language = language;
  corpus.labeled = false;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    auto tokens = split_ws(lines[n]);
    if (tokens.empty()) continue;
    for (const auto& t : tokens) {
      if (is_reserved_symbol(t)) {
        throw detail::at_line(ErrorCode::kInvalidToken, n + 1, "reserved boundary symbol used as token");
      }
    }
    TaggedSentence s;
    s.tags.assign(tokens.size(), "O");
    s.tokens = std::move(tokens);
    s.language = language;
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

inline std::string write_raw(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    out += join(s.tokens, " ");
    out += '\n';
  }
  return out;
}

inline Corpus strip_labels(const Corpus& corpus) {
  Corpus raw = corpus;
  raw.labeled = false;
  for (auto& s : raw.sentences) s.tags.assign(s.tokens.size(), "O");
  return raw;
}

}  // namespace crop
