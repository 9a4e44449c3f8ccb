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

// Filters and label refinement applied to pseudo-labeled corpora before
// tagger training.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/external.hpp"

namespace crop {

enum class Script { kUnknown, kLatin, kGreek, kCyrillic, kArmenian, kHebrew, kArabic, kDevanagari, kBengali,
                    kTamil, kThai, kGeorgian, kHangul, kKana, kHan };

inline const char* script_name(Script s) {
  switch (s) {
    case Script::kUnknown: return "Unknown";
    case Script::kLatin: return "Latin";
    case Script::kGreek: return "Greek";
    case Script::kCyrillic: return "Cyrillic";
    case Script::kArmenian: return "Armenian";
    case Script::kHebrew: return "Hebrew";
    case Script::kArabic: return "Arabic";
    case Script::kDevanagari: return "Devanagari";
    case Script::kBengali: return "Bengali";
    case Script::kTamil: return "Tamil";
    case Script::kThai: return "Thai";
    case Script::kGeorgian: return "Georgian";
    case Script::kHangul: return "Hangul";
    case Script::kKana: return "Kana";
    case Script::kHan: return "Han";
  }
  return "Unknown";
}

inline Script parse_script(std::string_view name) {
  for (int s = 0; s <= static_cast<int>(Script::kHan); ++s) {
    if (fold_case(name) == fold_case(script_name(static_cast<Script>(s)))) return static_cast<Script>(s);
  }
  throw Error(ErrorCode::kConfigError, "unknown script '" + std::string(name) + "'");
}

// Script of a letter; kUnknown for digits, punctuation and unlisted blocks.
inline Script script_of(char32_t c) {
  if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return Script::kLatin;
  if (c >= 0xc0 && c <= 0x24f && c != 0xd7 && c != 0xf7) return Script::kLatin;
  if (c >= 0x1e00 && c <= 0x1eff) return Script::kLatin;
  if ((c >= 0x370 && c <= 0x3ff) || (c >= 0x1f00 && c <= 0x1fff)) return Script::kGreek;
  if (c >= 0x400 && c <= 0x52f) return Script::kCyrillic;
  if (c >= 0x530 && c <= 0x58f) return Script::kArmenian;
  if (c >= 0x590 && c <= 0x5ff) return Script::kHebrew;
  if ((c >= 0x600 && c <= 0x6ff) || (c >= 0x750 && c <= 0x77f)) return Script::kArabic;
  if (c >= 0x900 && c <= 0x97f) return Script::kDevanagari;
  if (c >= 0x980 && c <= 0x9ff) return Script::kBengali;
  if (c >= 0xb80 && c <= 0xbff) return Script::kTamil;
  if (c >= 0xe00 && c <= 0xe7f) return Script::kThai;
  if (c >= 0x10a0 && c <= 0x10ff) return Script::kGeorgian;
  if ((c >= 0xac00 && c <= 0xd7af) || (c >= 0x1100 && c <= 0x11ff)) return Script::kHangul;
  if (c >= 0x3040 && c <= 0x30ff) return Script::kKana;
  if ((c >= 0x4e00 && c <= 0x9fff) || (c >= 0x3400 && c <= 0x4dbf)) return Script::kHan;
  return Script::kUnknown;
}

// Script holding the strict majority of letters, kUnknown if none does or
// there are no letters.
inline Script majority_script(const Tokens& tokens) {
  std::map<Script, size_t> counts;
  size_t letters = 0;
  for (const auto& t : tokens) {
    for (char32_t c : utf8_decode(t)) {
      const Script s = script_of(c);
      if (s == Script::kUnknown) continue;
      ++counts[s];
      ++letters;
    }
  }
  for (const auto& [s, n] : counts) {
    if (2 * n > letters) return s;
  }
  return Script::kUnknown;
}

class LanguageVerifier {
 public:
  virtual ~LanguageVerifier() = default;
  virtual bool accept(const Tokens& tokens, const std::string& expected_lang) const = 0;
};

class AcceptAllVerifier : public LanguageVerifier {
 public:
  bool accept(const Tokens&, const std::string&) const override { return true; }
};

// Accepts a sentence when its majority script is the one expected for the
// language. Sentences without letters, and languages with no known script,
// are accepted.
class ScriptVerifier : public LanguageVerifier {
 public:
  ScriptVerifier() {
    for (const char* l : {"en", "de", "es", "nl", "no", "fr", "it", "pt", "af", "eu", "et", "fi", "hu", "id", "jv",
                          "ms", "sw", "tl", "tr", "vi", "yo", "pl", "cs", "ro", "sv", "da"}) {
      scripts_[l] = Script::kLatin;
    }
    for (const char* l : {"ru", "bg", "uk", "kk", "sr"}) scripts_[l] = Script::kCyrillic;
    for (const char* l : {"ar", "fa", "ur"}) scripts_[l] = Script::kArabic;
    for (const char* l : {"hi", "mr"}) scripts_[l] = Script::kDevanagari;
    scripts_["el"] = Script::kGreek;
    scripts_["he"] = Script::kHebrew;
    scripts_["bn"] = Script::kBengali;
    scripts_["ta"] = Script::kTamil;
    scripts_["th"] = Script::kThai;
    scripts_["ka"] = Script::kGeorgian;
    scripts_["ko"] = Script::kHangul;
    scripts_["zh"] = Script::kHan;
  }

  void set_script(const std::string& lang, Script script) { scripts_[lang] = script; }

  bool accept(const Tokens& tokens, const std::string& expected_lang) const override {
    auto it = scripts_.find(expected_lang);
    if (it == scripts_.end()) return true;
    const Script found = majority_script(tokens);
    if (found == Script::kUnknown) return !has_letters(tokens);
    // Japanese text mixes kana and Han.
    if (expected_lang == "ja") return found == Script::kKana || found == Script::kHan;
    return found == it->second;
  }

 private:
  static bool has_letters(const Tokens& tokens) {
    for (const auto& t : tokens) {
      for (char32_t c : utf8_decode(t)) {
        if (script_of(c) != Script::kUnknown) return true;
      }
    }
    return false;
  }

  std::map<std::string, Script> scripts_;
};

// Delegates to a child process: one line "<lang><TAB><space-joined tokens>"
// per query, answered by "1" (accept) or "0" (reject).
class ExternalVerifier : public LanguageVerifier {
 public:
  explicit ExternalVerifier(const std::string& command) : transport_(std::make_unique<StdioTransport>(command)) {}

  bool accept(const Tokens& tokens, const std::string& expected_lang) const override {
    const auto reply = transport_->exchange({expected_lang + "\t" + join(tokens, " ")});
    const auto answer = trim(reply.at(0));
    if (answer == "1" || answer == "true") return true;
    if (answer == "0" || answer == "false") return false;
    throw Error(ErrorCode::kProtocolError, "language verifier answered '" + std::string(answer) + "'");
  }

 private:
  std::unique_ptr<StdioTransport> transport_;
};

inline bool is_all_o(const TaggedSentence& s) {
  return std::all_of(s.tags.begin(), s.tags.end(), [](const std::string& t) { return t == "O"; });
}

template <typename Pred>
Corpus filter_corpus(const Corpus& corpus, Pred keep) {
  Corpus out;
  out.language = corpus.language;
  out.labeled = corpus.labeled;
  for (const auto& s : corpus.sentences) {
    if (keep(s)) out.sentences.push_back(s);
  }
  return out;
}

inline constexpr size_t kDefaultMaxWords = 128;

inline Corpus filter_length(const Corpus& corpus, size_t max_words = kDefaultMaxWords) {
  return filter_corpus(corpus, [&](const TaggedSentence& s) { return s.tokens.size() <= max_words; });
}

inline Corpus filter_all_o(const Corpus& corpus) {
  return filter_corpus(corpus, [](const TaggedSentence& s) { return !is_all_o(s); });
}

inline Corpus filter_language(const Corpus& corpus, const LanguageVerifier& verifier) {
  return filter_corpus(corpus, [&](const TaggedSentence& s) { return verifier.accept(s.tokens, corpus.language); });
}

struct FilterSettings {
  size_t max_words = kDefaultMaxWords;
  std::shared_ptr<const LanguageVerifier> verifier;  // null disables the language filter
};

inline bool passes_filters(const TaggedSentence& s, const std::string& language, const FilterSettings& settings) {
  if (s.tokens.size() > settings.max_words) return false;
  if (is_all_o(s)) return false;
  if (settings.verifier && !settings.verifier->accept(s.tokens, language)) return false;
  return true;
}

inline Corpus apply_filters(const Corpus& corpus, const FilterSettings& settings) {
  return filter_corpus(corpus, [&](const TaggedSentence& s) { return passes_filters(s, corpus.language, settings); });
}

enum class CombinePolicy { kAgree, kPreferMulti, kPreferSrc };

inline CombinePolicy parse_combine_policy(std::string_view name) {
  if (name == "agree") return CombinePolicy::kAgree;
  if (name == "prefer-multi") return CombinePolicy::kPreferMulti;
  if (name == "prefer-src") return CombinePolicy::kPreferSrc;
  throw Error(ErrorCode::kConfigError, "unknown combine policy '" + std::string(name) + "'");
}

// Entity-level merge of two predictions for the same sentence. Entities both
// models agree on are kept. Under a preference, every entity of the preferred
// model is kept, plus entities of the other model that overlap nothing the
// preferred model predicted. kAgree keeps only the agreed entities.
inline Tags combine_labels(const Tags& tags_src_model, const Tags& tags_all_model,
                           CombinePolicy policy = CombinePolicy::kPreferMulti) {
  if (tags_src_model.size() != tags_all_model.size()) {
    throw Error(ErrorCode::kLengthMismatch, "tag sequences of length " + std::to_string(tags_src_model.size()) +
                                                " and " + std::to_string(tags_all_model.size()));
  }
  const auto src = spans_from_tags(tags_src_model);
  const auto all = spans_from_tags(tags_all_model);
  std::vector<EntitySpan> out;
  if (policy == CombinePolicy::kAgree) {
    for (const auto& s : all) {
      if (std::find(src.begin(), src.end(), s) != src.end()) out.push_back(s);
    }
  } else {
    const auto& preferred = policy == CombinePolicy::kPreferMulti ? all : src;
    const auto& other = policy == CombinePolicy::kPreferMulti ? src : all;
    out = preferred;
    for (const auto& s : other) {
      const bool overlaps = std::any_of(preferred.begin(), preferred.end(), [&](const EntitySpan& p) {
        return s.start < p.end && p.start < s.end;
      });
      if (!overlaps) out.push_back(s);
    }
  }
  return tags_from_spans(std::move(out), tags_src_model.size());
}

// Re-tags discarded raw sentences with `tagger_all` and keeps those that now
// carry at least one entity. When `tagger_src` is given, its predictions are
// merged in with `policy`.
inline Corpus relabel(const Corpus& discarded, TaggerBackend& tagger_all, TaggerBackend* tagger_src = nullptr,
                      CombinePolicy policy = CombinePolicy::kPreferMulti) {
  Corpus out;
  out.language = discarded.language;
  out.labeled = true;
  if (discarded.sentences.empty()) return out;
  std::vector<Tokens> batch;
  batch.reserve(discarded.size());
  for (const auto& s : discarded.sentences) batch.push_back(s.tokens);
  auto tags = tag_checked(tagger_all, batch, /*repair=*/true);
  if (tagger_src) {
    const auto src_tags = tag_checked(*tagger_src, batch, /*repair=*/true);
    for (size_t i = 0; i < tags.size(); ++i) tags[i] = combine_labels(src_tags[i], tags[i], policy);
  }
  for (size_t i = 0; i < batch.size(); ++i) {
    TaggedSentence s{batch[i], std::move(tags[i]), discarded.language};
    if (!is_all_o(s)) out.sentences.push_back(std::move(s));
  }
  return out;
}

}  // namespace crop
