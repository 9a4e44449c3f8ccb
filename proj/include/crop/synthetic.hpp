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

// A synthetic source language (Latin script) and a cipher target language
// (Greek script) related by a bijective word lexicon and group-preserving
// reversal. The target side of every sentence is produced by translating the
// bracketed source sentence, so entity phrases keep their internal order
// while the surrounding word order flips.

#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crop/align_builder.hpp"
#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/labeled_seq.hpp"

namespace crop {

struct SyntheticOptions {
  uint64_t seed = 7;
  std::string source_language = "xs";
  std::string target_language = "xg";
  int filler_words = 400;
  int entities_per_type = 80;
  int min_length = 4;  // filler words per sentence
  int max_length = 14;
  int min_entities = 1;
  int max_entities = 3;
  double cue_probability = 0.6;
  // Probability that a word-alignment link is dropped in generated bitext.
  double drop_link_probability = 0.1;
};

struct SyntheticPair {
  TaggedSentence source;
  TaggedSentence target;
  WordAlignment alignment;
};

class SyntheticWorld {
 public:
  explicit SyntheticWorld(SyntheticOptions options = {}) : options_(std::move(options)), scheme_({"LOC", "PER", "ORG"}) {
    Rng rng(options_.seed);
    std::set<std::string> used;
    auto fresh = [&](bool capital) {
      static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                                "br", "tr", "st", "kl"};
      static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};
      for (;;) {
        std::string w;
        const int syllables = static_cast<int>(rng.uniform_int(2, 3));
        for (int s = 0; s < syllables; ++s) {
          w += kOnsets[rng.uniform(std::size(kOnsets))];
          w += kVowels[rng.uniform(std::size(kVowels))];
        }
        if (capital) w[0] = static_cast<char>(w[0] - 'a' + 'A');
        if (used.insert(fold_case(w)).second) return w;
      }
    };
    for (int i = 0; i < options_.filler_words; ++i) filler_.push_back(fresh(false));
    const char* cues[3][3] = {{"in", "near", "from"}, {"mr", "told", "met"}, {"firm", "joined", "agency"}};
    for (int t = 0; t < 3; ++t) {
      for (const char* c : cues[t]) {
        cues_[t].push_back(c);
        used.insert(c);
      }
    }
    for (int t = 0; t < 3; ++t) {
      for (int e = 0; e < options_.entities_per_type; ++e) {
        Tokens phrase;
        const int len = static_cast<int>(rng.uniform_int(1, 3));
        for (int k = 0; k < len; ++k) phrase.push_back(fresh(true));
        entities_[t].push_back(std::move(phrase));
      }
    }
    build_lexicon(rng);
  }

  const SyntheticOptions& options() const { return options_; }
  const TagScheme& scheme() const { return scheme_; }
  const Lexicon& lexicon() const { return lexicon_; }

  std::vector<std::pair<Tokens, std::string>> gazetteer() const {
    std::vector<std::pair<Tokens, std::string>> out;
    for (int t = 0; t < 3; ++t) {
      for (const auto& p : entities_[t]) out.emplace_back(p, scheme_.entity_types()[t]);
    }
    return out;
  }

  std::string gazetteer_text() const {
    std::string out;
    for (const auto& [phrase, type] : gazetteer()) out += join(phrase, " ") + "\t" + type + "\n";
    return out;
  }

  // Source->target with group reversal; target->source monotone.
  DictionaryTranslator translator() const {
    return DictionaryTranslator::from_lexicon(options_.source_language, options_.target_language, lexicon_,
                                              Reorder::kReverseGroups, Reorder::kNone);
  }

  TaggedSentence source_sentence(Rng& rng) const {
    std::vector<std::pair<Tokens, int>> units;  // type -1 for plain words
    const int len = static_cast<int>(rng.uniform_int(options_.min_length, options_.max_length));
    for (int i = 0; i < len; ++i) units.push_back({{filler_[rng.uniform(filler_.size())]}, -1});
    const int n_entities = static_cast<int>(rng.uniform_int(options_.min_entities, options_.max_entities));
    for (int e = 0; e < n_entities; ++e) {
      const int t = static_cast<int>(rng.uniform(3));
      const auto& phrase = entities_[t][rng.uniform(entities_[t].size())];
      const size_t pos = rng.uniform(units.size() + 1);
      std::vector<std::pair<Tokens, int>> insert;
      if (rng.bernoulli(options_.cue_probability)) insert.push_back({{cues_[t][rng.uniform(3)]}, -1});
      insert.push_back({phrase, t});
      units.insert(units.begin() + static_cast<long>(pos), insert.begin(), insert.end());
    }
    TaggedSentence s;
    s.language = options_.source_language;
    for (const auto& [tokens, t] : units) {
      for (size_t k = 0; k < tokens.size(); ++k) {
        s.tokens.push_back(tokens[k]);
        s.tags.push_back(t < 0 ? "O" : (k == 0 ? "B-" : "I-") + scheme_.entity_types()[t]);
      }
    }
    return s;
  }

  // The target rendering of `source` plus the word alignment between them.
  SyntheticPair translate_pair(const TaggedSentence& source, Rng& rng) const {
    const BoundarySymbolTable table;
    auto translator = this->translator();
    const auto& dir = translator.direction(options_.source_language, options_.target_language);
    const auto encoded = encode(source, table);
    auto decoded = decode(translator.translate_one(encoded.tokens, dir), encoded.slot_types, table,
                          options_.target_language);
    SyntheticPair pair{source, std::move(decoded).value(), {}};

    // Units in source order; the target lists them in reverse.
    const auto spans = spans_from_tags(source.tags);
    std::vector<std::pair<int, int>> units;
    size_t next_span = 0;
    for (int i = 0; i < static_cast<int>(source.size());) {
      if (next_span < spans.size() && spans[next_span].start == i) {
        units.emplace_back(i, spans[next_span].end);
        i = spans[next_span++].end;
      } else {
        units.emplace_back(i, i + 1);
        ++i;
      }
    }
    int tgt_pos = 0;
    for (auto it = units.rbegin(); it != units.rend(); ++it) {
      for (int i = it->first; i < it->second; ++i, ++tgt_pos) {
        if (!rng.bernoulli(options_.drop_link_probability)) pair.alignment.links.emplace_back(i, tgt_pos);
      }
    }
    std::sort(pair.alignment.links.begin(), pair.alignment.links.end());
    return pair;
  }

  // Independent corpora come from distinct streams.
  Corpus source_corpus(size_t n, uint64_t stream) const {
    Rng rng = Rng::derive(options_.seed, stream);
    Corpus c;
    c.language = options_.source_language;
    for (size_t i = 0; i < n; ++i) c.sentences.push_back(source_sentence(rng));
    return c;
  }

  std::vector<SyntheticPair> parallel(size_t n, uint64_t stream) const {
    Rng rng = Rng::derive(options_.seed, stream);
    std::vector<SyntheticPair> out;
    for (size_t i = 0; i < n; ++i) out.push_back(translate_pair(source_sentence(rng), rng));
    return out;
  }

  // Gold-labeled target-language corpus.
  Corpus target_corpus(size_t n, uint64_t stream) const {
    Corpus c;
    c.language = options_.target_language;
    for (auto& p : parallel(n, stream)) c.sentences.push_back(std::move(p.target));
    return c;
  }

 private:
  void build_lexicon(Rng& rng) {
    // Greek letters without final sigma.
    std::vector<char32_t> consonants, vowels;
    for (char32_t c : {U'β', U'γ', U'δ', U'ζ', U'θ', U'κ', U'λ', U'μ', U'ν', U'ξ', U'π', U'ρ', U'σ', U'τ', U'φ', U'χ'})
      consonants.push_back(c);
    for (char32_t c : {U'α', U'ε', U'η', U'ι', U'ο', U'υ', U'ω'}) vowels.push_back(c);
    std::set<std::string> used;
    auto cipher = [&](const std::string& src) {
      const bool capital = !src.empty() && src[0] >= 'A' && src[0] <= 'Z';
      for (;;) {
        std::vector<char32_t> w;
        const int syllables = static_cast<int>(rng.uniform_int(2, 4));
        for (int s = 0; s < syllables; ++s) {
          w.push_back(consonants[rng.uniform(consonants.size())]);
          w.push_back(vowels[rng.uniform(vowels.size())]);
        }
        if (capital) w[0] -= 0x20;  // Greek capitals sit 0x20 below lowercase
        std::string out = utf8_encode(w);
        if (used.insert(fold_case(out)).second) return out;
      }
    };
    for (const auto& w : filler_) lexicon_[w] = cipher(w);
    for (int t = 0; t < 3; ++t) {
      for (const auto& c : cues_[t]) lexicon_[c] = cipher(c);
      for (const auto& phrase : entities_[t]) {
        for (const auto& w : phrase) lexicon_[w] = cipher(w);
      }
    }
  }

  SyntheticOptions options_;
  TagScheme scheme_;
  std::vector<std::string> filler_;
  std::vector<std::string> cues_[3];
  std::vector<Tokens> entities_[3];
  Lexicon lexicon_;
};

}  // namespace crop
