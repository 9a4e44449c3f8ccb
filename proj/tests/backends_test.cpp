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


#include <gtest/gtest.h>

#include "crop/backends.hpp"
#include "crop/synthetic.hpp"
#include "support.hpp"

namespace crop {
namespace {

const BoundarySymbolTable kTable;

// Test cipher: g -> q, s -> sx.
Lexicon cipher() { return {{"Gothenburg", "qothenburq"}, {"is", "isx"}, {"A", "A'"}, {"B", "B'"}}; }

TEST(Lexicon, ParseWriteInvert) {
  const auto lex = parse_lexicon("a\tb\nc\td\n\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.at("a"), "b");
  EXPECT_EQ(write_lexicon(lex), "a\tb\nc\td\n");
  EXPECT_TRUE(is_bijective(lex));
  EXPECT_EQ(invert_lexicon(lex).at("d"), "c");
  EXPECT_FALSE(is_bijective({{"a", "x"}, {"b", "x"}}));
  EXPECT_THROW(invert_lexicon({{"a", "x"}, {"b", "x"}}), Error);
  EXPECT_THROW(parse_lexicon("a b\n"), Error);
  EXPECT_THROW(parse_lexicon("a\tb\na\tc\n"), Error);
  EXPECT_THROW(parse_lexicon("a\t\n"), Error);
}

TEST(DictionaryTranslator, CipherExample) {
  auto t = DictionaryTranslator::from_lexicon("en", "xx", cipher());
  const std::vector<Tokens> batch = {{"Gothenburg", "is"}};
  const auto out = t.translate(batch, "en", "xx");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].value(), (Tokens{"qothenburq", "isx"}));
  const std::vector<Tokens> back_batch = {out[0].value()};
  EXPECT_EQ(t.translate(back_batch, "xx", "en")[0].value(), batch[0]);
}

TEST(DictionaryTranslator, ReverseGroups) {
  auto t = DictionaryTranslator::from_lexicon("en", "xx", cipher(), Reorder::kReverseGroups);
  const std::vector<Tokens> batch = {{"__SLOT0__", "A", "__SLOT0__", "B"}};
  EXPECT_EQ(t.translate(batch, "en", "xx")[0].value(), (Tokens{"B'", "__SLOT0__", "A'", "__SLOT0__"}));
  const std::vector<Tokens> groups = {{"x", "__SLOT0__", "A", "B", "__SLOT0__", "__SLOT1__", "is", "__SLOT1__"}};
  EXPECT_EQ(t.translate(groups, "en", "xx")[0].value(),
            (Tokens{"__SLOT1__", "isx", "__SLOT1__", "__SLOT0__", "A'", "B'", "__SLOT0__", "x"}));
}

TEST(DictionaryTranslator, EmptyBatchAndUnknownPair) {
  auto t = DictionaryTranslator::from_lexicon("en", "xx", cipher());
  EXPECT_TRUE(t.translate({}, "en", "xx").empty());
  try {
    const std::vector<Tokens> batch = {{"a"}};
    t.translate(batch, "en", "fr");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownLanguagePair);
  }
}

TEST(DictionaryTranslator, UnknownPolicy) {
  auto copy = DictionaryTranslator::from_lexicon("en", "xx", cipher());
  auto drop = DictionaryTranslator::from_lexicon("en", "xx", cipher(), Reorder::kNone, Reorder::kNone,
                                                 UnknownPolicy::kDrop);
  const std::vector<Tokens> batch = {{"Gothenburg", "rocks", "__SLOT0__"}};
  EXPECT_EQ(copy.translate(batch, "en", "xx")[0].value(), (Tokens{"qothenburq", "rocks", "__SLOT0__"}));
  EXPECT_EQ(drop.translate(batch, "en", "xx")[0].value(), (Tokens{"qothenburq", "__SLOT0__"}));
}

TEST(DictionaryTranslator, NonBijectiveHasNoInverse) {
  auto t = DictionaryTranslator::from_lexicon("en", "xx", {{"a", "z"}, {"b", "z"}});
  EXPECT_TRUE(t.supports("en", "xx"));
  EXPECT_FALSE(t.supports("xx", "en"));
}

TEST(Property, BijectiveIdentityReorderIsInvertible) {
  SyntheticWorld world;
  auto t = DictionaryTranslator::from_lexicon("xs", "xg", world.lexicon());
  const auto corpus = world.source_corpus(200, 3);
  for (const auto& s : corpus.sentences) {
    const std::vector<Tokens> batch = {s.tokens};
    const auto fwd = t.translate(batch, "xs", "xg")[0].value();
    const std::vector<Tokens> back_batch = {fwd};
    ASSERT_EQ(t.translate(back_batch, "xg", "xs")[0].value(), s.tokens);
  }
}

TEST(Property, SymbolConservation) {
  SyntheticWorld world;
  auto t = world.translator();
  const auto corpus = world.source_corpus(300, 4);
  for (const auto& s : corpus.sentences) {
    const auto seq = encode(s, kTable);
    const std::vector<Tokens> batch = {seq.tokens};
    const auto out = translate_conserving(t, batch, "xs", "xg", kTable);
    ASSERT_TRUE(out[0].has_value());
    ASSERT_FALSE(symbol_count_mismatch(seq.tokens, out[0].value(), kTable));
  }
}

class DroppingTranslator : public TranslatorBackend {
 public:
  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string&,
                                           const std::string&) override {
    std::vector<TranslationResult> out;
    for (auto tokens : batch) {
      auto it = std::find(tokens.begin(), tokens.end(), "__SLOT1__");
      if (it != tokens.end()) tokens.erase(it);
      out.emplace_back(tokens);
    }
    return out;
  }
};

TEST(TranslateConserving, FlagsChangedSymbolCounts) {
  DroppingTranslator t;
  const std::vector<Tokens> batch = {{"__SLOT0__", "a", "__SLOT0__"},
                                     {"__SLOT0__", "a", "__SLOT0__", "__SLOT1__", "b", "__SLOT1__"}};
  const auto out = translate_conserving(t, batch, "a", "b", kTable);
  EXPECT_TRUE(out[0].has_value());
  ASSERT_FALSE(out[1].has_value());
  EXPECT_EQ(out[1].error().kind, TranslationFault::Kind::kSymbolCountChanged);
  EXPECT_EQ(out[1].error().slot, 1);
}

class BrokenTagger : public TaggerBackend {
 public:
  explicit BrokenTagger(Tags fixed) : scheme_({"LOC"}), fixed_(std::move(fixed)) {}
  const TagScheme& scheme() const override { return scheme_; }
  std::vector<Tags> tag(std::span<const Tokens> batch) override { return std::vector<Tags>(batch.size(), fixed_); }

 private:
  TagScheme scheme_;
  Tags fixed_;
};

TEST(TagChecked, EnforcesContract) {
  const std::vector<Tokens> batch = {{"a", "b"}};
  BrokenTagger orphan({"O", "I-LOC"});
  EXPECT_THROW(tag_checked(orphan, batch), Error);
  std::vector<bool> repaired;
  EXPECT_EQ(tag_checked(orphan, batch, true, &repaired)[0], (Tags{"O", "B-LOC"}));
  EXPECT_EQ(repaired, std::vector<bool>{true});
  BrokenTagger short_tags({"O"});
  EXPECT_THROW(tag_checked(short_tags, batch, true), Error);
  BrokenTagger foreign({"O", "B-PER"});
  try {
    tag_checked(foreign, batch, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendContractViolation);
  }
  EXPECT_THROW(orphan.train({}), Error);
}

TEST(Gazetteer, ParseAndTag) {
  const auto entries = parse_gazetteer("Gothenburg\tLOC\nNew York City\tLOC\nNew York Times\tORG\nAda\tPER\n");
  ASSERT_EQ(entries.size(), 4u);
  EXPECT_EQ(entries[1].first, (Tokens{"New", "York", "City"}));
  GazetteerTagger g(TagScheme({"LOC", "PER", "ORG"}), entries);
  EXPECT_EQ(g.tag_one({"Ada", "left", "New", "York", "City", "for", "Gothenburg"}),
            (Tags{"B-PER", "O", "B-LOC", "I-LOC", "I-LOC", "O", "B-LOC"}));
  EXPECT_EQ(g.tag_one({"New", "York"}), (Tags{"O", "O"}));
  EXPECT_THROW(parse_gazetteer("no tab here\n"), Error);
  EXPECT_THROW(GazetteerTagger(TagScheme({"LOC"}), entries), Error);
}

TEST(Gazetteer, OracleOnSyntheticWorld) {
  SyntheticWorld world;
  GazetteerTagger g(world.scheme(), world.gazetteer());
  for (const auto& s : world.source_corpus(300, 5).sentences) ASSERT_EQ(g.tag_one(s.tokens), s.tags);
}

TEST(Identity, ReturnsInput) {
  IdentityTranslator t;
  const std::vector<Tokens> batch = {{"a", "__SLOT0__"}};
  EXPECT_EQ(t.translate(batch, "x", "y")[0].value(), batch[0]);
}

TEST(SyntheticWorld, TargetIsGroupReversedCipher) {
  SyntheticWorld world;
  const auto pairs = world.parallel(50, 6);
  const auto inverse = invert_lexicon(world.lexicon());
  for (const auto& p : pairs) {
    ASSERT_EQ(p.source.size(), p.target.size());
    // Entities keep their internal order and their types.
    const auto s_spans = spans_from_tags(p.source.tags);
    const auto t_spans = spans_from_tags(p.target.tags);
    ASSERT_EQ(s_spans.size(), t_spans.size());
    ASSERT_GE(s_spans.size(), 1u);
    for (size_t k = 0; k < s_spans.size(); ++k) {
      const auto& ss = s_spans[k];
      const auto& ts = t_spans[t_spans.size() - 1 - k];
      ASSERT_EQ(ss.etype, ts.etype);
      ASSERT_EQ(ss.end - ss.start, ts.end - ts.start);
      for (int i = 0; i < ss.end - ss.start; ++i) {
        ASSERT_EQ(world.lexicon().at(p.source.tokens[ss.start + i]), p.target.tokens[ts.start + i]);
      }
    }
    // Every alignment link connects a word and its translation.
    for (const auto& [i, j] : p.alignment.links) ASSERT_EQ(inverse.at(p.target.tokens[j]), p.source.tokens[i]);
    for (const auto& tok : p.target.tokens) {
      const char32_t c = utf8_decode(tok)[0];
      ASSERT_TRUE(c >= 0x391 && c <= 0x3c9) << tok;
    }
  }
}

}  // namespace
}  // namespace crop
