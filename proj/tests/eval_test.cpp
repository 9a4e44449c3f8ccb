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

#include "crop/eval.hpp"
#include "crop/synthetic.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace crop {
namespace {

Corpus one(Tags tags) {
  Corpus c;
  c.sentences.push_back({Tokens(tags.size(), "w"), std::move(tags), ""});
  return c;
}

TEST(Evaluate, Examples) {
  const auto same = evaluate(one({"B-LOC", "O", "B-PER"}), one({"B-LOC", "O", "B-PER"}));
  EXPECT_DOUBLE_EQ(same.overall.precision(), 1.0);
  EXPECT_DOUBLE_EQ(same.overall.recall(), 1.0);
  EXPECT_DOUBLE_EQ(same.overall.f1(), 1.0);

  const auto boundary = evaluate(one({"B-LOC", "O"}), one({"B-LOC", "I-LOC"}));
  EXPECT_EQ(boundary.overall.f1(), 0.0);
  EXPECT_EQ(boundary.overall.precision(), 0.0);

  const auto typed = evaluate(one({"B-LOC", "O", "O", "B-ORG"}), one({"B-LOC", "O", "O", "B-PER"}));
  EXPECT_DOUBLE_EQ(typed.overall.precision(), 0.5);
  EXPECT_DOUBLE_EQ(typed.overall.recall(), 0.5);
  EXPECT_DOUBLE_EQ(typed.overall.f1(), 0.5);
  EXPECT_EQ(typed.per_type.at("ORG").predicted, 1u);
  EXPECT_EQ(typed.per_type.at("PER").gold, 1u);

  const auto none = evaluate(one({"O"}), one({"O"}));
  EXPECT_FALSE(none.overall.defined());
  EXPECT_NE(none.to_kv().find("overall.f1=N/A"), std::string::npos);
  EXPECT_THROW(evaluate(one({"O"}), Corpus{}), Error);
  EXPECT_THROW(evaluate(one({"O"}), one({"O", "O"})), Error);
}

TEST(Evaluate, HandCountedFixture) {
  const auto f = testing::conlleval_fixture();
  const auto r = evaluate(f.pred, f.gold);
  EXPECT_EQ(r.overall.gold, f.overall.gold);
  EXPECT_EQ(r.overall.predicted, f.overall.predicted);
  EXPECT_EQ(r.overall.correct, f.overall.correct);
  EXPECT_NEAR(r.overall.precision(), 5.0 / 12, 1e-12);
  EXPECT_NEAR(r.overall.recall(), 5.0 / 11, 1e-12);
  EXPECT_NEAR(r.overall.f1(), 10.0 / 23, 1e-12);
  ASSERT_EQ(r.per_type.size(), f.per_type.size());
  for (const auto& [type, c] : f.per_type) {
    EXPECT_EQ(r.per_type.at(type).gold, c.gold) << type;
    EXPECT_EQ(r.per_type.at(type).predicted, c.predicted) << type;
    EXPECT_EQ(r.per_type.at(type).correct, c.correct) << type;
  }
  EXPECT_NEAR(r.per_type.at("PER").f1(), 4.0 / 7, 1e-12);
  EXPECT_NEAR(r.per_type.at("ORG").f1(), 0.4, 1e-12);
  EXPECT_EQ(r.per_type.at("MISC").f1(), 0.0);
  const auto table = r.to_table();
  EXPECT_NE(table.find("overall"), std::string::npos);
  const auto conf = write_confusion_conll(f.pred, f.gold);
  EXPECT_NE(conf.find("t1_2\tI-ORG\tO\n"), std::string::npos);
}

TEST(Property, EvaluationSymmetryAndRecount) {
  Rng rng(12);
  const std::vector<std::string> types = {"LOC", "PER", "ORG"};
  for (int i = 0; i < 300; ++i) {
    Corpus a, b;
    for (int k = 0; k < 5; ++k) {
      auto g = testing::random_sentence(rng, types, 15, 4);
      auto p = testing::random_sentence(rng, types, 15, 4);
      p.tokens = g.tokens;
      p.tags.resize(g.tags.size(), "O");
      repair_bio2(p.tags);
      a.sentences.push_back(p);
      b.sentences.push_back(g);
    }
    const auto ab = evaluate(a, b);
    const auto ba = evaluate(b, a);
    ASSERT_DOUBLE_EQ(ab.overall.precision(), ba.overall.recall());
    ASSERT_DOUBLE_EQ(ab.overall.recall(), ba.overall.precision());
    ASSERT_LE(ab.overall.correct, std::min(ab.overall.gold, ab.overall.predicted));
    const auto rc = recount(ab.confusion);
    ASSERT_EQ(rc.gold, ab.overall.gold);
    ASSERT_EQ(rc.predicted, ab.overall.predicted);
    ASSERT_EQ(rc.correct, ab.overall.correct);
  }
}

EvalReport with_f1(size_t gold, size_t pred, size_t correct) {
  EvalReport r;
  r.overall = {gold, pred, correct};
  return r;
}

TEST(Average, Examples) {
  EXPECT_THROW(average_report({}), Error);
  EXPECT_DOUBLE_EQ(average_report({{"de", with_f1(10, 10, 6)}}).macro_f1, 0.6);
  const auto avg = average_report({{"de", with_f1(10, 10, 6)}, {"nl", with_f1(10, 10, 8)}, {"xx", with_f1(0, 0, 0)}});
  EXPECT_NEAR(avg.macro_f1, 0.7, 1e-12);
  EXPECT_NEAR(avg.micro_f1, 0.7, 1e-12);
  EXPECT_EQ(avg.included, (std::vector<std::string>{"de", "nl"}));
  EXPECT_EQ(avg.excluded, (std::vector<std::string>{"xx"}));
  EXPECT_THROW(average_report({{"xx", with_f1(0, 0, 0)}}), Error);
}

std::vector<LabeledTranslationPair> translated_pairs(const SyntheticWorld& world, size_t n) {
  const BoundarySymbolTable table;
  auto t = world.translator();
  const auto& dir = t.direction("xs", "xg");
  std::vector<LabeledTranslationPair> out;
  for (const auto& s : world.source_corpus(n, 8).sentences) {
    auto encoded = encode(s, table);
    out.push_back({encoded, t.translate_one(encoded.tokens, dir)});
  }
  return out;
}

TEST(BoundaryPrecision, Examples) {
  SyntheticWorld world;
  const auto oracle = lexicon_oracle(world.lexicon());
  auto pairs = translated_pairs(world, 200);
  EXPECT_EQ(boundary_precision(pairs, oracle), 1.0);

  pairs.resize(4);
  auto& victim = pairs[2].target;
  victim.erase(std::find(victim.begin(), victim.end(), "__SLOT0__"));
  EXPECT_DOUBLE_EQ(boundary_precision(pairs, oracle), 0.75);
  EXPECT_THROW(boundary_precision({}, oracle), Error);
}

TEST(BoundaryPrecision, JudgmentOracle) {
  const auto oracle = judgment_oracle("New York\tNueva York\t1\nYork\tNueva York\t0\n");
  EXPECT_TRUE(oracle({"New", "York"}, {"Nueva", "York"}));
  EXPECT_FALSE(oracle({"York"}, {"Nueva", "York"}));
  EXPECT_FALSE(oracle({"Boston"}, {"Boston"}));
  EXPECT_THROW(judgment_oracle("a\tb\tmaybe\n"), Error);

  LabeledSequence src{{"__SLOT0__", "New", "York", "__SLOT0__", "is"}, {{0, "LOC"}}, "en"};
  const BoundarySymbolTable table;
  EXPECT_TRUE(boundary_correct({src, {"__SLOT0__", "Nueva", "York", "__SLOT0__", "es"}}, table, oracle));
  // A shifted bracket changes the phrase.
  EXPECT_FALSE(boundary_correct({src, {"Nueva", "__SLOT0__", "York", "__SLOT0__", "es"}}, table, oracle));
}

TEST(ProjectionQuality, HandFixture) {
  Corpus gold;
  gold.language = "de";
  gold.sentences = {{{"Berlin", "und", "Anna"}, {"B-LOC", "O", "B-PER"}, "de"},
                    {{"SAP", "wächst"}, {"B-ORG", "O"}, "de"}};
  Corpus kept;
  kept.language = "de";
  kept.sentences = {{{"Berlin", "und", "Anna"}, {"B-LOC", "O", "O"}, "de"}};
  const auto q = projection_quality(kept, {0}, gold);
  ASSERT_TRUE(q.f1.has_value());
  EXPECT_NEAR(*q.f1, 2.0 / 3, 1e-12);
  EXPECT_DOUBLE_EQ(q.kept_ratio, 0.5);

  const auto empty = projection_quality(Corpus{}, {}, gold);
  EXPECT_FALSE(empty.f1.has_value());
  EXPECT_NE(empty.to_kv().find("projection_f1=N/A"), std::string::npos);
  EXPECT_THROW(projection_quality(kept, {}, gold), Error);
  EXPECT_THROW(projection_quality(kept, {5}, gold), Error);
}

}  // namespace
}  // namespace crop
