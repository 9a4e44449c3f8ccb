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


// A ten-sentence prediction/gold fixture with exact matches, boundary
// errors, type errors and spurious entities. Expected counts were tallied by
// hand, entity by entity.

#pragma once

#include <map>
#include <string>
#include <utility>

#include "crop/corpus_io.hpp"

namespace crop::testing {

struct HandCounts {
  size_t gold, predicted, correct;
};

struct ConllevalFixture {
  Corpus pred;
  Corpus gold;
  HandCounts overall;
  std::map<std::string, HandCounts> per_type;
};

inline ConllevalFixture conlleval_fixture() {
  const std::vector<std::pair<Tags, Tags>> rows = {
      {{"B-PER", "I-PER", "O", "B-LOC"}, {"B-PER", "I-PER", "O", "B-LOC"}},
      {{"B-ORG", "I-ORG", "I-ORG", "O"}, {"B-ORG", "I-ORG", "O", "O"}},
      {{"O", "B-LOC", "O"}, {"O", "B-PER", "O"}},
      {{"O", "O", "O"}, {"B-MISC", "O", "O"}},
      {{"B-LOC", "O", "B-LOC"}, {"O", "O", "B-LOC"}},
      {{"B-PER", "O"}, {"B-PER", "O"}},
      {{"B-ORG", "O", "B-PER", "I-PER"}, {"B-ORG", "O", "B-PER", "O"}},
      {{"B-MISC", "I-MISC"}, {"B-MISC", "B-MISC"}},
      {{"O", "O"}, {"O", "O"}},
      {{"B-LOC", "I-LOC", "O"}, {"B-ORG", "I-ORG", "O"}},
  };
  ConllevalFixture f;
  f.pred.language = f.gold.language = "en";
  for (size_t i = 0; i < rows.size(); ++i) {
    Tokens tokens;
    for (size_t k = 0; k < rows[i].first.size(); ++k) tokens.push_back("t" + std::to_string(i) + "_" + std::to_string(k));
    f.gold.sentences.push_back({tokens, rows[i].first, "en"});
    f.pred.sentences.push_back({tokens, rows[i].second, "en"});
  }
  f.overall = {11, 12, 5};
  f.per_type = {{"LOC", {5, 2, 2}}, {"MISC", {1, 3, 0}}, {"ORG", {2, 3, 1}}, {"PER", {3, 4, 2}}};
  return f;
}

}  // namespace crop::testing
