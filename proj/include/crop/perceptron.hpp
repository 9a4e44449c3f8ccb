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

// Greedy left-to-right averaged perceptron tagger with BIO-2 constrained
// decoding.

#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"

namespace crop {

struct PerceptronOptions {
  int epochs = 10;
  uint64_t seed = 1;
};

namespace perceptron_detail {

inline std::string word_shape(std::string_view token) {
  std::string shape;
  for (char32_t c : utf8_decode(token)) {
    char k;
    if (c >= '0' && c <= '9') {
      k = 'd';
    } else if (fold_case(c) != c) {
      k = 'X';
    } else if ((c >= 'a' && c <= 'z') || c >= 0x80) {
      k = 'x';
    } else {
      k = '.';
    }
    if (shape.empty() || shape.back() != k) shape += k;
  }
  return shape;
}

// Context-independent features of position i (everything except the
// previous tag).
inline std::vector<std::string> static_features(const Tokens& tokens, size_t i) {
  auto word = [&](long offset) -> std::string {
    const long j = static_cast<long>(i) + offset;
    if (j < 0) return "<s>";
    if (j >= static_cast<long>(tokens.size())) return "</s>";
    return tokens[static_cast<size_t>(j)];
  };
  const std::string& w = tokens[i];
  std::vector<std::string> f;
  f.reserve(16);
  f.push_back("b");
  f.push_back("w=" + w);
  f.push_back("lw=" + fold_case(w));
  f.push_back("w-1=" + word(-1));
  f.push_back("w+1=" + word(1));
  f.push_back("w-2=" + word(-2));
  f.push_back("w+2=" + word(2));
  const auto cps = utf8_decode(w);
  for (size_t len = 1; len <= 3 && len <= cps.size(); ++len) {
    f.push_back("p" + std::to_string(len) + "=" + utf8_encode({cps.begin(), cps.begin() + static_cast<long>(len)}));
    f.push_back("s" + std::to_string(len) + "=" + utf8_encode({cps.end() - static_cast<long>(len), cps.end()}));
  }
  f.push_back("shape=" + word_shape(w));
  return f;
}

}  // namespace perceptron_detail

class PerceptronTagger : public TaggerBackend {
 public:
  explicit PerceptronTagger(TagScheme scheme, PerceptronOptions options = {})
      : scheme_(std::move(scheme)), options_(options) {
    build_transitions();
  }

  const TagScheme& scheme() const override { return scheme_; }
  const PerceptronOptions& options() const { return options_; }
  bool trained() const { return !weights_.empty(); }
  size_t feature_count() const { return feature_names_.size(); }
  const std::vector<double>& weights() const { return weights_; }

  // Weight = per-example multiplicity per epoch: the integer part is copied,
  // the fractional part is a seeded coin flip. Weight 0 excludes a corpus.
  std::shared_ptr<TaggerBackend> train(std::span<const WeightedCorpus> corpora) override {
    auto model = std::make_shared<PerceptronTagger>(scheme_, options_);
    model->fit(corpora);
    return model;
  }

  PerceptronTagger trained_copy(std::span<const WeightedCorpus> corpora) const {
    PerceptronTagger model(scheme_, options_);
    model.fit(corpora);
    return model;
  }

  Tags tag_one(const Tokens& tokens) const {
    Tags out;
    out.reserve(tokens.size());
    int prev = 0;
    std::vector<int> ids;
    for (size_t i = 0; i < tokens.size(); ++i) {
      lookup(perceptron_detail::static_features(tokens, i), ids);
      prev = predict(ids, prev, weights_);
      out.push_back(scheme_.tag_name(prev));
    }
    return out;
  }

  std::vector<Tags> tag(std::span<const Tokens> batch) override {
    std::vector<Tags> out;
    out.reserve(batch.size());
    for (const auto& tokens : batch) out.push_back(tag_one(tokens));
    return out;
  }

  // Text model format: header, entity types, then one line per feature with
  // its name and per-tag weights.
  std::string save() const {
    std::string out = "crop-perceptron 1\n";
    out += "types\t" + join(scheme_.entity_types(), ",") + "\n";
    out += "options\t" + std::to_string(options_.epochs) + "\t" + std::to_string(options_.seed) + "\n";
    out += "features\t" + std::to_string(feature_names_.size()) + "\n";
    const int t = scheme_.tag_count();
    char buf[40];
    for (size_t f = 0; f < feature_names_.size(); ++f) {
      out += feature_names_[f];
      for (int k = 0; k < t; ++k) {
        std::snprintf(buf, sizeof(buf), "\t%.17g", weights_[f * t + k]);
        out += buf;
      }
      out += '\n';
    }
    return out;
  }

  static PerceptronTagger load(std::string_view text) {
    const auto lines = split_lines(text);
    auto bad = [](const std::string& what) { return Error(ErrorCode::kMalformedLine, "perceptron model: " + what); };
    if (lines.size() < 4 || lines[0] != "crop-perceptron 1") throw bad("missing header");
    auto types = split_char(lines[1], '\t');
    if (types.size() != 2 || types[0] != "types") throw bad("missing types line");
    auto opts = split_char(lines[2], '\t');
    long long epochs = 0, seed = 0;
    if (opts.size() != 3 || opts[0] != "options" || !parse_nonnegative_int(opts[1], epochs) ||
        !parse_nonnegative_int(opts[2], seed)) {
      throw bad("missing options line");
    }
    auto feats = split_char(lines[3], '\t');
    long long n = 0;
    if (feats.size() != 2 || feats[0] != "features" || !parse_nonnegative_int(feats[1], n)) {
      throw bad("missing feature count");
    }
    PerceptronTagger model(TagScheme::parse(types[1]),
                           PerceptronOptions{static_cast<int>(epochs), static_cast<uint64_t>(seed)});
    const int t = model.scheme_.tag_count();
    if (lines.size() != static_cast<size_t>(4 + n)) throw bad("feature count does not match body");
    model.weights_.reserve(static_cast<size_t>(n) * t);
    for (long long f = 0; f < n; ++f) {
      auto cols = split_char(lines[static_cast<size_t>(4 + f)], '\t');
      if (cols.size() != static_cast<size_t>(t + 1)) throw bad("bad feature line " + std::to_string(f));
      model.index_.emplace(std::string(cols[0]), static_cast<int>(f));
      model.feature_names_.emplace_back(cols[0]);
      for (int k = 0; k < t; ++k) model.weights_.push_back(std::strtod(std::string(cols[k + 1]).c_str(), nullptr));
    }
    return model;
  }

 private:
  void build_transitions() {
    const int t = scheme_.tag_count();
    allowed_.assign(static_cast<size_t>(t) * t, true);
    for (int prev = 0; prev < t; ++prev) {
      for (int cur = 2; cur < t; cur += 2) {
        // I-X (even id) continues only B-X (cur-1) or I-X (cur).
        allowed_[prev * t + cur] = prev == cur - 1 || prev == cur;
      }
    }
  }

  std::string prev_feature(int prev) const { return "t-1=" + scheme_.tag_name(prev); }

  void lookup(const std::vector<std::string>& names, std::vector<int>& ids) const {
    ids.clear();
    for (const auto& n : names) {
      auto it = index_.find(n);
      if (it != index_.end()) ids.push_back(it->second);
    }
  }

  int intern(const std::string& name) {
    auto [it, inserted] = index_.emplace(name, static_cast<int>(feature_names_.size()));
    if (inserted) feature_names_.push_back(name);
    return it->second;
  }

  // Best allowed tag after `prev`; ties go to the lowest tag id.
  int predict(const std::vector<int>& ids, int prev, const std::vector<double>& w) const {
    const int t = scheme_.tag_count();
    std::vector<double> score(t, 0.0);
    auto add = [&](int f) {
      if (f < 0 || static_cast<size_t>(f) * t >= w.size()) return;
      for (int k = 0; k < t; ++k) score[k] += w[static_cast<size_t>(f) * t + k];
    };
    for (int f : ids) add(f);
    auto pit = index_.find(prev_feature(prev));
    if (pit != index_.end()) add(pit->second);
    int best = -1;
    for (int k = 0; k < t; ++k) {
      if (!allowed_[prev * t + k]) continue;
      if (best < 0 || score[k] > score[best]) best = k;
    }
    return best;
  }

  void fit(std::span<const WeightedCorpus> corpora) {
    struct Example {
      std::vector<std::vector<int>> feats;
      std::vector<int> gold;
      double weight;
    };
    std::vector<Example> examples;
    for (int prev = 0; prev < scheme_.tag_count(); ++prev) intern(prev_feature(prev));
    for (const auto& wc : corpora) {
      if (wc.weight < 0 || !std::isfinite(wc.weight)) {
        throw Error(ErrorCode::kInvalidArgument, "corpus weight must be finite and non-negative");
      }
      for (const auto& s : wc.corpus.sentences) {
        if (s.tokens.size() != s.tags.size()) throw Error(ErrorCode::kLengthMismatch, "tokens/tags differ in length");
        for (const auto& tag : s.tags) {
          if (!scheme_.is_valid_tag(tag)) throw Error(ErrorCode::kSchemeMismatch, "tag '" + tag + "' not in scheme");
        }
      }
      if (wc.weight == 0) continue;
      for (const auto& s : wc.corpus.sentences) {
        if (s.tokens.empty()) continue;
        Example ex;
        ex.weight = wc.weight;
        for (size_t i = 0; i < s.tokens.size(); ++i) {
          std::vector<int> ids;
          for (const auto& name : perceptron_detail::static_features(s.tokens, i)) ids.push_back(intern(name));
          ex.feats.push_back(std::move(ids));
          ex.gold.push_back(*scheme_.tag_index(s.tags[i]));
        }
        examples.push_back(std::move(ex));
      }
    }
    if (examples.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training sentences");

    const int t = scheme_.tag_count();
    const size_t n = feature_names_.size() * static_cast<size_t>(t);
    std::vector<double> w(n, 0.0), total(n, 0.0);
    std::vector<long long> stamp(n, 0);
    long long clock = 0;
    auto update = [&](size_t k, double delta) {
      total[k] += static_cast<double>(clock - stamp[k]) * w[k];
      stamp[k] = clock;
      w[k] += delta;
    };

    Rng rng(options_.seed);
    for (int epoch = 0; epoch < options_.epochs; ++epoch) {
      std::vector<size_t> order;
      for (size_t e = 0; e < examples.size(); ++e) {
        const double weight = examples[e].weight;
        auto copies = static_cast<long long>(std::floor(weight));
        const double frac = weight - static_cast<double>(copies);
        if (frac > 0 && rng.bernoulli(frac)) ++copies;
        for (long long c = 0; c < copies; ++c) order.push_back(e);
      }
      rng.shuffle(order);
      for (size_t e : order) {
        const auto& ex = examples[e];
        int prev = 0;
        for (size_t i = 0; i < ex.gold.size(); ++i) {
          ++clock;
          const int guess = predict(ex.feats[i], prev, w);
          const int gold = ex.gold[i];
          if (guess != gold) {
            const int pf = index_.at(prev_feature(prev));
            for (int f : ex.feats[i]) {
              update(static_cast<size_t>(f) * t + gold, 1.0);
              update(static_cast<size_t>(f) * t + guess, -1.0);
            }
            update(static_cast<size_t>(pf) * t + gold, 1.0);
            update(static_cast<size_t>(pf) * t + guess, -1.0);
          }
          prev = guess;
        }
      }
    }
    weights_.assign(n, 0.0);
    if (clock == 0) return;
    for (size_t k = 0; k < n; ++k) {
      total[k] += static_cast<double>(clock - stamp[k]) * w[k];
      weights_[k] = total[k] / static_cast<double>(clock);
    }
  }

  TagScheme scheme_;
  PerceptronOptions options_;
  std::vector<bool> allowed_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> feature_names_;
  std::vector<double> weights_;
};

}  // namespace crop
