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

// Self-training: a source model labels the target raw corpora through
// projection, and a multilingual model is trained on the source corpus plus
// the pseudo-labeled target corpora.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/eval.hpp"
#include "crop/postprocess.hpp"
#include "crop/projection.hpp"

namespace crop {

// Which model re-tags forward translations after the first round.
enum class RetagModel { kMultilingual, kSource };

struct SelfTrainConfig {
  int rounds = 1;
  double src_weight = 1.0;
  double tgt_weight = 1.0;
  // Sampling seed for keep_cap; training seeds live in the tagger options.
  uint64_t seed = 1;
  std::optional<size_t> keep_cap;  // nullopt keeps all pseudo sentences
  bool relabel = true;
  CombinePolicy combine = CombinePolicy::kPreferMulti;
  RetagModel retag = RetagModel::kMultilingual;
  ProjectionConfig projection;
  FilterSettings filters;
};

struct LanguageRoundReport {
  size_t raw = 0;
  size_t projected = 0;  // labeled by projection or re-admitted by relabeling
  size_t relabeled = 0;
  size_t kept = 0;       // entering training after filters and the cap
  ProjectionStats projection;
  std::optional<double> dev_f1;
};

struct RoundReport {
  int round = 0;
  std::map<std::string, LanguageRoundReport> languages;
  bool reused_previous_model = false;
  std::vector<std::string> warnings;
};

struct SelfTrainReport {
  std::map<std::string, std::optional<double>> source_dev_f1;
  std::vector<RoundReport> rounds;

  std::string to_kv() const {
    std::string out;
    auto f1 = [](const std::optional<double>& v) { return v ? format_fixed(*v) : std::string("N/A"); };
    for (const auto& [lang, v] : source_dev_f1) out += "source_model." + lang + ".dev_f1=" + f1(v) + "\n";
    for (const auto& r : rounds) {
      const std::string p = "round" + std::to_string(r.round) + ".";
      out += p + "reused_previous_model=" + (r.reused_previous_model ? "1" : "0") + "\n";
      for (const auto& [lang, l] : r.languages) {
        const std::string q = p + lang + ".";
        out += q + "raw=" + std::to_string(l.raw) + "\n";
        out += q + "projected=" + std::to_string(l.projected) + "\n";
        out += q + "relabeled=" + std::to_string(l.relabeled) + "\n";
        out += q + "kept=" + std::to_string(l.kept) + "\n";
        for (DiscardKind k : kAllDiscardKinds) {
          auto it = l.projection.discarded.find(k);
          out += q + "discard." + discard_kind_name(k) + "=" +
                 std::to_string(it == l.projection.discarded.end() ? 0 : it->second) + "\n";
        }
        out += q + "dev_f1=" + f1(l.dev_f1) + "\n";
      }
    }
    return out;
  }

  std::string to_table() const {
    std::string out;
    char line[200];
    std::snprintf(line, sizeof(line), "%-6s %-8s %8s %10s %10s %8s %8s\n", "round", "lang", "raw", "projected",
                  "relabeled", "kept", "dev_f1");
    out += line;
    for (const auto& r : rounds) {
      for (const auto& [lang, l] : r.languages) {
        const std::string f1 = l.dev_f1 ? format_fixed(100 * *l.dev_f1, 2) : "N/A";
        std::snprintf(line, sizeof(line), "%-6d %-8s %8zu %10zu %10zu %8zu %8s\n", r.round, lang.c_str(), l.raw,
                      l.projected, l.relabeled, l.kept, f1.c_str());
        out += line;
      }
      for (const auto& w : r.warnings) out += "warning: " + w + "\n";
    }
    return out;
  }
};

struct SelfTrainResult {
  std::shared_ptr<TaggerBackend> source_model;
  std::shared_ptr<TaggerBackend> model;
  SelfTrainReport report;
};

inline std::shared_ptr<TaggerBackend> train_source(TaggerBackend& trainer, const Corpus& source_corpus,
                                                   double weight = 1.0) {
  if (source_corpus.sentences.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "source corpus is empty");
  const WeightedCorpus wc{source_corpus, weight};
  return trainer.train(std::span(&wc, 1));
}

// Tags `corpus` with `tagger` and wraps the predictions as a corpus.
inline Corpus predict_corpus(TaggerBackend& tagger, const Corpus& corpus) {
  std::vector<Tokens> batch;
  batch.reserve(corpus.size());
  for (const auto& s : corpus.sentences) batch.push_back(s.tokens);
  Corpus out;
  out.language = corpus.language;
  if (batch.empty()) return out;
  const auto tags = tag_checked(tagger, batch, /*repair=*/true);
  for (size_t i = 0; i < batch.size(); ++i) out.sentences.push_back({batch[i], tags[i], corpus.language});
  return out;
}

namespace detail {

// Uniform sample of `cap` items without replacement, original order kept.
template <typename T>
std::vector<T> sample_keep_order(const std::vector<T>& items, size_t cap, Rng& rng) {
  if (items.size() <= cap) return items;
  std::vector<size_t> idx(items.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(cap);
  for (size_t i : idx) out.push_back(items[i]);
  return out;
}

inline std::shared_ptr<TaggerBackend> train_union(TaggerBackend& trainer, const Corpus& source, double src_weight,
                                                  const std::map<std::string, Corpus>& pseudo, double tgt_weight) {
  std::vector<WeightedCorpus> corpora;
  corpora.push_back({source, src_weight});
  for (const auto& [lang, c] : pseudo) {
    if (!c.sentences.empty()) corpora.push_back({c, tgt_weight});
  }
  return trainer.train(corpora);
}

}  // namespace detail

// Runs `cfg.rounds` rounds of project -> post-process -> train. `trainer`
// supplies the untrained tagger and its training options. Dev corpora, when
// given, are scored after every round.
inline SelfTrainResult self_train(TaggerBackend& trainer, TranslatorBackend& translator, const Corpus& source_corpus,
                                  const std::map<std::string, Corpus>& raw_corpora, const SelfTrainConfig& cfg,
                                  const std::map<std::string, Corpus>& dev_corpora = {}) {
  if (cfg.rounds < 1) throw Error(ErrorCode::kInvalidArgument, "rounds must be at least 1");
  SelfTrainResult result;
  result.source_model = train_source(trainer, source_corpus, cfg.src_weight);
  for (const auto& [lang, dev] : dev_corpora) {
    result.report.source_dev_f1[lang] =
        evaluate(predict_corpus(*result.source_model, dev), dev).overall.f1_if_defined();
  }
  std::shared_ptr<TaggerBackend> current = result.source_model;

  for (int round = 1; round <= cfg.rounds; ++round) {
    RoundReport rr;
    rr.round = round;
    TaggerBackend& projector =
        (round == 1 || cfg.retag == RetagModel::kSource) ? *result.source_model : *current;

    // Projection and post-projection filters, keyed by raw index.
    std::map<std::string, std::vector<std::pair<size_t, TaggedSentence>>> labeled;
    std::map<std::string, Corpus> discards;
    std::map<std::string, std::vector<size_t>> discard_indices;
    for (const auto& [lang, raw_in] : raw_corpora) {
      Corpus raw = raw_in;
      raw.language = lang;
      const auto pseudo = project_corpus(raw, translator, projector, cfg.projection);
      auto& lr = rr.languages[lang];
      lr.raw = raw.size();
      lr.projection = pseudo.stats();
      auto& kept = labeled[lang];
      auto& disc = discards[lang];
      disc.language = lang;
      disc.labeled = false;
      for (const auto& rec : pseudo.records) {
        if (rec.projected) ++lr.projected;
        if (rec.projected && passes_filters(*rec.projected, lang, cfg.filters)) {
          kept.emplace_back(rec.index, *rec.projected);
        } else {
          disc.sentences.push_back(rec.raw);
          discard_indices[lang].push_back(rec.index);
        }
      }
    }

    // Discarded sentences are re-labeled by a multilingual model trained on
    // what projection produced.
    bool any_discards = false;
    for (const auto& [lang, d] : discards) any_discards |= !d.sentences.empty();
    if (cfg.relabel && any_discards) {
      std::map<std::string, Corpus> interim;
      for (const auto& [lang, items] : labeled) {
        Corpus c;
        c.language = lang;
        for (const auto& [idx, s] : items) c.sentences.push_back(s);
        interim[lang] = std::move(c);
      }
      auto relabeler = detail::train_union(trainer, source_corpus, cfg.src_weight, interim, cfg.tgt_weight);
      for (auto& [lang, disc] : discards) {
        if (disc.sentences.empty()) continue;
        std::vector<Tokens> batch;
        for (const auto& s : disc.sentences) batch.push_back(s.tokens);
        const auto multi = tag_checked(*relabeler, batch, true);
        const auto src = tag_checked(*result.source_model, batch, true);
        auto& items = labeled[lang];
        size_t relabeled = 0;
        for (size_t i = 0; i < batch.size(); ++i) {
          TaggedSentence s{batch[i], combine_labels(src[i], multi[i], cfg.combine), lang};
          if (!passes_filters(s, lang, cfg.filters)) continue;
          items.emplace_back(discard_indices[lang][i], std::move(s));
          ++relabeled;
        }
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        rr.languages[lang].relabeled = relabeled;
        rr.languages[lang].projected += relabeled;
      }
    }

    std::map<std::string, Corpus> pseudo_corpora;
    size_t total = 0;
    size_t lang_no = 0;
    for (const auto& [lang, items] : labeled) {
      auto chosen = items;
      if (cfg.keep_cap) {
        Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(round) * 1'000'003ULL + lang_no);
        chosen = detail::sample_keep_order(items, *cfg.keep_cap, rng);
      }
      Corpus c;
      c.language = lang;
      for (auto& [idx, s] : chosen) c.sentences.push_back(std::move(s));
      rr.languages[lang].kept = c.size();
      total += c.size();
      pseudo_corpora[lang] = std::move(c);
      ++lang_no;
    }

    if (total == 0) {
      rr.reused_previous_model = true;
      rr.warnings.push_back("round " + std::to_string(round) + " produced no pseudo-labeled sentences");
    } else {
      current = detail::train_union(trainer, source_corpus, cfg.src_weight, pseudo_corpora, cfg.tgt_weight);
    }

    for (const auto& [lang, dev] : dev_corpora) {
      rr.languages[lang].dev_f1 = evaluate(predict_corpus(*current, dev), dev).overall.f1_if_defined();
    }
    result.report.rounds.push_back(std::move(rr));
  }
  result.model = current;
  return result;
}

}  // namespace crop
