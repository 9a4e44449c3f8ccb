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


// Shared helpers for the test suites: random generators, brute-force
// oracles and scratch directories.

#pragma once

#include <stdlib.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crop/crop.hpp"

namespace crop::testing {

inline const std::vector<std::string>& token_pool() {
  static const std::vector<std::string> pool = {
      "the", "Gothenburg", "is", "in", "Sweden", "EU", "rejects", "German", "call", "a", "B", "x1", "3.14", ",", ".",
      "(", ")", "-", "--", "__SLOT", "SLOT0", "__SLOTx__", "_", "Ünïcödé", "哥德堡", "是", "城市", "Москва", "Αθήνα",
      "O", "B-LOC", "I-PER", "#", "e-mail", "can't", "\"quoted\"", "日本", "ναι", "über", "Zürich"};
  return pool;
}

// A valid tagged sentence with 1..max_tokens tokens and at most
// max_entities entity spans over `types`.
inline TaggedSentence random_sentence(Rng& rng, const std::vector<std::string>& types, int max_tokens = 40,
                                      int max_entities = 10, const std::string& language = "xx") {
  const auto& pool = token_pool();
  const int len = static_cast<int>(rng.uniform_int(1, max_tokens));
  TaggedSentence s;
  s.language = language;
  for (int i = 0; i < len; ++i) s.tokens.push_back(pool[rng.uniform(pool.size())]);
  const int k = static_cast<int>(rng.uniform_int(0, std::min(max_entities, len)));
  std::vector<int> positions(len);
  for (int i = 0; i < len; ++i) positions[i] = i;
  rng.shuffle(positions);
  std::vector<int> starts(positions.begin(), positions.begin() + k);
  std::sort(starts.begin(), starts.end());
  std::vector<EntitySpan> spans;
  for (int e = 0; e < k; ++e) {
    const int limit = e + 1 < k ? starts[e + 1] : len;
    const int end = static_cast<int>(rng.uniform_int(starts[e] + 1, limit));
    spans.push_back({starts[e], end, types[rng.uniform(types.size())]});
  }
  s.tags = tags_from_spans(spans, static_cast<size_t>(len));
  return s;
}

inline WordAlignment random_alignment(Rng& rng, int src_len, int tgt_len, double density) {
  WordAlignment a;
  for (int i = 0; i < src_len; ++i) {
    for (int j = 0; j < tgt_len; ++j) {
      if (rng.bernoulli(density)) a.links.emplace_back(i, j);
    }
  }
  return a;
}

// Checks every rectangle against the consistency definition directly.
inline std::vector<PhrasePair> brute_force_phrase_pairs(int src_len, int tgt_len, const WordAlignment& a,
                                                        int max_len) {
  std::set<std::pair<int, int>> links(a.links.begin(), a.links.end());
  auto src_aligned = [&](int i) {
    for (const auto& l : links) {
      if (l.first == i) return true;
    }
    return false;
  };
  auto tgt_aligned = [&](int j) {
    for (const auto& l : links) {
      if (l.second == j) return true;
    }
    return false;
  };
  std::vector<PhrasePair> out;
  for (int s1 = 0; s1 < src_len; ++s1) {
    for (int s2 = s1 + 1; s2 <= src_len; ++s2) {
      for (int t1 = 0; t1 < tgt_len; ++t1) {
        for (int t2 = t1 + 1; t2 <= tgt_len; ++t2) {
          if (s2 - s1 > max_len || t2 - t1 > max_len) continue;
          bool inside = false, consistent = true;
          for (const auto& [i, j] : links) {
            const bool in_s = s1 <= i && i < s2;
            const bool in_t = t1 <= j && j < t2;
            if (in_s && in_t) inside = true;
            if (in_s != in_t) consistent = false;
          }
          if (!inside || !consistent) continue;
          if (!src_aligned(s1) || !src_aligned(s2 - 1) || !tgt_aligned(t1) || !tgt_aligned(t2 - 1)) continue;
          out.push_back({{s1, s2}, {t1, t2}});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Wraps a translator and, for the chosen batch positions, drops one boundary
// symbol or moves one across a neighbouring plain token.
class CorruptingTranslator : public TranslatorBackend {
 public:
  CorruptingTranslator(TranslatorBackend& inner, std::set<size_t> corrupt, uint64_t seed)
      : inner_(inner), corrupt_(std::move(corrupt)), seed_(seed) {}

  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string& src,
                                           const std::string& tgt) override {
    auto out = inner_.translate(batch, src, tgt);
    for (size_t i = 0; i < out.size(); ++i, ++offset_) {
      if (!corrupt_.count(offset_) || !out[i]) continue;
      out[i] = corrupt(out[i].value(), Rng::derive(seed_, offset_));
    }
    return out;
  }

  static Tokens corrupt(Tokens tokens, Rng rng) {
    const BoundarySymbolTable table;
    std::vector<size_t> symbols;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (table.is_symbol(tokens[i])) symbols.push_back(i);
    }
    if (symbols.empty()) return tokens;
    const size_t p = symbols[rng.uniform(symbols.size())];
    if (rng.bernoulli(0.5)) {
      tokens.erase(tokens.begin() + static_cast<long>(p));
      return tokens;
    }
    // Is p the opening or the closing occurrence of its slot?
    bool opening = true;
    for (size_t q : symbols) {
      if (q < p && tokens[q] == tokens[p]) opening = false;
    }
    // Grow the region outward past a plain token when possible, otherwise
    // shrink it inward; both change the bracketed contents.
    const long step = opening ? -1 : 1;
    const long outward = static_cast<long>(p) + step;
    if (outward >= 0 && outward < static_cast<long>(tokens.size()) && !table.is_symbol(tokens[outward])) {
      std::swap(tokens[p], tokens[outward]);
    } else {
      std::swap(tokens[p], tokens[static_cast<long>(p) - step]);
    }
    return tokens;
  }

 private:
  TranslatorBackend& inner_;
  std::set<size_t> corrupt_;
  uint64_t seed_;
  size_t offset_ = 0;
};

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "crop-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

// Runs a shell command, capturing stdout.
inline CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace crop::testing
