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


// crop command-line entry point.

#include <openssl/sha.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "crop/crop.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace crop::cli {

constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(std::string_view data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : md) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

// Input files read during a run, keyed by the name the user gave.
class Inputs {
 public:
  std::string read(const std::string& label, const std::string& path) {
    auto text = read_file(path);
    digests_[label] = sha256_hex(text);
    return text;
  }
  const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  std::map<std::string, std::string> digests_;
};

// Output files written during a run, relative to the output directory.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  void write(const std::string& name, std::string_view content) {
    write_file((dir_ / name).string(), content);
    digests_[name] = sha256_hex(content);
  }
  const fs::path& dir() const { return dir_; }
  const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> digests_;
};

void write_manifest(Outputs& out, const std::string& command, const json& settings, const Inputs& inputs,
                    const std::string& config_text = "") {
  json m;
  m["tool"] = "crop";
  m["version"] = kVersion;
  m["command"] = command;
  if (!config_text.empty()) m["config_sha256"] = sha256_hex(config_text);
  m["settings"] = settings;
  m["inputs"] = json::object();
  for (const auto& [k, v] : inputs.digests()) m["inputs"][k] = v;
  m["outputs"] = json::object();
  for (const auto& [k, v] : out.digests()) m["outputs"][k] = v;
  write_file((out.dir() / "manifest.json").string(), m.dump(2) + "\n");
}

// Entity types in order of first appearance in a CoNLL file.
TagScheme infer_scheme(std::string_view conll_text) {
  std::vector<std::string> types;
  std::set<std::string> seen;
  for (auto line : split_lines(conll_text)) {
    const auto cols = split_char(line, '\t');
    if (cols.size() < 2) continue;
    const auto parts = split_tag(trim(cols.back()));
    if (parts && parts->prefix != 'O' && seen.insert(std::string(parts->type)).second) {
      types.emplace_back(parts->type);
    }
  }
  if (types.empty()) types.push_back("MISC");
  return TagScheme(types);
}

TagScheme scheme_for(const std::string& types, std::string_view conll_text) {
  return types.empty() ? infer_scheme(conll_text) : TagScheme::parse(types);
}

// ---------------------------------------------------------------------------
// Run configuration

struct TargetConfig {
  std::string language;
  std::string raw;
  std::string dev;
  std::string gold;
  std::string translator;  // empty: the global spec
};

struct RunConfig {
  std::string path;
  std::string text;
  fs::path base;
  std::string source_language = "en";
  std::vector<std::string> entity_types;
  std::string source_train;
  std::vector<TargetConfig> targets;
  std::string translator;
  std::string tagger = "builtin:perceptron";
  uint64_t seed = 1;
  int epochs = 10;
  int rounds = 1;
  size_t max_words = kDefaultMaxWords;
  std::string lang_verifier = "script";
  std::map<std::string, std::string> scripts;
  std::string combine = "prefer-multi";
  std::string retag = "multi";
  bool relabel = true;
  std::optional<size_t> keep_cap;
  bool case_sensitive = true;
  double src_weight = 1.0;
  double tgt_weight = 1.0;
  int jobs = 0;
  size_t batch_size = 64;
  int timeout_ms = 120000;
  std::string output_dir = "out";

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw Error(ErrorCode::kConfigError, path + ": field '" + field + "': " + what);
  }

  std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    const fs::path fp(p);
    return (fp.is_absolute() ? fp : base / fp).lexically_normal().string();
  }

  std::string existing(const std::string& field, const std::string& p) const {
    const auto r = resolve(p);
    if (!fs::is_regular_file(r)) fail(field, "file '" + p + "' does not exist");
    return r;
  }

  TagScheme scheme() const { return TagScheme(entity_types); }

  json settings() const {
    json s;
    s["source_language"] = source_language;
    s["entity_types"] = entity_types;
    s["translator"] = translator;
    s["tagger"] = tagger;
    s["seed"] = seed;
    s["epochs"] = epochs;
    s["rounds"] = rounds;
    s["max_words"] = max_words;
    s["lang_verifier"] = lang_verifier;
    s["combine"] = combine;
    s["retag"] = retag;
    s["relabel"] = relabel;
    s["keep_cap"] = keep_cap ? json(*keep_cap) : json(nullptr);
    s["case_sensitive"] = case_sensitive;
    s["src_weight"] = src_weight;
    s["tgt_weight"] = tgt_weight;
    s["batch_size"] = batch_size;
    return s;
  }
};

template <typename T>
T field(const RunConfig& cfg, const json& j, const std::string& key, T fallback, const std::string& prefix = "") {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    cfg.fail(prefix + key, "wrong type");
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  cfg.path = path;
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kConfigError, "config file '" + path + "' does not exist");
  cfg.text = read_file(path);
  cfg.base = fs::absolute(path).parent_path();
  json j;
  try {
    j = json::parse(cfg.text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, path + ": top level must be an object");
  static const std::set<std::string> kKnown = {
      "source_language", "entity_types", "source_train", "targets", "translator", "tagger", "seed", "epochs",
      "rounds", "max_words", "lang_verifier", "scripts", "combine", "retag", "relabel", "keep_cap",
      "case_sensitive", "src_weight", "tgt_weight", "jobs", "batch_size", "timeout_ms", "output_dir"};
  for (const auto& [k, v] : j.items()) {
    if (!kKnown.count(k)) cfg.fail(k, "unknown field");
  }
  cfg.source_language = field(cfg, j, "source_language", cfg.source_language);
  cfg.entity_types = field(cfg, j, "entity_types", std::vector<std::string>{});
  if (cfg.entity_types.empty()) cfg.fail("entity_types", "must list at least one type");
  try {
    (void)cfg.scheme();
  } catch (const Error& e) {
    cfg.fail("entity_types", e.what());
  }
  cfg.source_train = field(cfg, j, "source_train", std::string());
  cfg.translator = field(cfg, j, "translator", std::string());
  cfg.tagger = field(cfg, j, "tagger", cfg.tagger);
  cfg.seed = field(cfg, j, "seed", cfg.seed);
  cfg.epochs = field(cfg, j, "epochs", cfg.epochs);
  cfg.rounds = field(cfg, j, "rounds", cfg.rounds);
  cfg.max_words = field(cfg, j, "max_words", cfg.max_words);
  cfg.lang_verifier = field(cfg, j, "lang_verifier", cfg.lang_verifier);
  cfg.scripts = field(cfg, j, "scripts", cfg.scripts);
  cfg.combine = field(cfg, j, "combine", cfg.combine);
  cfg.retag = field(cfg, j, "retag", cfg.retag);
  cfg.relabel = field(cfg, j, "relabel", cfg.relabel);
  if (j.contains("keep_cap") && !j["keep_cap"].is_null()) cfg.keep_cap = field(cfg, j, "keep_cap", size_t{0});
  cfg.case_sensitive = field(cfg, j, "case_sensitive", cfg.case_sensitive);
  cfg.src_weight = field(cfg, j, "src_weight", cfg.src_weight);
  cfg.tgt_weight = field(cfg, j, "tgt_weight", cfg.tgt_weight);
  cfg.jobs = field(cfg, j, "jobs", cfg.jobs);
  cfg.batch_size = field(cfg, j, "batch_size", cfg.batch_size);
  cfg.timeout_ms = field(cfg, j, "timeout_ms", cfg.timeout_ms);
  cfg.output_dir = field(cfg, j, "output_dir", cfg.output_dir);
  if (cfg.epochs < 1) cfg.fail("epochs", "must be at least 1");
  if (cfg.rounds < 1) cfg.fail("rounds", "must be at least 1");
  if (cfg.retag != "multi" && cfg.retag != "source") cfg.fail("retag", "expected 'multi' or 'source'");
  try {
    (void)parse_combine_policy(cfg.combine);
  } catch (const Error&) {
    cfg.fail("combine", "expected agree, prefer-multi or prefer-src");
  }
  if (!j.contains("targets") || !j["targets"].is_array()) cfg.fail("targets", "must be an array");
  for (size_t i = 0; i < j["targets"].size(); ++i) {
    const auto& t = j["targets"][i];
    const std::string prefix = "targets[" + std::to_string(i) + "].";
    if (!t.is_object()) cfg.fail(prefix.substr(0, prefix.size() - 1), "must be an object");
    TargetConfig tc;
    tc.language = field(cfg, t, "language", std::string(), prefix);
    if (tc.language.empty()) cfg.fail(prefix + "language", "missing");
    tc.raw = field(cfg, t, "raw", std::string(), prefix);
    tc.dev = field(cfg, t, "dev", std::string(), prefix);
    tc.gold = field(cfg, t, "gold", std::string(), prefix);
    tc.translator = field(cfg, t, "translator", std::string(), prefix);
    cfg.targets.push_back(std::move(tc));
  }
  if (const char* env = std::getenv("CROP_TRANSLATOR"); env && *env) {
    cfg.translator = env;
    for (auto& t : cfg.targets) t.translator.clear();
  }
  if (const char* env = std::getenv("CROP_TAGGER"); env && *env) cfg.tagger = env;
  return cfg;
}

// ---------------------------------------------------------------------------
// Backends

struct DictSpec {
  std::string lexicon;
  Reorder reorder = Reorder::kNone;
  Reorder inverse = Reorder::kNone;
  UnknownPolicy unknown = UnknownPolicy::kCopy;
};

DictSpec parse_dict_spec(const RunConfig& cfg, const std::string& field_name, const std::string& spec) {
  DictSpec d;
  const auto q = spec.find('?');
  d.lexicon = spec.substr(0, q);
  if (q == std::string::npos) return d;
  auto reorder = [&](std::string_view v) {
    if (v == "none") return Reorder::kNone;
    if (v == "reverse-groups") return Reorder::kReverseGroups;
    cfg.fail(field_name, "unknown reorder '" + std::string(v) + "'");
  };
  for (auto kv : split_char(std::string_view(spec).substr(q + 1), '&')) {
    const auto eq = kv.find('=');
    const auto key = kv.substr(0, eq);
    const auto val = eq == std::string_view::npos ? std::string_view() : kv.substr(eq + 1);
    if (key == "reorder") {
      d.reorder = reorder(val);
    } else if (key == "inverse") {
      d.inverse = reorder(val);
    } else if (key == "unknown") {
      if (val == "copy") {
        d.unknown = UnknownPolicy::kCopy;
      } else if (val == "drop") {
        d.unknown = UnknownPolicy::kDrop;
      } else {
        cfg.fail(field_name, "unknown policy '" + std::string(val) + "'");
      }
    } else {
      cfg.fail(field_name, "unknown option '" + std::string(key) + "'");
    }
  }
  return d;
}

std::unique_ptr<TranslatorBackend> make_translator(const RunConfig& cfg, const std::string& field_name,
                                                   const std::string& spec, const std::string& target_language,
                                                   Inputs& inputs) {
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  if (spec.rfind("builtin:dict:", 0) == 0) {
    const auto d = parse_dict_spec(cfg, field_name, spec.substr(13));
    const auto lex = parse_lexicon(inputs.read(d.lexicon, cfg.existing(field_name, d.lexicon)));
    return std::make_unique<DictionaryTranslator>(DictionaryTranslator::from_lexicon(
        cfg.source_language, target_language, lex, d.reorder, d.inverse, d.unknown));
  }
  if (spec == "builtin:identity") return std::make_unique<IdentityTranslator>();
  if (spec.rfind("external:", 0) == 0) {
    return std::make_unique<ExternalTranslator>(make_transport(spec.substr(9), timeout));
  }
  if (spec.empty()) cfg.fail(field_name, "missing");
  cfg.fail(field_name, "unknown translator spec '" + spec + "'");
}

// Sends each request to the translator of the non-source language.
class RoutingTranslator : public TranslatorBackend {
 public:
  explicit RoutingTranslator(std::string source) : source_(std::move(source)) {}
  void add(const std::string& lang, std::unique_ptr<TranslatorBackend> t) { routes_[lang] = std::move(t); }

  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string& src,
                                           const std::string& tgt) override {
    const auto& other = src == source_ ? tgt : src;
    auto it = routes_.find(other);
    if (it == routes_.end()) throw Error(ErrorCode::kUnknownLanguagePair, src + "->" + tgt);
    return it->second->translate(batch, src, tgt);
  }

  bool single_flight() const override {
    for (const auto& [lang, t] : routes_) {
      if (t->single_flight()) return true;
    }
    return false;
  }

 private:
  std::string source_;
  std::map<std::string, std::unique_ptr<TranslatorBackend>> routes_;
};

std::unique_ptr<RoutingTranslator> make_routing_translator(const RunConfig& cfg, Inputs& inputs) {
  auto router = std::make_unique<RoutingTranslator>(cfg.source_language);
  for (size_t i = 0; i < cfg.targets.size(); ++i) {
    const auto& t = cfg.targets[i];
    const bool own = !t.translator.empty();
    router->add(t.language, make_translator(cfg, own ? "targets[" + std::to_string(i) + "].translator" : "translator",
                                            own ? t.translator : cfg.translator, t.language, inputs));
  }
  return router;
}

Corpus load_source(const RunConfig& cfg, Inputs& inputs) {
  if (cfg.source_train.empty()) cfg.fail("source_train", "missing");
  return parse_conll(inputs.read(cfg.source_train, cfg.existing("source_train", cfg.source_train)), cfg.scheme(),
                     ParseMode::kStrict, cfg.source_language);
}

PerceptronTagger make_perceptron(const RunConfig& cfg) {
  return PerceptronTagger(cfg.scheme(), PerceptronOptions{cfg.epochs, cfg.seed});
}

// A ready-to-use source tagger; builtin:perceptron trains on source_train.
std::shared_ptr<TaggerBackend> make_source_tagger(const RunConfig& cfg, Inputs& inputs) {
  const auto& spec = cfg.tagger;
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  if (spec == "builtin:perceptron") {
    auto trainer = make_perceptron(cfg);
    return train_source(trainer, load_source(cfg, inputs), cfg.src_weight);
  }
  if (spec.rfind("builtin:perceptron:", 0) == 0) {
    const auto path = spec.substr(19);
    auto model = PerceptronTagger::load(inputs.read(path, cfg.existing("tagger", path)));
    if (model.scheme() != cfg.scheme()) cfg.fail("tagger", "model entity types differ from entity_types");
    return std::make_shared<PerceptronTagger>(std::move(model));
  }
  if (spec.rfind("builtin:gazetteer:", 0) == 0) {
    const auto path = spec.substr(18);
    return std::make_shared<GazetteerTagger>(cfg.scheme(),
                                             parse_gazetteer(inputs.read(path, cfg.existing("tagger", path))));
  }
  if (spec.rfind("external:", 0) == 0) {
    return std::make_shared<ExternalTagger>(make_transport(spec.substr(9), timeout), cfg.scheme(),
                                            cfg.source_language);
  }
  cfg.fail("tagger", "unknown tagger spec '" + spec + "'");
}

std::shared_ptr<const LanguageVerifier> make_verifier(const RunConfig& cfg) {
  const auto& v = cfg.lang_verifier;
  if (v == "off") return nullptr;
  if (v == "script") {
    auto verifier = std::make_shared<ScriptVerifier>();
    for (const auto& [lang, script] : cfg.scripts) {
      try {
        verifier->set_script(lang, parse_script(script));
      } catch (const Error&) {
        cfg.fail("scripts." + lang, "unknown script '" + script + "'");
      }
    }
    return verifier;
  }
  if (v.rfind("external:", 0) == 0) return std::make_shared<ExternalVerifier>(v.substr(9));
  cfg.fail("lang_verifier", "expected script, off or external:<cmd>");
}

ProjectionConfig projection_config(const RunConfig& cfg) {
  ProjectionConfig pc;
  pc.source_language = cfg.source_language;
  pc.match.case_sensitive = cfg.case_sensitive;
  pc.max_words = cfg.max_words;
  pc.verifier = make_verifier(cfg);
  pc.batch_size = std::max<size_t>(1, cfg.batch_size);
  pc.jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return pc;
}

Corpus load_raw(const RunConfig& cfg, size_t i, Inputs& inputs) {
  const auto& t = cfg.targets[i];
  const std::string f = "targets[" + std::to_string(i) + "].raw";
  if (t.raw.empty()) cfg.fail(f, "missing");
  return parse_raw(inputs.read(t.raw, cfg.existing(f, t.raw)), t.language);
}

// Command-line overrides shared by project and self-train.
struct Overrides {
  std::string output_dir;
  int jobs = 0;
  std::optional<size_t> max_words;
  std::string lang_verifier;
  std::string combine;

  void apply(RunConfig& cfg) const {
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (jobs > 0) cfg.jobs = jobs;
    if (max_words) cfg.max_words = *max_words;
    if (!lang_verifier.empty()) cfg.lang_verifier = lang_verifier;
    if (!combine.empty()) {
      try {
        (void)parse_combine_policy(combine);
      } catch (const Error&) {
        throw Error(ErrorCode::kConfigError, "--combine: expected agree, prefer-multi or prefer-src");
      }
      cfg.combine = combine;
    }
  }
};

// ---------------------------------------------------------------------------
// Subcommands

int cmd_project(const std::string& config_path, const Overrides& ov) {
  auto cfg = load_config(config_path);
  ov.apply(cfg);
  Inputs inputs;
  auto tagger = make_source_tagger(cfg, inputs);
  const auto pc = projection_config(cfg);
  Outputs out(cfg.resolve(cfg.output_dir));
  for (size_t i = 0; i < cfg.targets.size(); ++i) {
    const auto& t = cfg.targets[i];
    const bool own = !t.translator.empty();
    auto translator = make_translator(cfg, own ? "targets[" + std::to_string(i) + "].translator" : "translator",
                                      own ? t.translator : cfg.translator, t.language, inputs);
    const auto raw = load_raw(cfg, i, inputs);
    const auto pseudo = project_corpus(raw, *translator, *tagger, pc);
    out.write(t.language + ".conll", write_conll(pseudo.kept()));
    out.write(t.language + ".prov.tsv", pseudo.provenance_tsv());
    auto stats = pseudo.stats().to_kv();
    if (!t.gold.empty()) {
      const auto f = "targets[" + std::to_string(i) + "].gold";
      const auto gold = parse_conll(inputs.read(t.gold, cfg.existing(f, t.gold)), cfg.scheme(), ParseMode::kStrict,
                                    t.language);
      const auto q = projection_quality(pseudo, gold);
      stats += "projection_f1=" + (q.f1 ? format_fixed(*q.f1) : std::string("N/A")) + "\n";
    }
    out.write(t.language + ".stats.txt", stats);
    std::cout << stats;
  }
  write_manifest(out, "project", cfg.settings(), inputs, cfg.text);
  return 0;
}

int cmd_self_train(const std::string& config_path, const Overrides& ov) {
  auto cfg = load_config(config_path);
  ov.apply(cfg);
  Inputs inputs;
  const auto source = load_source(cfg, inputs);
  auto translator = make_routing_translator(cfg, inputs);
  std::map<std::string, Corpus> raw, dev;
  for (size_t i = 0; i < cfg.targets.size(); ++i) {
    const auto& t = cfg.targets[i];
    raw[t.language] = load_raw(cfg, i, inputs);
    if (!t.dev.empty()) {
      const auto f = "targets[" + std::to_string(i) + "].dev";
      dev[t.language] =
          parse_conll(inputs.read(t.dev, cfg.existing(f, t.dev)), cfg.scheme(), ParseMode::kStrict, t.language);
    }
  }
  SelfTrainConfig sc;
  sc.rounds = cfg.rounds;
  sc.src_weight = cfg.src_weight;
  sc.tgt_weight = cfg.tgt_weight;
  sc.seed = cfg.seed;
  sc.keep_cap = cfg.keep_cap;
  sc.relabel = cfg.relabel;
  sc.combine = parse_combine_policy(cfg.combine);
  sc.retag = cfg.retag == "source" ? RetagModel::kSource : RetagModel::kMultilingual;
  sc.projection = projection_config(cfg);
  sc.filters.max_words = cfg.max_words;
  sc.filters.verifier = sc.projection.verifier;

  std::unique_ptr<TaggerBackend> trainer;
  if (cfg.tagger == "builtin:perceptron") {
    trainer = std::make_unique<PerceptronTagger>(make_perceptron(cfg));
  } else if (cfg.tagger.rfind("external:", 0) == 0) {
    trainer = std::make_unique<ExternalTagger>(make_transport(cfg.tagger.substr(9), std::chrono::milliseconds(cfg.timeout_ms)),
                                               cfg.scheme(), cfg.source_language);
  } else {
    cfg.fail("tagger", "self-train needs a trainable tagger (builtin:perceptron or external:)");
  }
  const auto result = self_train(*trainer, *translator, source, raw, sc, dev);

  Outputs out(cfg.resolve(cfg.output_dir));
  if (auto* p = dynamic_cast<PerceptronTagger*>(result.model.get())) out.write("model.txt", p->save());
  if (auto* p = dynamic_cast<PerceptronTagger*>(result.source_model.get())) out.write("source_model.txt", p->save());
  for (const auto& [lang, d] : dev) out.write(lang + ".dev.pred.conll", write_conll(predict_corpus(*result.model, d)));
  out.write("report.kv", result.report.to_kv());
  out.write("report.txt", result.report.to_table());
  write_manifest(out, "self-train", cfg.settings(), inputs, cfg.text);
  std::cout << result.report.to_table();
  return 0;
}

int cmd_train(const std::string& input, const std::string& types, const std::string& lang, const std::string& model,
              int epochs, uint64_t seed) {
  Inputs inputs;
  const auto text = inputs.read(input, input);
  const auto scheme = scheme_for(types, text);
  const auto corpus = parse_conll(text, scheme, ParseMode::kStrict, lang);
  PerceptronTagger trainer(scheme, PerceptronOptions{epochs, seed});
  auto trained = train_source(trainer, corpus);
  const auto saved = dynamic_cast<PerceptronTagger&>(*trained).save();
  const fs::path mp(model);
  Outputs out(mp.has_parent_path() ? mp.parent_path() : fs::path("."));
  out.write(mp.filename().string(), saved);
  json settings;
  settings["entity_types"] = scheme.entity_types();
  settings["epochs"] = epochs;
  settings["seed"] = seed;
  write_file(model + ".manifest.json", [&] {
    json m;
    m["tool"] = "crop";
    m["version"] = kVersion;
    m["command"] = "train";
    m["settings"] = settings;
    m["inputs"] = inputs.digests();
    m["outputs"] = out.digests();
    return m.dump(2) + "\n";
  }());
  std::cout << "trained on " << corpus.size() << " sentences\n";
  return 0;
}

int cmd_tag(const std::string& model, const std::string& input, const std::string& lang, const std::string& output) {
  const auto tagger = PerceptronTagger::load(read_file(model));
  const auto text = read_file(input);
  // CoNLL input keeps its tokens; raw input is one sentence per line.
  const bool conll = text.find('\t') != std::string::npos;
  const Corpus raw = conll ? strip_labels(parse_conll(text, tagger.scheme(), ParseMode::kRepair, lang))
                           : parse_raw(text, lang);
  PerceptronTagger copy = tagger;
  const auto pred = write_conll(predict_corpus(copy, raw));
  if (output.empty()) {
    std::cout << pred;
  } else {
    write_file(output, pred);
  }
  return 0;
}

int cmd_eval(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
             std::vector<std::string> langs, const std::string& types, const std::string& format, bool micro,
             const std::string& confusion) {
  if (preds.size() != golds.size()) throw Error(ErrorCode::kInvalidArgument, "--pred and --gold counts differ");
  if (langs.empty() && preds.size() == 1) langs.push_back("all");
  if (langs.size() != preds.size()) throw Error(ErrorCode::kInvalidArgument, "give one --lang per --pred/--gold pair");
  if (!confusion.empty() && preds.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "--confusion needs a single --pred/--gold pair");
  }
  std::map<std::string, EvalReport> reports;
  for (size_t i = 0; i < preds.size(); ++i) {
    const auto gold_text = read_file(golds[i]);
    const auto scheme = scheme_for(types, gold_text + "\n" + read_file(preds[i]));
    const auto gold = parse_conll(gold_text, scheme, ParseMode::kStrict, langs[i]);
    const auto pred = parse_conll(read_file(preds[i]), scheme, ParseMode::kStrict, langs[i]);
    auto report = evaluate(pred, gold);
    if (!confusion.empty()) write_file(confusion, write_confusion_conll(pred, gold));
    if (reports.count(langs[i])) throw Error(ErrorCode::kInvalidArgument, "duplicate --lang " + langs[i]);
    reports.emplace(langs[i], std::move(report));
  }
  for (const auto& [lang, r] : reports) {
    if (format == "kv") {
      std::cout << r.to_kv(reports.size() == 1 ? "" : lang + ".");
    } else {
      if (reports.size() > 1) std::cout << "[" << lang << "]\n";
      std::cout << r.to_table();
    }
  }
  if (reports.size() > 1) {
    const auto avg = average_report(reports);
    std::cout << "macro_f1=" << format_fixed(avg.macro_f1) << "\n";
    if (micro) std::cout << "micro_f1=" << format_fixed(avg.micro_f1) << "\n";
    if (!avg.excluded.empty()) std::cout << "excluded=" << join(avg.excluded, ",") << "\n";
  }
  return 0;
}

int cmd_boundary_precision(const std::string& src_tokens, const std::string& slots, const std::string& target,
                           const std::string& lexicon, const std::string& judgments) {
  if (lexicon.empty() == judgments.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --lexicon or --judgments");
  }
  const auto sources = parse_labeled_sequences(read_file(src_tokens), read_file(slots), "");
  const auto targets = parse_token_lines(read_file(target));
  if (sources.size() != targets.size()) {
    throw Error(ErrorCode::kCorpusMismatch, std::to_string(sources.size()) + " source lines vs " +
                                                std::to_string(targets.size()) + " target lines");
  }
  std::vector<LabeledTranslationPair> pairs;
  for (size_t i = 0; i < sources.size(); ++i) pairs.push_back({sources[i], targets[i]});
  const auto oracle = lexicon.empty() ? judgment_oracle(read_file(judgments)) : lexicon_oracle(parse_lexicon(read_file(lexicon)));
  std::cout << "pairs=" << pairs.size() << "\nboundary_precision=" << format_fixed(boundary_precision(pairs, oracle))
            << "\n";
  return 0;
}

int cmd_projection_quality(const std::string& pseudo_path, const std::string& prov, const std::string& gold_path,
                           const std::string& lang, const std::string& types) {
  const auto gold_text = read_file(gold_path);
  const auto scheme = scheme_for(types, gold_text);
  const std::string language = lang.empty() ? "target" : lang;
  const auto gold = parse_conll(gold_text, scheme, ParseMode::kStrict, language);
  const auto kept = parse_conll(read_file(pseudo_path), scheme, ParseMode::kStrict, language);
  std::cout << projection_quality(kept, parse_kept_indices(read_file(prov)), gold).to_kv();
  return 0;
}

int cmd_validate(const std::string& input, const std::string& types, const std::string& format,
                 const std::string& lang, const std::string& repaired_out) {
  const auto text = read_file(input);
  if (format == "raw") {
    const auto c = parse_raw(text, lang);
    size_t tokens = 0;
    for (const auto& s : c.sentences) tokens += s.tokens.size();
    std::cout << "sentences=" << c.size() << "\ntokens=" << tokens << "\n";
    return 0;
  }
  const auto scheme = scheme_for(types, text);
  std::vector<bool> repaired;
  const auto c = parse_conll(text, scheme, repaired_out.empty() ? ParseMode::kStrict : ParseMode::kRepair, lang,
                             &repaired);
  validate_corpus(c, scheme);
  size_t tokens = 0, entities = 0;
  for (const auto& s : c.sentences) {
    tokens += s.tokens.size();
    entities += spans_from_tags(s.tags).size();
  }
  std::cout << "sentences=" << c.size() << "\ntokens=" << tokens << "\nentities=" << entities << "\n";
  if (!repaired_out.empty()) {
    std::cout << "repaired=" << std::count(repaired.begin(), repaired.end(), true) << "\n";
    write_file(repaired_out, write_conll(c));
  }
  return 0;
}

int cmd_encode(const std::string& input, const std::string& types, const std::string& lang,
               const std::string& tokens_out, const std::string& slots_out) {
  const auto text = read_file(input);
  const auto corpus = parse_conll(text, scheme_for(types, text), ParseMode::kStrict, lang);
  const BoundarySymbolTable table;
  std::vector<LabeledSequence> seqs;
  for (const auto& s : corpus.sentences) seqs.push_back(encode(s, table));
  const auto files = write_labeled_sequences(seqs);
  write_file(tokens_out, files.tokens);
  write_file(slots_out, files.slots);
  return 0;
}

int cmd_decode(const std::string& tokens, const std::string& slots, const std::string& lang,
               const std::string& output, bool skip_failures) {
  const auto seqs = parse_labeled_sequences(read_file(tokens), read_file(slots), lang);
  const BoundarySymbolTable table;
  Corpus out;
  out.language = lang;
  size_t failures = 0;
  for (size_t i = 0; i < seqs.size(); ++i) {
    auto d = decode(seqs[i], table);
    if (d) {
      out.sentences.push_back(std::move(d).value());
    } else {
      ++failures;
      std::cerr << "line " << i + 1 << ": " << d.error().describe() << "\n";
    }
  }
  write_file(output, write_conll(out));
  std::cout << "decoded=" << out.size() << "\nfailed=" << failures << "\n";
  return failures > 0 && !skip_failures ? 2 : 0;
}

struct BuildCorpusArgs {
  std::string src, tgt, align, src_lang, tgt_lang, output_dir, mode = "alternate";
  double alpha = 0.5;
  int k_max = 10, max_phrase_len = 7;
  uint64_t seed = 0;
};

int cmd_build_corpus(const BuildCorpusArgs& a) {
  Inputs inputs;
  const auto src = parse_token_lines(inputs.read(a.src, a.src));
  const auto tgt = parse_token_lines(inputs.read(a.tgt, a.tgt));
  const auto aligns = parse_pharaoh(inputs.read(a.align, a.align));
  if (src.size() != tgt.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(src.size()) + " source lines vs " +
                                                std::to_string(tgt.size()) + " target lines");
  }
  std::vector<BitextPair> bitext;
  for (size_t i = 0; i < src.size(); ++i) bitext.push_back({src[i], tgt[i]});
  MixConfig mc;
  mc.alpha = a.alpha;
  mc.k_max = a.k_max;
  mc.seed = a.seed;
  mc.max_phrase_len = a.max_phrase_len;
  if (a.mode == "alternate") {
    mc.mode = MixMode::kAlternate;
  } else if (a.mode == "bernoulli") {
    mc.mode = MixMode::kBernoulli;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--mode must be alternate or bernoulli");
  }
  const auto mixed = emit_mixed_corpus(bitext, aligns, mc, a.src_lang, a.tgt_lang);
  const auto files = write_mixed_corpus(mixed);
  Outputs out(a.output_dir);
  out.write("mixed.src", files.src);
  out.write("mixed.tgt", files.tgt);
  out.write("mixed.slots", files.slots);
  const auto labeled = std::count_if(mixed.begin(), mixed.end(), [](const auto& e) { return e.labeled; });
  json settings;
  settings["alpha"] = a.alpha;
  settings["k_max"] = a.k_max;
  settings["seed"] = a.seed;
  settings["mode"] = a.mode;
  settings["max_phrase_len"] = a.max_phrase_len;
  settings["src_lang"] = a.src_lang;
  settings["tgt_lang"] = a.tgt_lang;
  write_manifest(out, "build-corpus", settings, inputs);
  std::cout << "pairs=" << mixed.size() << "\nlabeled=" << labeled << "\nplain=" << mixed.size() - labeled << "\n";
  return 0;
}

struct SynthArgs {
  std::string output_dir;
  uint64_t seed = 7;
  size_t source = 1000, raw = 2000, dev = 500, parallel = 1000;
};

int cmd_synth(const SynthArgs& a) {
  SyntheticOptions opts;
  opts.seed = a.seed;
  const SyntheticWorld world(opts);
  Outputs out(a.output_dir);
  out.write("lexicon.tsv", write_lexicon(world.lexicon()));
  out.write("gazetteer.tsv", world.gazetteer_text());
  out.write("source.conll", write_conll(world.source_corpus(a.source, 1)));
  out.write("dev.conll", write_conll(world.target_corpus(a.dev, 2)));
  const auto raw_gold = world.target_corpus(a.raw, 3);
  out.write("raw.txt", write_raw(raw_gold));
  out.write("raw.gold.conll", write_conll(raw_gold));
  std::string bsrc, btgt;
  std::vector<WordAlignment> aligns;
  for (const auto& p : world.parallel(a.parallel, 4)) {
    bsrc += join(p.source.tokens, " ") + "\n";
    btgt += join(p.target.tokens, " ") + "\n";
    aligns.push_back(p.alignment);
  }
  out.write("bitext.src", bsrc);
  out.write("bitext.tgt", btgt);
  out.write("bitext.align", write_pharaoh(aligns));
  json cfg;
  cfg["source_language"] = opts.source_language;
  cfg["entity_types"] = world.scheme().entity_types();
  cfg["source_train"] = "source.conll";
  cfg["targets"] = json::array(
      {json{{"language", opts.target_language}, {"raw", "raw.txt"}, {"dev", "dev.conll"}, {"gold", "raw.gold.conll"}}});
  cfg["translator"] = "builtin:dict:lexicon.tsv?reorder=reverse-groups";
  cfg["tagger"] = "builtin:perceptron";
  cfg["seed"] = 1;
  cfg["epochs"] = 10;
  cfg["rounds"] = 1;
  cfg["lang_verifier"] = "script";
  cfg["scripts"] = json{{opts.source_language, "Latin"}, {opts.target_language, "Greek"}};
  cfg["output_dir"] = "out";
  out.write("run.json", cfg.dump(2) + "\n");
  json settings;
  settings["seed"] = a.seed;
  settings["source"] = a.source;
  settings["raw"] = a.raw;
  settings["dev"] = a.dev;
  settings["parallel"] = a.parallel;
  write_manifest(out, "synth", settings, Inputs{});
  return 0;
}

int exit_code(ErrorCode code) {
  switch (error_class(code)) {
    case ErrorClass::kUsage: return 1;
    case ErrorClass::kData: return 2;
    case ErrorClass::kBackend: return 3;
  }
  return 2;
}

int run(int argc, char** argv) {
  CLI::App app{"crop: cross-lingual NER projection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Overrides ov;
  std::string config;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration (JSON)")->required();
    sub->add_option("--output-dir", ov.output_dir, "override output_dir");
    sub->add_option("--jobs", ov.jobs, "worker threads (default: available cores)");
    sub->add_option("--max-words", ov.max_words, "length filter limit");
    sub->add_option("--lang-verifier", ov.lang_verifier, "script | off | external:<cmd>");
    sub->add_option("--combine", ov.combine, "agree | prefer-multi | prefer-src");
  };
  auto* project = app.add_subcommand("project", "pseudo-label target raw corpora by projection");
  add_overrides(project);
  auto* self = app.add_subcommand("self-train", "project, post-process and train a multilingual tagger");
  add_overrides(self);

  std::string input, types, lang, model, output;
  int epochs = 10;
  uint64_t seed = 1;
  auto* train = app.add_subcommand("train", "train a perceptron tagger on a CoNLL corpus");
  train->add_option("--input", input)->required();
  train->add_option("--model", model)->required();
  train->add_option("--types", types, "entity types, e.g. LOC,PER,ORG (default: from the data)");
  train->add_option("--lang", lang);
  train->add_option("--epochs", epochs);
  train->add_option("--seed", seed);

  auto* tag = app.add_subcommand("tag", "tag raw or CoNLL text with a trained model");
  tag->add_option("--model", model)->required();
  tag->add_option("--input", input)->required();
  tag->add_option("--lang", lang);
  tag->add_option("--output", output);

  std::vector<std::string> preds, golds, langs;
  std::string format = "table", confusion;
  bool micro = false;
  auto* eval = app.add_subcommand("eval", "entity-level precision, recall and F1");
  eval->add_option("--pred", preds)->required();
  eval->add_option("--gold", golds)->required();
  eval->add_option("--lang", langs);
  eval->add_option("--types", types);
  eval->add_option("--format", format)->check(CLI::IsMember({"table", "kv"}));
  eval->add_flag("--micro", micro, "also report micro-averaged F1");
  eval->add_option("--confusion", confusion, "write token/gold/pred columns");

  std::string src_tokens, slots, target, lexicon, judgments;
  auto* bp = app.add_subcommand("boundary-precision", "boundary precision of labeled translations");
  bp->add_option("--source-tokens", src_tokens)->required();
  bp->add_option("--slots", slots)->required();
  bp->add_option("--target", target)->required();
  bp->add_option("--lexicon", lexicon);
  bp->add_option("--judgments", judgments);

  std::string pseudo, prov, gold;
  auto* pq = app.add_subcommand("projection-quality", "F1 of kept pseudo labels against gold labels");
  pq->add_option("--pseudo", pseudo)->required();
  pq->add_option("--prov", prov)->required();
  pq->add_option("--gold", gold)->required();
  pq->add_option("--lang", lang);
  pq->add_option("--types", types);

  std::string repaired_out;
  format = "table";
  std::string vformat = "conll";
  auto* validate = app.add_subcommand("validate", "check a corpus file");
  validate->add_option("--input", input)->required();
  validate->add_option("--types", types);
  validate->add_option("--format", vformat)->check(CLI::IsMember({"conll", "raw"}));
  validate->add_option("--lang", lang);
  validate->add_option("--repair", repaired_out, "write a repaired copy here");

  std::string tokens_out, slots_out;
  auto* enc = app.add_subcommand("encode", "CoNLL to labeled sequences");
  enc->add_option("--input", input)->required();
  enc->add_option("--types", types);
  enc->add_option("--lang", lang);
  enc->add_option("--tokens-out", tokens_out)->required();
  enc->add_option("--slots-out", slots_out)->required();

  bool skip_failures = false;
  auto* dec = app.add_subcommand("decode", "labeled sequences to CoNLL");
  dec->add_option("--tokens", src_tokens)->required();
  dec->add_option("--slots", slots)->required();
  dec->add_option("--lang", lang);
  dec->add_option("--output", output)->required();
  dec->add_flag("--skip-failures", skip_failures, "exit 0 even if some lines fail to decode");

  BuildCorpusArgs bc;
  auto* build = app.add_subcommand("build-corpus", "mix plain and labeled parallel sentences");
  build->add_option("--src", bc.src)->required();
  build->add_option("--tgt", bc.tgt)->required();
  build->add_option("--align", bc.align, "Pharaoh alignments")->required();
  build->add_option("--output-dir", bc.output_dir)->required();
  build->add_option("--alpha", bc.alpha, "fraction of labeled pairs");
  build->add_option("--k-max", bc.k_max);
  build->add_option("--seed", bc.seed);
  build->add_option("--mode", bc.mode, "alternate | bernoulli");
  build->add_option("--max-phrase-len", bc.max_phrase_len);
  build->add_option("--src-lang", bc.src_lang);
  build->add_option("--tgt-lang", bc.tgt_lang);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write a synthetic source/cipher dataset and run config");
  synth->add_option("--output-dir", sa.output_dir)->required();
  synth->add_option("--seed", sa.seed);
  synth->add_option("--source", sa.source, "labeled source sentences");
  synth->add_option("--raw", sa.raw, "raw target sentences");
  synth->add_option("--dev", sa.dev, "gold target sentences");
  synth->add_option("--parallel", sa.parallel, "aligned sentence pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (project->parsed()) return cmd_project(config, ov);
    if (self->parsed()) return cmd_self_train(config, ov);
    if (train->parsed()) return cmd_train(input, types, lang, model, epochs, seed);
    if (tag->parsed()) return cmd_tag(model, input, lang, output);
    if (eval->parsed()) return cmd_eval(preds, golds, langs, types, format, micro, confusion);
    if (bp->parsed()) return cmd_boundary_precision(src_tokens, slots, target, lexicon, judgments);
    if (pq->parsed()) return cmd_projection_quality(pseudo, prov, gold, lang, types);
    if (validate->parsed()) return cmd_validate(input, types, vformat, lang, repaired_out);
    if (enc->parsed()) return cmd_encode(input, types, lang, tokens_out, slots_out);
    if (dec->parsed()) return cmd_decode(src_tokens, slots, lang, output, skip_failures);
    if (build->parsed()) return cmd_build_corpus(bc);
    if (synth->parsed()) return cmd_synth(sa);
  } catch (const Error& e) {
    std::cerr << "crop: error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "crop: error: IoError: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace crop::cli

int main(int argc, char** argv) { return crop::cli::run(argc, argv); }
