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

#include <atomic>
#include <thread>

#include "crop/external.hpp"
#include "crop/postprocess.hpp"
#include "crop/projection.hpp"
#include "crop/synthetic.hpp"
#include "support.hpp"

namespace crop {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

std::string fake(const std::string& args) { return std::string(CROP_FAKE_BACKEND) + " " + args; }

TEST(Wire, EncodeRequest) {
  const auto line = encode_request({7, "translate", "de", "en", {"a", "__SLOT0__"}});
  const auto j = json::parse(line);
  EXPECT_EQ(j["id"], 7);
  EXPECT_EQ(j["op"], "translate");
  EXPECT_EQ(j["src"], "de");
  EXPECT_EQ(j["tgt"], "en");
  EXPECT_EQ(j["tokens"], json::array({"a", "__SLOT0__"}));
  EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(Wire, DecodeResponse) {
  auto r = decode_response(R"({"id": 3, "tokens": ["x", "y"]})");
  EXPECT_EQ(r.id, 3);
  EXPECT_EQ(*r.tokens, (Tokens{"x", "y"}));
  r = decode_response(R"({"id": 4, "tags": ["O"]})");
  EXPECT_EQ(*r.tags, (Tags{"O"}));
  r = decode_response(R"({"id": 5, "error": "boom"})");
  EXPECT_EQ(*r.error, "boom");
  for (const char* bad : {"{not json", R"({"tokens": []})", R"({"id": "1", "tokens": []})",
                          R"({"id": 1})", R"({"id": 1, "tokens": [], "error": "x"})", R"({"id": 1, "tokens": [1]})",
                          R"({"id": 1, "tags": "O"})", "[1,2]"}) {
    EXPECT_EQ(code_of([&] { decode_response(bad); }), ErrorCode::kProtocolError) << bad;
  }
}

class StdioFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file(dir_.file("lex.tsv"), write_lexicon(world_.lexicon()));
    write_file(dir_.file("gaz.tsv"), world_.gazetteer_text());
  }
  std::string serve_args() const {
    return "--lexicon " + dir_.file("lex.tsv") + " --gazetteer " + dir_.file("gaz.tsv") + " --reverse";
  }

  SyntheticWorld world_;
  testing::TempDir dir_;
};

TEST_F(StdioFixture, TranslateMatchesBuiltIn) {
  ExternalTranslator ext(std::make_unique<StdioTransport>(fake("--mode serve " + serve_args())));
  EXPECT_TRUE(ext.single_flight());
  auto builtin = world_.translator();
  const BoundarySymbolTable table;
  std::vector<Tokens> batch;
  for (const auto& s : world_.source_corpus(150, 1).sentences) batch.push_back(encode(s, table).tokens);
  const auto got = ext.translate(batch, "xs", "xg");
  const auto want = builtin.translate(batch, "xs", "xg");
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].value(), want[i].value());
  // The child stays up between batches.
  EXPECT_EQ(ext.translate(std::span(batch).first(2), "xs", "xg")[1].value(), want[1].value());
  EXPECT_TRUE(ext.translate({}, "xs", "xg").empty());
}

TEST_F(StdioFixture, TagMatchesGazetteer) {
  ExternalTagger ext(std::make_unique<StdioTransport>(fake("--mode serve " + serve_args())), world_.scheme(), "xs");
  GazetteerTagger builtin(world_.scheme(), world_.gazetteer());
  std::vector<Tokens> batch;
  for (const auto& s : world_.source_corpus(100, 2).sentences) batch.push_back(s.tokens);
  EXPECT_EQ(ext.tag(batch), builtin.tag(batch));
}

TEST_F(StdioFixture, DroppedSymbolIsContractViolation) {
  ExternalTranslator ext(std::make_unique<StdioTransport>(fake("--mode drop-slot")));
  const std::vector<Tokens> batch = {{"__SLOT0__", "a", "__SLOT0__"}, {"b"}};
  const auto out = ext.translate(batch, "xs", "xg");
  ASSERT_FALSE(out[0].has_value());
  EXPECT_EQ(out[0].error().kind, TranslationFault::Kind::kSymbolCountChanged);
  EXPECT_EQ(out[0].error().slot, 0);
  EXPECT_NE(out[0].error().message.find("BackendContractViolation"), std::string::npos);
  EXPECT_EQ(out[1].value(), (Tokens{"b"}));
}

TEST_F(StdioFixture, PerRecordErrors) {
  ExternalTranslator ext(std::make_unique<StdioTransport>(fake("--mode record-error")));
  const std::vector<Tokens> batch = {{"ok"}, {"FAIL", "x"}};
  const auto out = ext.translate(batch, "a", "b");
  EXPECT_TRUE(out[0].has_value());
  ASSERT_FALSE(out[1].has_value());
  EXPECT_EQ(out[1].error().kind, TranslationFault::Kind::kRecordError);
  EXPECT_EQ(out[1].error().message, "cannot translate");
}

TEST_F(StdioFixture, MalformedResponseIsProtocolError) {
  ExternalTranslator ext(std::make_unique<StdioTransport>(fake("--mode malformed")));
  const std::vector<Tokens> batch = {{"a"}};
  EXPECT_EQ(code_of([&] { ext.translate(batch, "a", "b"); }), ErrorCode::kProtocolError);
}

TEST_F(StdioFixture, WrongTagCountIsContractViolation) {
  ExternalTagger ext(std::make_unique<StdioTransport>(fake("--mode wrong-length")), world_.scheme());
  const std::vector<Tokens> batch = {{"a", "b"}};
  EXPECT_EQ(code_of([&] { ext.tag(batch); }), ErrorCode::kBackendContractViolation);
}

TEST_F(StdioFixture, Timeout) {
  ExternalTranslator ext(std::make_unique<StdioTransport>(fake("--mode slow"), 300ms));
  const std::vector<Tokens> batch = {{"a"}};
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { ext.translate(batch, "a", "b"); }), ErrorCode::kTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 3s);
}

TEST_F(StdioFixture, DeadProcessIsUnavailable) {
  const std::vector<Tokens> batch = {{"a"}};
  ExternalTranslator exits(std::make_unique<StdioTransport>(fake("--mode exit")));
  EXPECT_EQ(code_of([&] { exits.translate(batch, "a", "b"); }), ErrorCode::kBackendUnavailable);
  ExternalTranslator missing(std::make_unique<StdioTransport>("/nonexistent/backend 2>/dev/null"));
  EXPECT_EQ(code_of([&] { missing.translate(batch, "a", "b"); }), ErrorCode::kBackendUnavailable);
  // A failed transport restarts on the next call and fails the same way.
  EXPECT_EQ(code_of([&] { missing.translate(batch, "a", "b"); }), ErrorCode::kBackendUnavailable);
}

TEST_F(StdioFixture, ExternalVerifier) {
  ExternalVerifier v(fake("--mode verify-greek"));
  EXPECT_TRUE(v.accept({"Αθήνα", "ναι"}, "el"));
  EXPECT_FALSE(v.accept({"Zürich"}, "el"));
}

// In-process HTTP peer. `behaviour` picks how it answers.
class HttpPeer {
 public:
  explicit HttpPeer(std::function<std::string(const std::string&)> handler) {
    server_.Post("/rpc", [handler](const httplib::Request& req, httplib::Response& res) {
      res.set_content(handler(req.body), "application/x-ndjson");
    });
    server_.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(1500ms);
      res.set_content("", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~HttpPeer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// Answers every record, in reverse order, by upper-casing ASCII tokens.
std::string reversed_upper(const std::string& body) {
  std::vector<std::string> out;
  for (auto line : split_lines(body)) {
    if (trim(line).empty()) continue;
    auto req = json::parse(line);
    Tokens tokens = req["tokens"];
    for (auto& t : tokens) {
      if (!BoundarySymbolTable().is_symbol(t)) {
        for (auto& c : t) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
    }
    out.push_back(json{{"id", req["id"]}, {"tokens", tokens}}.dump());
  }
  std::reverse(out.begin(), out.end());
  return join(out, "\n") + "\n";
}

TEST(Http, ResponsesMatchedById) {
  HttpPeer peer(reversed_upper);
  auto transport = make_transport(peer.url("/rpc"));
  EXPECT_NE(dynamic_cast<HttpTransport*>(transport.get()), nullptr);
  ExternalTranslator ext(std::move(transport));
  EXPECT_FALSE(ext.single_flight());
  const std::vector<Tokens> batch = {{"a", "__SLOT0__", "b", "__SLOT0__"}, {"c"}, {"d", "e"}};
  const auto out = ext.translate(batch, "x", "y");
  EXPECT_EQ(out[0].value(), (Tokens{"A", "__SLOT0__", "B", "__SLOT0__"}));
  EXPECT_EQ(out[1].value(), (Tokens{"C"}));
  EXPECT_EQ(out[2].value(), (Tokens{"D", "E"}));
}

TEST(Http, ProtocolViolations) {
  const std::vector<Tokens> batch = {{"a"}, {"b"}};
  {
    HttpPeer peer([](const std::string&) { return std::string(R"({"id": 999, "tokens": ["x"]})") + "\n{\"id\":0,\"tokens\":[]}\n"; });
    ExternalTranslator ext(make_transport(peer.url("/rpc")));
    EXPECT_EQ(code_of([&] { ext.translate(batch, "x", "y"); }), ErrorCode::kProtocolError);
  }
  {
    HttpPeer peer([](const std::string&) { return std::string(R"({"id": 0, "tokens": ["x"]})") + "\n"; });
    ExternalTranslator ext(make_transport(peer.url("/rpc")));
    EXPECT_EQ(code_of([&] { ext.translate(batch, "x", "y"); }), ErrorCode::kProtocolError);
  }
  {
    HttpPeer peer([](const std::string&) { return std::string("{\"id\":0,\"tokens\":[]}\n{\"id\":0,\"tokens\":[]}\n"); });
    ExternalTranslator ext(make_transport(peer.url("/rpc")));
    EXPECT_EQ(code_of([&] { ext.translate(batch, "x", "y"); }), ErrorCode::kProtocolError);
  }
  {
    HttpPeer peer(reversed_upper);
    ExternalTranslator ext(make_transport(peer.url("/fail")));
    EXPECT_EQ(code_of([&] { ext.translate(batch, "x", "y"); }), ErrorCode::kProtocolError);
  }
}

TEST(Http, UnavailableAndTimeout) {
  const std::vector<Tokens> batch = {{"a"}};
  // Nothing listens on port 1.
  ExternalTranslator down(make_transport("http://127.0.0.1:1/rpc", 2000ms));
  EXPECT_EQ(code_of([&] { down.translate(batch, "x", "y"); }), ErrorCode::kBackendUnavailable);
  HttpPeer peer(reversed_upper);
  ExternalTranslator slow(make_transport(peer.url("/slow"), 300ms));
  EXPECT_EQ(code_of([&] { slow.translate(batch, "x", "y"); }), ErrorCode::kTimeout);
}

// The pipeline gives identical results whether the dictionary translator and
// gazetteer tagger run in-process, behind stdio, or behind HTTP.
TEST_F(StdioFixture, ProjectionIdenticalAcrossTransports) {
  const auto gold = world_.target_corpus(120, 3);
  const auto raw = strip_labels(gold);
  ProjectionConfig cfg;
  cfg.source_language = "xs";
  cfg.batch_size = 50;

  auto translator = world_.translator();
  GazetteerTagger tagger(world_.scheme(), world_.gazetteer());
  const auto builtin = project_corpus(raw, translator, tagger, cfg);

  ExternalTranslator stdio_t(std::make_unique<StdioTransport>(fake("--mode serve " + serve_args())));
  ExternalTagger stdio_g(std::make_unique<StdioTransport>(fake("--mode serve " + serve_args())), world_.scheme(),
                         "xs");
  const auto via_stdio = project_corpus(raw, stdio_t, stdio_g, cfg);

  auto translator_for_http = world_.translator();
  GazetteerTagger tagger_for_http(world_.scheme(), world_.gazetteer());
  std::mutex mu;
  HttpPeer peer([&](const std::string& body) {
    std::lock_guard<std::mutex> lock(mu);
    std::string out;
    for (auto line : split_lines(body)) {
      if (trim(line).empty()) continue;
      auto req = json::parse(line);
      Tokens tokens = req["tokens"];
      json resp{{"id", req["id"]}};
      if (req["op"] == "tag") {
        resp["tags"] = tagger_for_http.tag_one(tokens);
      } else {
        resp["tokens"] = translator_for_http.translate_one(tokens, translator_for_http.direction(req["src"], req["tgt"]));
      }
      out += resp.dump() + "\n";
    }
    return out;
  });
  ExternalTranslator http_t(make_transport(peer.url("/rpc")));
  ExternalTagger http_g(make_transport(peer.url("/rpc")), world_.scheme(), "xs");
  cfg.jobs = 3;
  const auto via_http = project_corpus(raw, http_t, http_g, cfg);

  const auto want = write_conll(builtin.kept()) + builtin.provenance_tsv() + builtin.stats().to_kv();
  EXPECT_EQ(write_conll(via_stdio.kept()) + via_stdio.provenance_tsv() + via_stdio.stats().to_kv(), want);
  EXPECT_EQ(write_conll(via_http.kept()) + via_http.provenance_tsv() + via_http.stats().to_kv(), want);
  EXPECT_GT(builtin.kept().size(), 100u);
}

}  // namespace
}  // namespace crop
