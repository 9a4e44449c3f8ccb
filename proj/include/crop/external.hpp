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

// External backends speaking the newline-delimited JSON wire protocol over a
// child process's standard streams or HTTP POST.
//
//   request:  {"id": n, "op": "translate"|"tag", "src": "..", "tgt": "..", "tokens": [..]}
//   response: {"id": n, "tokens": [..]} | {"id": n, "tags": [..]} | {"id": n, "error": ".."}

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "httplib.h"
#include "json.hpp"

namespace crop {

struct WireRequest {
  long long id = 0;
  std::string op;  // "translate" or "tag"
  std::string src;
  std::string tgt;
  Tokens tokens;
};

struct WireResponse {
  long long id = 0;
  std::optional<Tokens> tokens;
  std::optional<Tags> tags;
  std::optional<std::string> error;
};

inline std::string encode_request(const WireRequest& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["op"] = r.op;
  j["src"] = r.src;
  j["tgt"] = r.tgt;
  j["tokens"] = r.tokens;
  return j.dump();
}

inline WireResponse decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("unparseable response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
    throw Error(ErrorCode::kProtocolError, "response without integer id");
  }
  WireResponse r;
  r.id = j["id"].get<long long>();
  int bodies = 0;
  auto string_list = [&](const char* key) {
    const auto& v = j[key];
    if (!v.is_array()) throw Error(ErrorCode::kProtocolError, std::string("'") + key + "' is not an array");
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) throw Error(ErrorCode::kProtocolError, std::string("'") + key + "' holds a non-string");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  if (j.contains("tokens")) {
    r.tokens = string_list("tokens");
    ++bodies;
  }
  if (j.contains("tags")) {
    r.tags = string_list("tags");
    ++bodies;
  }
  if (j.contains("error")) {
    r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    ++bodies;
  }
  if (bodies != 1) throw Error(ErrorCode::kProtocolError, "response must carry exactly one of tokens/tags/error");
  return r;
}

// Moves request lines to a peer and returns its response lines.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<std::string> exchange(const std::vector<std::string>& lines) = 0;
  virtual bool single_flight() const = 0;
};

// A child process (`/bin/sh -c command`) whose stdin/stdout are one end of a
// socket pair. Requests are pipelined up to `window` records at a time.
class StdioTransport : public Transport {
 public:
  StdioTransport(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(120),
                 size_t window = 64)
      : command_(std::move(command)), timeout_(timeout), window_(window == 0 ? 1 : window) {}

  ~StdioTransport() override { stop(); }

  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  bool single_flight() const override { return true; }

  std::vector<std::string> exchange(const std::vector<std::string>& lines) override {
    std::lock_guard<std::mutex> lock(mu_);
    if (fd_ < 0) start();
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (size_t begin = 0; begin < lines.size(); begin += window_) {
      const size_t end = std::min(lines.size(), begin + window_);
      std::string chunk;
      for (size_t i = begin; i < end; ++i) chunk += lines[i] + "\n";
      write_all(chunk, deadline);
      for (size_t i = begin; i < end; ++i) out.push_back(read_line(deadline));
    }
    return out;
  }

 private:
  void start() {
    int sv[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw Error(ErrorCode::kBackendUnavailable, std::string("socketpair: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) {
      close(sv[0]);
      close(sv[1]);
      throw Error(ErrorCode::kBackendUnavailable, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      dup2(sv[1], STDIN_FILENO);
      dup2(sv[1], STDOUT_FILENO);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(sv[1]);
    fd_ = sv[0];
    pid_ = pid;
    buffer_.clear();
  }

  void stop() {
    if (fd_ >= 0) {
      close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  [[noreturn]] void fail(ErrorCode code, const std::string& what) {
    stop();
    throw Error(code, "'" + command_ + "': " + what);
  }

  int remaining_ms(std::chrono::steady_clock::time_point deadline) {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
    if (left <= 0) fail(ErrorCode::kTimeout, "no response within " + std::to_string(timeout_.count()) + " ms");
    return static_cast<int>(std::min<long long>(left, INT32_MAX));
  }

  void write_all(const std::string& data, std::chrono::steady_clock::time_point deadline) {
    size_t sent = 0;
    while (sent < data.size()) {
      pollfd p{fd_, POLLOUT, 0};
      const int rc = poll(&p, 1, remaining_ms(deadline));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;  // remaining_ms raises on expiry
      const ssize_t n = send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL | MSG_DONTWAIT);
      if (n < 0) {
        if (errno == EAGAIN || errno == EINTR) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("write failed: ") + std::strerror(errno));
      }
      sent += static_cast<size_t>(n);
    }
  }

  std::string read_line(std::chrono::steady_clock::time_point deadline) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      pollfd p{fd_, POLLIN, 0};
      const int rc = poll(&p, 1, remaining_ms(deadline));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;
      char buf[65536];
      const ssize_t n = recv(fd_, buf, sizeof(buf), MSG_DONTWAIT);
      if (n < 0) {
        if (errno == EAGAIN || errno == EINTR) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) fail(ErrorCode::kBackendUnavailable, "process closed its output");
      buffer_.append(buf, static_cast<size_t>(n));
    }
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  size_t window_;
  std::mutex mu_;
  int fd_ = -1;
  pid_t pid_ = -1;
  std::string buffer_;
};

// POSTs all records of a batch, one per line, to `url`.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {
    const auto scheme_end = url.find("://");
    const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    base_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  bool single_flight() const override { return false; }

  std::vector<std::string> exchange(const std::vector<std::string>& lines) override {
    httplib::Client client(base_);
    if (!client.is_valid()) throw Error(ErrorCode::kBackendUnavailable, "invalid endpoint '" + base_ + "'");
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - sec);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, body, "application/x-ndjson");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && std::chrono::steady_clock::now() - started >= timeout_)) {
        throw Error(ErrorCode::kTimeout, base_ + path_ + ": " + httplib::to_string(err));
      }
      throw Error(ErrorCode::kBackendUnavailable, base_ + path_ + ": " + httplib::to_string(err));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kProtocolError, base_ + path_ + ": HTTP status " + std::to_string(res->status));
    }
    std::vector<std::string> out;
    for (auto line : split_lines(res->body)) {
      if (!trim(line).empty()) out.emplace_back(line);
    }
    return out;
  }

 private:
  std::chrono::milliseconds timeout_;
  std::string base_;
  std::string path_;
};

// "http://..." or "https://..." selects HTTP; anything else is a command.
inline std::unique_ptr<Transport> make_transport(const std::string& endpoint,
                                                 std::chrono::milliseconds timeout = std::chrono::seconds(120)) {
  if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0) {
    return std::make_unique<HttpTransport>(endpoint, timeout);
  }
  return std::make_unique<StdioTransport>(endpoint, timeout);
}

namespace detail {

// Sends `requests` and returns responses reordered to request order.
inline std::vector<WireResponse> round_trip(Transport& transport, const std::vector<WireRequest>& requests) {
  std::vector<std::string> lines;
  lines.reserve(requests.size());
  for (const auto& r : requests) lines.push_back(encode_request(r));
  const auto response_lines = transport.exchange(lines);
  if (response_lines.size() != requests.size()) {
    throw Error(ErrorCode::kProtocolError, std::to_string(response_lines.size()) + " responses for " +
                                               std::to_string(requests.size()) + " requests");
  }
  std::map<long long, size_t> slot;
  for (size_t i = 0; i < requests.size(); ++i) slot[requests[i].id] = i;
  std::vector<std::optional<WireResponse>> ordered(requests.size());
  for (const auto& line : response_lines) {
    auto r = decode_response(line);
    auto it = slot.find(r.id);
    if (it == slot.end()) throw Error(ErrorCode::kProtocolError, "response for unknown id " + std::to_string(r.id));
    if (ordered[it->second]) throw Error(ErrorCode::kProtocolError, "duplicate response id " + std::to_string(r.id));
    ordered[it->second] = std::move(r);
  }
  std::vector<WireResponse> out;
  out.reserve(ordered.size());
  for (auto& r : ordered) out.push_back(std::move(*r));
  return out;
}

}  // namespace detail

class ExternalTranslator : public TranslatorBackend {
 public:
  ExternalTranslator(std::unique_ptr<Transport> transport, BoundarySymbolTable table = BoundarySymbolTable())
      : transport_(std::move(transport)), table_(table) {}

  bool single_flight() const override { return transport_->single_flight(); }

  std::vector<TranslationResult> translate(std::span<const Tokens> batch, const std::string& src_lang,
                                           const std::string& tgt_lang) override {
    std::vector<WireRequest> requests;
    requests.reserve(batch.size());
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const auto& tokens : batch) requests.push_back({next_id_++, "translate", src_lang, tgt_lang, tokens});
    }
    const auto responses = detail::round_trip(*transport_, requests);
    std::vector<TranslationResult> out;
    out.reserve(batch.size());
    for (size_t i = 0; i < responses.size(); ++i) {
      const auto& r = responses[i];
      if (r.error) {
        out.emplace_back(TranslationFault{TranslationFault::Kind::kRecordError, -1, *r.error});
      } else if (!r.tokens) {
        throw Error(ErrorCode::kProtocolError, "translate response without tokens");
      } else if (auto slot = symbol_count_mismatch(batch[i], *r.tokens, table_)) {
        out.emplace_back(TranslationFault{TranslationFault::Kind::kSymbolCountChanged, *slot,
                                          "BackendContractViolation: symbol " + table_.render(*slot) +
                                              " count changed"});
      } else {
        out.emplace_back(*r.tokens);
      }
    }
    return out;
  }

 private:
  std::unique_ptr<Transport> transport_;
  BoundarySymbolTable table_;
  std::mutex mu_;
  long long next_id_ = 0;
};

class ExternalTagger : public TaggerBackend {
 public:
  ExternalTagger(std::unique_ptr<Transport> transport, TagScheme scheme, std::string language = "")
      : transport_(std::move(transport)), scheme_(std::move(scheme)), language_(std::move(language)) {}

  const TagScheme& scheme() const override { return scheme_; }
  bool single_flight() const override { return transport_->single_flight(); }

  std::vector<Tags> tag(std::span<const Tokens> batch) override {
    std::vector<WireRequest> requests;
    requests.reserve(batch.size());
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const auto& tokens : batch) requests.push_back({next_id_++, "tag", language_, language_, tokens});
    }
    const auto responses = detail::round_trip(*transport_, requests);
    std::vector<Tags> out;
    out.reserve(batch.size());
    for (size_t i = 0; i < responses.size(); ++i) {
      const auto& r = responses[i];
      if (r.error) throw Error(ErrorCode::kProtocolError, "tagger error for id " + std::to_string(r.id) + ": " + *r.error);
      if (!r.tags) throw Error(ErrorCode::kProtocolError, "tag response without tags");
      if (r.tags->size() != batch[i].size()) {
        throw Error(ErrorCode::kBackendContractViolation, "tagger returned " + std::to_string(r.tags->size()) +
                                                              " tags for " + std::to_string(batch[i].size()) +
                                                              " tokens");
      }
      out.push_back(*r.tags);
    }
    return out;
  }

 private:
  std::unique_ptr<Transport> transport_;
  TagScheme scheme_;
  std::string language_;
  std::mutex mu_;
  long long next_id_ = 0;
};

}  // namespace crop
