/*
 * Copyright 2026 The artree Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

//===----------------------------------------------------------------------===//
// LLM gateway: chat-completion abstraction over interchangeable backends
// (live HTTP, scripted replay, recorded replay), prompt rendering, call
// accounting with per-question budgets, and a persistent response cache.
//===----------------------------------------------------------------------===//

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/plan.hpp"
#include "artree/prompts.hpp"
#include "artree/text.hpp"

namespace artree {
namespace llm {

using ChatMessage = prompts::Message;

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string template_id;  // diagnostic only; scripted backends match on it
};

struct CompletionResult {
  std::string response;
  Usage usage;
  bool cache_hit = false;
};

// Digest over (model, messages, temperature); backend-independent so that
// recorded fixtures replay under any backend id.
inline std::string request_digest(const CompletionRequest& req) {
  std::string buf = req.model;
  buf.push_back('\x1f');
  char tbuf[32];
  std::snprintf(tbuf, sizeof(tbuf), "%.6f", req.temperature);
  buf += tbuf;
  for (const auto& m : req.messages) {
    buf.push_back('\x1e');
    buf += m.role;
    buf.push_back('\x1f');
    buf += m.content;
  }
  return text::digest(buf);
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const CompletionRequest& req) = 0;
  virtual std::string id() const = 0;
};

//===----------------------------------------------------------------------===//
// Scripted backend
//===----------------------------------------------------------------------===//

struct ScriptRule {
  std::string template_id;  // empty = any
  std::string contains;     // empty = any; substring over concatenated text
  std::string response;
};

// Deterministic replay: first declared matching rule wins; a prompt with no
// matching rule is a hard error carrying the request digest.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<ScriptRule> rules)
      : rules_(std::move(rules)) {}

  void add(ScriptRule rule) { rules_.push_back(std::move(rule)); }

  CompletionResult complete(const CompletionRequest& req) override {
    std::string all_text;
    for (const auto& m : req.messages) {
      all_text += m.content;
      all_text.push_back('\n');
    }
    for (const auto& rule : rules_) {
      if (!rule.template_id.empty() && rule.template_id != req.template_id) {
        continue;
      }
      if (!rule.contains.empty() &&
          all_text.find(rule.contains) == std::string::npos) {
        continue;
      }
      ++calls_;
      return CompletionResult{rule.response, Usage{}, false};
    }
    std::string tail;
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
      if (it->role == "user") {
        tail = it->content.substr(0, 200);
        break;
      }
    }
    fail(Errc::script_gap, "no scripted response for template '" +
                               req.template_id + "', digest " +
                               request_digest(req) + ", prompt head: " + tail);
  }

  std::string id() const override { return "scripted"; }
  long calls() const { return calls_.load(); }

 private:
  std::vector<ScriptRule> rules_;
  // batch runs may share one backend across worker threads
  std::atomic<long> calls_{0};
};

// Script file: JSON list of {"match": {"template_id"?: str,
// "contains"?: str}, "response": str}.
inline std::vector<ScriptRule> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::format, "cannot open script '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, "script '" + path + "': " + e.what());
  }
  if (!doc.is_array()) fail(Errc::format, "script must be a JSON list");
  std::vector<ScriptRule> rules;
  for (const auto& jr : doc) {
    ScriptRule rule;
    if (jr.contains("match")) {
      rule.template_id = jr["match"].value("template_id", "");
      rule.contains = jr["match"].value("contains", "");
    }
    if (!jr.contains("response") || !jr["response"].is_string()) {
      fail(Errc::format, "script rule needs a string response");
    }
    rule.response = jr["response"].get<std::string>();
    rules.push_back(std::move(rule));
  }
  return rules;
}

//===----------------------------------------------------------------------===//
// Live HTTP backend
//===----------------------------------------------------------------------===//

struct HttpOptions {
  std::string base_url;     // full chat-completion endpoint URL
  std::string api_key_env;  // environment variable holding the bearer key
  int max_retries = 3;
  int backoff_ms = 200;
  int timeout_s = 120;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(Errc::config, "backend URL needs a scheme: '" + url + "'");
  }
  auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace detail

// De-facto standard chat-completion wire schema. Transient failures
// (connect errors, 429, 5xx) retry with exponential backoff.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions opts) : opts_(std::move(opts)) {
    auto split = detail::split_url(opts_.base_url);
    origin_ = split.origin;
    path_ = split.path;
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (text::starts_with(origin_, "https://")) {
      fail(Errc::config,
           "built without TLS support; use an http:// backend URL");
    }
#endif
  }

  CompletionResult complete(const CompletionRequest& req) override {
    nlohmann::json body;
    body["model"] = req.model;
    body["temperature"] = req.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!opts_.api_key_env.empty()) {
      if (const char* key = std::getenv(opts_.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, opts_.max_retries);
         ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            opts_.backoff_ms * (1 << (attempt - 1))));
      }
      httplib::Client cli(origin_);
      cli.set_connection_timeout(10, 0);
      cli.set_read_timeout(opts_.timeout_s, 0);
      auto res = cli.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_error = "connection error (" + httplib::to_string(res.error()) +
                     ") to " + origin_;
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        fail(Errc::backend, "backend returned status " +
                                std::to_string(res->status) + ": " +
                                res->body.substr(0, 300));
      }
      return parse_response(res->body);
    }
    fail(Errc::backend, "backend unreachable after " +
                            std::to_string(opts_.max_retries) +
                            " attempts: " + last_error);
  }

  std::string id() const override { return "live:" + origin_ + path_; }

 private:
  static CompletionResult parse_response(const std::string& body) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
      CompletionResult out;
      out.response =
          doc.at("choices").at(0).at("message").at("content")
              .get<std::string>();
      if (doc.contains("usage")) {
        out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
        out.usage.completion_tokens =
            doc["usage"].value("completion_tokens", 0);
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::backend,
           std::string("malformed completion response: ") + e.what());
    }
  }

  HttpOptions opts_;
  std::string origin_;
  std::string path_;
};

//===----------------------------------------------------------------------===//
// Recorded backend
//===----------------------------------------------------------------------===//

// Replays responses stored one-per-request-digest under a directory. With an
// inner backend attached, misses pass through and the response is recorded;
// without one, a miss is a hard error.
class RecordedBackend : public Backend {
 public:
  RecordedBackend(std::string dir, std::shared_ptr<Backend> inner = nullptr)
      : dir_(std::move(dir)), inner_(std::move(inner)) {}

  CompletionResult complete(const CompletionRequest& req) override {
    const std::string key = request_digest(req);
    const auto file = std::filesystem::path(dir_) / (key + ".json");
    std::ifstream in(file);
    if (in) {
      nlohmann::json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::format, file.string() + ": " + e.what());
      }
      CompletionResult out;
      out.response = doc.value("response", "");
      out.usage.prompt_tokens = doc.value("prompt_tokens", 0);
      out.usage.completion_tokens = doc.value("completion_tokens", 0);
      return out;
    }
    if (!inner_) {
      fail(Errc::backend, "no recorded response for digest " + key +
                              " (template '" + req.template_id + "')");
    }
    CompletionResult out = inner_->complete(req);
    std::filesystem::create_directories(dir_);
    nlohmann::json doc;
    doc["response"] = out.response;
    doc["prompt_tokens"] = out.usage.prompt_tokens;
    doc["completion_tokens"] = out.usage.completion_tokens;
    const auto tmp = file.string() + ".tmp";
    {
      std::ofstream o(tmp);
      o << doc.dump(2);
    }
    std::filesystem::rename(tmp, file);
    return out;
  }

  std::string id() const override { return "recorded:" + dir_; }

 private:
  std::string dir_;
  std::shared_ptr<Backend> inner_;
};

//===----------------------------------------------------------------------===//
// Response cache
//===----------------------------------------------------------------------===//

// One file per cache key. Writes go through a temp file and rename so
// concurrent writers of the same key cannot interleave partial content.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<CompletionResult> get(const std::string& key) const {
    std::ifstream in(file_for(key));
    if (!in) return std::nullopt;
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // damaged entry behaves like a miss
    }
    CompletionResult out;
    out.response = doc.value("response", "");
    out.usage.prompt_tokens = doc.value("prompt_tokens", 0);
    out.usage.completion_tokens = doc.value("completion_tokens", 0);
    out.cache_hit = true;
    return out;
  }

  void put(const std::string& key, const CompletionResult& r) const {
    nlohmann::json doc;
    doc["response"] = r.response;
    doc["prompt_tokens"] = r.usage.prompt_tokens;
    doc["completion_tokens"] = r.usage.completion_tokens;
    const auto file = file_for(key);
    const auto tmp =
        file.string() + ".tmp" +
        std::to_string(
            std::chrono::steady_clock::now().time_since_epoch().count());
    {
      std::ofstream o(tmp);
      o << doc.dump(2);
    }
    std::filesystem::rename(tmp, file);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.path().extension() == ".json") ++n;
    }
    return n;
  }

  void clear() const {
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.path().extension() == ".json") std::filesystem::remove(e.path());
    }
  }

 private:
  std::filesystem::path file_for(const std::string& key) const {
    return std::filesystem::path(dir_) / (key + ".json");
  }
  std::string dir_;
};

//===----------------------------------------------------------------------===//
// Call accounting
//===----------------------------------------------------------------------===//

enum class CallKind { plan, selection, reasoning, kg_parse };

// Per-question counters. Reasoning calls (llm_calls) are kept apart from
// planning, source selection, and kg program parsing so the one-call-per-node
// invariant stays checkable. Budgets of 0 mean unlimited.
struct Counters {
  long llm_calls = 0;
  long selection_calls = 0;
  long plan_calls = 0;
  long kg_parse_calls = 0;
  long backend_calls = 0;
  long cache_hits = 0;
  long operator_fallbacks = 0;
  long parent_fallbacks = 0;
  std::map<std::string, long> retriever_calls;  // per source id
  Usage usage;

  long max_llm_calls = 0;
  long max_retrievals = 0;

  long total_llm_calls() const {
    return llm_calls + selection_calls + plan_calls + kg_parse_calls;
  }
  long total_retrievals() const {
    long n = 0;
    for (const auto& [src, c] : retriever_calls) n += c;
    return n;
  }

  void charge(CallKind kind) {
    switch (kind) {
      case CallKind::plan: ++plan_calls; break;
      case CallKind::selection: ++selection_calls; break;
      case CallKind::reasoning: ++llm_calls; break;
      case CallKind::kg_parse: ++kg_parse_calls; break;
    }
  }

  // Budget checks run before the call is issued.
  void check_llm_budget() const {
    if (max_llm_calls > 0 && total_llm_calls() >= max_llm_calls) {
      fail(Errc::budget_exceeded,
           "per-question LLM call budget (" + std::to_string(max_llm_calls) +
               ") exhausted");
    }
  }
  void count_retrieval(const std::string& source) {
    if (max_retrievals > 0 && total_retrievals() >= max_retrievals) {
      fail(Errc::budget_exceeded,
           "per-question retrieval budget (" +
               std::to_string(max_retrievals) + ") exhausted");
    }
    ++retriever_calls[source];
  }

  void merge(const Counters& other) {
    llm_calls += other.llm_calls;
    selection_calls += other.selection_calls;
    plan_calls += other.plan_calls;
    kg_parse_calls += other.kg_parse_calls;
    backend_calls += other.backend_calls;
    cache_hits += other.cache_hits;
    operator_fallbacks += other.operator_fallbacks;
    parent_fallbacks += other.parent_fallbacks;
    for (const auto& [s, c] : other.retriever_calls) retriever_calls[s] += c;
    usage.prompt_tokens += other.usage.prompt_tokens;
    usage.completion_tokens += other.usage.completion_tokens;
  }
};

//===----------------------------------------------------------------------===//
// Gateway
//===----------------------------------------------------------------------===//

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, std::string model,
          std::shared_ptr<ResponseCache> cache = nullptr,
          double temperature = 0.0)
      : backend_(std::move(backend)),
        model_(std::move(model)),
        cache_(std::move(cache)),
        temperature_(temperature) {}

  CompletionResult complete(prompts::Id tmpl,
                            const std::map<std::string, std::string>& vars,
                            Counters& counters, CallKind kind) const {
    return complete_raw(prompts::render(tmpl, vars), prompts::id_name(tmpl),
                        counters, kind);
  }

  CompletionResult complete_raw(std::vector<ChatMessage> messages,
                                const std::string& template_id,
                                Counters& counters, CallKind kind) const {
    counters.check_llm_budget();
    CompletionRequest req;
    req.model = model_;
    req.messages = std::move(messages);
    req.temperature = temperature_;
    req.template_id = template_id;

    const std::string cache_key =
        cache_ ? text::digest(backend_->id() + "|" + request_digest(req))
               : std::string();
    if (cache_) {
      if (auto hit = cache_->get(cache_key)) {
        ++counters.cache_hits;
        counters.charge(kind);
        counters.usage.prompt_tokens += hit->usage.prompt_tokens;
        counters.usage.completion_tokens += hit->usage.completion_tokens;
        return *hit;
      }
    }
    CompletionResult out = backend_->complete(req);
    ++counters.backend_calls;
    counters.charge(kind);
    counters.usage.prompt_tokens += out.usage.prompt_tokens;
    counters.usage.completion_tokens += out.usage.completion_tokens;
    if (cache_) cache_->put(cache_key, out);
    return out;
  }

  const std::string& model() const { return model_; }
  std::shared_ptr<Backend> backend() const { return backend_; }

 private:
  std::shared_ptr<Backend> backend_;
  std::string model_;
  std::shared_ptr<ResponseCache> cache_;
  double temperature_;
};

//===----------------------------------------------------------------------===//
// Model answer extraction
//===----------------------------------------------------------------------===//

inline bool is_unknown_text(const std::string& s) {
  return text::to_lower(text::trim(s)) == "unknown";
}

struct ParsedAnswer {
  bool unknown = false;
  Answer value = std::string{};
};

// The reply contract: the final non-empty line is a JSON list, a quoted
// scalar, or Unknown. Strict mode (operator executors) returns nullopt on
// anything else; lenient mode (parent/direct reasoning) degrades to the raw
// line as a scalar.
inline std::optional<ParsedAnswer> parse_answer_line(
    const std::string& response, bool strict) {
  std::string line;
  std::size_t end = response.size();
  while (end > 0) {
    std::size_t begin = response.rfind('\n', end - 1);
    std::size_t b = begin == std::string::npos ? 0 : begin + 1;
    line = text::trim(response.substr(b, end - b));
    if (!line.empty()) break;
    if (begin == std::string::npos) break;
    end = begin;
  }
  if (line.empty()) {
    if (strict) return std::nullopt;
    return ParsedAnswer{true, std::string{}};
  }
  if (is_unknown_text(line)) return ParsedAnswer{true, std::string{}};

  auto render_item = [](const nlohmann::json& v) -> std::string {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };

  if (line.front() == '[') {
    try {
      nlohmann::json arr = nlohmann::json::parse(line);
      if (arr.is_array()) {
        std::vector<std::string> items;
        for (const auto& v : arr) items.push_back(render_item(v));
        return ParsedAnswer{false, std::move(items)};
      }
    } catch (const nlohmann::json::exception&) {
    }
    if (strict) return std::nullopt;
    return ParsedAnswer{false, line};
  }
  if (line.front() == '"') {
    try {
      nlohmann::json s = nlohmann::json::parse(line);
      if (s.is_string()) {
        std::string v = s.get<std::string>();
        if (is_unknown_text(v)) return ParsedAnswer{true, std::string{}};
        return ParsedAnswer{false, std::move(v)};
      }
    } catch (const nlohmann::json::exception&) {
    }
    if (strict) return std::nullopt;
    return ParsedAnswer{false, line};
  }
  if (strict) return std::nullopt;
  return ParsedAnswer{false, line};
}

}  // namespace llm
}  // namespace artree
