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
// Run configuration. Precedence: built-in defaults < config file <
// ARTREE_* environment variables < command-line flags (flags are applied
// by the CLI layer after load()).
//===----------------------------------------------------------------------===//

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/text.hpp"

namespace artree {
namespace config {

struct BackendConfig {
  std::string kind = "scripted";  // live | scripted | recorded
  std::string base_url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "ARTREE_API_KEY";
  std::string script;      // scripted: path to the script file
  std::string record_dir;  // recorded: replay directory
  int max_retries = 3;
  int backoff_ms = 200;
  double temperature = 0.0;
};

struct KgConfig {
  std::string dump;  // JSONL path
};

struct TextConfig {
  std::string mode = "local";  // local | http
  std::string corpus_dir;
  std::string endpoint;
};

struct WebConfig {
  std::string mode = "recorded";  // live | recorded
  std::string base_url = "https://serpapi.com/search";
  std::string api_key_env = "ARTREE_SERP_KEY";
  std::string recorded_dir;
  bool record = false;  // live-through-recording
};

struct RunConfig {
  BackendConfig backend;
  std::vector<std::string> sources;  // subset of {kg, text, web}, non-empty
  KgConfig kg;
  TextConfig text_source;
  WebConfig web;

  int k = 3;
  double t = 0.5;
  long max_llm_calls = 0;   // 0 = unlimited
  long max_retrievals = 0;  // 0 = unlimited
  std::string cache_dir;    // empty = caching off
  int concurrency = 1;
  unsigned long seed = 0;
  std::string out_dir = "runs";
  bool kg_direct = false;
  bool allow_parametric = false;
  bool trace = false;
};

namespace detail {

inline void merge_json(RunConfig& c, const nlohmann::json& j) {
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    c.backend.kind = b.value("kind", c.backend.kind);
    c.backend.base_url = b.value("base_url", c.backend.base_url);
    c.backend.model = b.value("model", c.backend.model);
    c.backend.api_key_env = b.value("api_key_env", c.backend.api_key_env);
    c.backend.script = b.value("script", c.backend.script);
    c.backend.record_dir = b.value("record_dir", c.backend.record_dir);
    c.backend.max_retries = b.value("max_retries", c.backend.max_retries);
    c.backend.backoff_ms = b.value("backoff_ms", c.backend.backoff_ms);
    c.backend.temperature = b.value("temperature", c.backend.temperature);
  }
  if (j.contains("sources")) {
    c.sources = j["sources"].get<std::vector<std::string>>();
  }
  if (j.contains("kg")) c.kg.dump = j["kg"].value("dump", c.kg.dump);
  if (j.contains("text")) {
    const auto& t = j["text"];
    c.text_source.mode = t.value("mode", c.text_source.mode);
    c.text_source.corpus_dir = t.value("corpus_dir",
                                       c.text_source.corpus_dir);
    c.text_source.endpoint = t.value("endpoint", c.text_source.endpoint);
  }
  if (j.contains("web")) {
    const auto& w = j["web"];
    c.web.mode = w.value("mode", c.web.mode);
    c.web.base_url = w.value("base_url", c.web.base_url);
    c.web.api_key_env = w.value("api_key_env", c.web.api_key_env);
    c.web.recorded_dir = w.value("recorded_dir", c.web.recorded_dir);
    c.web.record = w.value("record", c.web.record);
  }
  c.k = j.value("k", c.k);
  c.t = j.value("t", c.t);
  c.max_llm_calls = j.value("max_llm_calls", c.max_llm_calls);
  c.max_retrievals = j.value("max_retrievals", c.max_retrievals);
  c.cache_dir = j.value("cache_dir", c.cache_dir);
  c.concurrency = j.value("concurrency", c.concurrency);
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.kg_direct = j.value("kg_direct", c.kg_direct);
  c.allow_parametric = j.value("allow_parametric", c.allow_parametric);
  c.trace = j.value("trace", c.trace);
}

inline const char* env(const char* name) { return std::getenv(name); }

inline long env_long(const char* name, long cur) {
  const char* v = env(name);
  if (!v) return cur;
  char* end = nullptr;
  long out = std::strtol(v, &end, 10);
  if (end == v || *end != '\0') {
    fail(Errc::config, std::string(name) + " must be an integer, got '" +
                           v + "'");
  }
  return out;
}

inline double env_double(const char* name, double cur) {
  const char* v = env(name);
  if (!v) return cur;
  char* end = nullptr;
  double out = std::strtod(v, &end);
  if (end == v || *end != '\0') {
    fail(Errc::config,
         std::string(name) + " must be a number, got '" + v + "'");
  }
  return out;
}

inline void apply_env(RunConfig& c) {
  if (const char* v = env("ARTREE_BACKEND")) c.backend.kind = v;
  if (const char* v = env("ARTREE_BASE_URL")) c.backend.base_url = v;
  if (const char* v = env("ARTREE_MODEL")) c.backend.model = v;
  if (const char* v = env("ARTREE_SCRIPT")) c.backend.script = v;
  if (const char* v = env("ARTREE_SOURCES")) {
    c.sources.clear();
    std::string token;
    for (char ch : std::string(v) + ",") {
      if (ch == ',') {
        std::string t = text::trim(token);
        if (!t.empty()) c.sources.push_back(t);
        token.clear();
      } else {
        token.push_back(ch);
      }
    }
  }
  if (const char* v = env("ARTREE_KG_DUMP")) c.kg.dump = v;
  if (const char* v = env("ARTREE_CORPUS_DIR")) c.text_source.corpus_dir = v;
  if (const char* v = env("ARTREE_WEB_RECORDED_DIR")) c.web.recorded_dir = v;
  if (const char* v = env("ARTREE_CACHE_DIR")) c.cache_dir = v;
  if (const char* v = env("ARTREE_OUT_DIR")) c.out_dir = v;
  c.k = static_cast<int>(env_long("ARTREE_K", c.k));
  c.t = env_double("ARTREE_T", c.t);
  c.max_llm_calls = env_long("ARTREE_MAX_LLM_CALLS", c.max_llm_calls);
  c.max_retrievals = env_long("ARTREE_MAX_RETRIEVALS", c.max_retrievals);
  c.concurrency =
      static_cast<int>(env_long("ARTREE_CONCURRENCY", c.concurrency));
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  if (c.k < 0) fail(Errc::config, "k must be >= 0");
  if (c.t < 0.0 || c.t > 1.0) fail(Errc::config, "t must be in [0, 1]");
  if (c.sources.empty()) {
    fail(Errc::config, "at least one knowledge source must be configured");
  }
  for (const auto& s : c.sources) {
    if (s != "kg" && s != "text" && s != "web") {
      fail(Errc::config, "unknown source '" + s + "' (kg, text, web)");
    }
  }
  if (c.backend.kind != "live" && c.backend.kind != "scripted" &&
      c.backend.kind != "recorded") {
    fail(Errc::config, "backend kind must be live, scripted, or recorded");
  }
  if (c.backend.kind == "scripted" && c.backend.script.empty()) {
    fail(Errc::config, "scripted backend needs a script file (--script)");
  }
  if (c.backend.kind == "recorded" && c.backend.record_dir.empty()) {
    fail(Errc::config, "recorded backend needs a record_dir");
  }
  if (c.concurrency < 1) fail(Errc::config, "concurrency must be >= 1");
}

// defaults -> file -> environment. Flags layer on top in the CLI.
inline RunConfig load(const std::string& config_path = "") {
  RunConfig c;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) fail(Errc::config, "cannot open config '" + config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::config, "config '" + config_path + "': " + e.what());
    }
    detail::merge_json(c, j);
  }
  detail::apply_env(c);
  return c;
}

}  // namespace config
}  // namespace artree
