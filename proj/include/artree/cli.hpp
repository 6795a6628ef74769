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
// Command implementations behind the CLI binary: ask, plan, exec-plan,
// batch run (resumable, optionally concurrent), kg-import, cache admin and
// report printing. Exit codes: 0 ok, 1 runtime abort, 2 usage/config/input.
//===----------------------------------------------------------------------===//

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "artree/config.hpp"
#include "artree/engine.hpp"
#include "artree/eval.hpp"
#include "artree/executor.hpp"
#include "artree/kg.hpp"
#include "artree/knowledge.hpp"
#include "artree/llm.hpp"
#include "artree/plan.hpp"

namespace artree {
namespace cli {

// Input/validation problems exit 2; runtime trouble exits 1.
inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::schema:
    case Errc::index:
    case Errc::operator_call:
    case Errc::placeholder:
    case Errc::format:
      return 2;
    default:
      return 1;
  }
}

//===----------------------------------------------------------------------===//
// Wiring
//===----------------------------------------------------------------------===//

struct Wiring {
  std::shared_ptr<kg::KgStore> store;
  std::shared_ptr<knowledge::KnowledgeBroker> broker;
  std::shared_ptr<llm::Gateway> gateway;
  std::shared_ptr<llm::Backend> backend;
  std::shared_ptr<engine::Engine> engine;
};

inline std::shared_ptr<llm::Backend> make_backend(
    const config::RunConfig& cfg) {
  if (cfg.backend.kind == "scripted") {
    return std::make_shared<llm::ScriptedBackend>(
        llm::load_script(cfg.backend.script));
  }
  if (cfg.backend.kind == "recorded") {
    return std::make_shared<llm::RecordedBackend>(cfg.backend.record_dir);
  }
  llm::HttpOptions opts;
  opts.base_url = cfg.backend.base_url;
  opts.api_key_env = cfg.backend.api_key_env;
  opts.max_retries = cfg.backend.max_retries;
  opts.backoff_ms = cfg.backend.backoff_ms;
  return std::make_shared<llm::HttpBackend>(opts);
}

inline Wiring wire(const config::RunConfig& cfg) {
  config::validate(cfg);
  Wiring w;
  w.backend = make_backend(cfg);
  std::shared_ptr<llm::ResponseCache> cache;
  if (!cfg.cache_dir.empty()) {
    cache = std::make_shared<llm::ResponseCache>(cfg.cache_dir);
  }
  w.gateway = std::make_shared<llm::Gateway>(
      w.backend, cfg.backend.model, cache, cfg.backend.temperature);

  std::set<knowledge::Source> configured;
  for (const auto& s : cfg.sources) {
    configured.insert(*knowledge::source_from(s));
  }

  if (configured.count(knowledge::Source::kg)) {
    if (cfg.kg.dump.empty()) {
      fail(Errc::config, "source kg configured but kg.dump is unset");
    }
    w.store = std::make_shared<kg::KgStore>(kg::load_kg_jsonl(cfg.kg.dump));
  }
  std::shared_ptr<knowledge::TextRetriever> text_retriever;
  if (configured.count(knowledge::Source::text)) {
    if (cfg.text_source.mode == "http") {
      if (cfg.text_source.endpoint.empty()) {
        fail(Errc::config, "text.mode http needs text.endpoint");
      }
      text_retriever = std::make_shared<knowledge::HttpTextRetriever>(
          cfg.text_source.endpoint);
    } else if (cfg.text_source.mode == "local") {
      if (cfg.text_source.corpus_dir.empty()) {
        fail(Errc::config, "text.mode local needs text.corpus_dir");
      }
      text_retriever = std::make_shared<knowledge::LocalTfRetriever>(
          cfg.text_source.corpus_dir);
    } else {
      fail(Errc::config, "text.mode must be local or http");
    }
  }
  std::shared_ptr<knowledge::WebSearcher> web_searcher;
  if (configured.count(knowledge::Source::web)) {
    if (cfg.web.mode == "live") {
      web_searcher = std::make_shared<knowledge::HttpWebSearcher>(
          cfg.web.base_url, cfg.web.api_key_env);
    } else if (cfg.web.mode == "recorded") {
      if (cfg.web.recorded_dir.empty()) {
        fail(Errc::config, "web.mode recorded needs web.recorded_dir");
      }
      std::shared_ptr<knowledge::WebSearcher> inner;
      if (cfg.web.record) {
        inner = std::make_shared<knowledge::HttpWebSearcher>(
            cfg.web.base_url, cfg.web.api_key_env);
      }
      web_searcher = std::make_shared<knowledge::RecordedWebSearcher>(
          cfg.web.recorded_dir, inner);
    } else {
      fail(Errc::config, "web.mode must be live or recorded");
    }
  }

  knowledge::BrokerOptions bopts;
  bopts.configured = configured;
  bopts.k = cfg.k;
  w.broker = std::make_shared<knowledge::KnowledgeBroker>(
      bopts, w.store.get(), text_retriever, web_searcher, w.gateway);

  engine::EngineOptions eopts;
  eopts.t = cfg.t;
  eopts.kg_direct = cfg.kg_direct;
  eopts.allow_parametric = cfg.allow_parametric;
  eopts.max_llm_calls = cfg.max_llm_calls;
  eopts.max_retrievals = cfg.max_retrievals;
  w.engine = std::make_shared<engine::Engine>(w.broker, w.gateway, eopts);
  return w;
}

namespace detail {

inline std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "x" : out;
}

inline void write_json_atomic(const std::filesystem::path& file,
                              const nlohmann::json& doc) {
  std::filesystem::create_directories(file.parent_path());
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream o(tmp);
    o << doc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, file);
}

inline llm::Counters counters_from_json(const nlohmann::json& j) {
  llm::Counters c;
  c.llm_calls = j.value("llm_calls", 0L);
  c.selection_calls = j.value("selection_calls", 0L);
  c.plan_calls = j.value("plan_calls", 0L);
  c.kg_parse_calls = j.value("kg_parse_calls", 0L);
  c.backend_calls = j.value("backend_calls", 0L);
  c.cache_hits = j.value("cache_hits", 0L);
  c.operator_fallbacks = j.value("operator_fallbacks", 0L);
  c.parent_fallbacks = j.value("parent_fallbacks", 0L);
  if (j.contains("retriever_calls")) {
    for (auto& [k, v] : j["retriever_calls"].items()) {
      c.retriever_calls[k] = v.get<long>();
    }
  }
  return c;
}

}  // namespace detail

//===----------------------------------------------------------------------===//
// ask / plan / exec-plan
//===----------------------------------------------------------------------===//

inline int cmd_ask(const std::string& question, const config::RunConfig& cfg,
                   std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  try {
    Wiring w = wire(cfg);
    llm::Counters counters;
    plan::Art art = w.engine->plan_question(question, counters);
    auto [answer, trace] = w.engine->execute(art);
    trace.counters.merge(counters);
    out << answer_to_text(answer) << "\n";
    if (cfg.trace) {
      nlohmann::json doc = engine::trace_to_json(trace);
      doc["question"] = question;
      doc["final_answer"] = engine::answer_to_json(answer);
      doc["plan"] = nlohmann::json::parse(plan::serialize_art(art));
      auto file = std::filesystem::path(cfg.out_dir) /
                  ("ask-" + text::digest(question) + ".json");
      detail::write_json_atomic(file, doc);
      err << "trace written to " << file.string() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

inline int cmd_plan(const std::string& question,
                    const config::RunConfig& cfg,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    Wiring w = wire(cfg);
    llm::Counters counters;
    plan::Art art = w.engine->plan_question(question, counters);
    out << plan::serialize_art(art) << "\n";
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

inline int cmd_exec_plan(const std::string& plan_path,
                         const config::RunConfig& cfg,
                         std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  std::ifstream in(plan_path);
  if (!in) {
    err << "cannot open plan '" << plan_path << "'\n";
    return 2;
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  try {
    plan::Art art = plan::parse_art(content);
    Wiring w = wire(cfg);
    auto [answer, trace] = w.engine->execute(art);
    out << answer_to_text(answer) << "\n";
    if (cfg.trace) {
      nlohmann::json doc = engine::trace_to_json(trace);
      doc["question"] = art.source_question;
      doc["final_answer"] = engine::answer_to_json(answer);
      auto file = std::filesystem::path(cfg.out_dir) /
                  ("exec-" + text::digest(art.source_question) + ".json");
      detail::write_json_atomic(file, doc);
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

//===----------------------------------------------------------------------===//
// Batch run
//===----------------------------------------------------------------------===//

struct RunResult {
  std::string prediction;
  llm::Counters counters;
  bool failed = false;
  bool resumed = false;
};

// One run artifact per example under out_dir; report.json aggregates.
// Resumable: an existing artifact for an id is trusted and its example is
// not re-executed. Failures score as empty predictions and are flagged.
inline int cmd_run(const std::string& dataset_path,
                   const std::string& format_id, int limit,
                   const config::RunConfig& cfg,
                   std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<eval::Example> examples;
  Wiring w;
  try {
    examples = eval::load_dataset(dataset_path, format_id);
    if (limit > 0 && static_cast<std::size_t>(limit) < examples.size()) {
      examples.resize(static_cast<std::size_t>(limit));
    }
    w = wire(cfg);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }

  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  std::vector<RunResult> results(examples.size());
  std::mutex io_mutex;

  auto run_one = [&](std::size_t i) {
    const eval::Example& ex = examples[i];
    RunResult& slot = results[i];
    const auto artifact =
        out_dir / (detail::sanitize_id(ex.id) + ".json");
    {
      std::ifstream existing(artifact);
      if (existing) {
        try {
          nlohmann::json doc;
          existing >> doc;
          slot.prediction = doc.value("final_answer_text", "");
          if (doc.contains("counters")) {
            slot.counters = detail::counters_from_json(doc["counters"]);
          }
          slot.failed = doc.value("failed", false);
          slot.resumed = true;
          std::lock_guard<std::mutex> lk(io_mutex);
          err << "[" << ex.id << "] resumed\n";
          return;
        } catch (const nlohmann::json::exception&) {
          // damaged artifact: re-run the example
        }
      }
    }
    nlohmann::json doc;
    doc["id"] = ex.id;
    doc["question"] = ex.question;
    try {
      llm::Counters plan_counters;
      plan::Art art = w.engine->plan_question(ex.question, plan_counters);
      auto [answer, trace] = w.engine->execute(art);
      trace.counters.merge(plan_counters);
      slot.prediction = answer_to_text(answer);
      slot.counters = trace.counters;
      doc["plan"] = nlohmann::json::parse(plan::serialize_art(art));
      nlohmann::json tj = engine::trace_to_json(trace);
      doc["nodes"] = tj["nodes"];
      doc["counters"] = tj["counters"];
      doc["elapsed_ms"] = tj["elapsed_ms"];
      doc["final_answer"] = engine::answer_to_json(answer);
      doc["final_answer_text"] = slot.prediction;
      doc["failed"] = false;
    } catch (const Error& e) {
      slot.prediction.clear();
      slot.failed = true;
      doc["failed"] = true;
      doc["error"] = e.what();
      doc["final_answer_text"] = "";
    }
    detail::write_json_atomic(artifact, doc);
    {
      std::lock_guard<std::mutex> lk(io_mutex);
      err << "[" << ex.id << "] "
          << (slot.failed ? "FAILED" : slot.prediction) << "\n";
    }
  };

  const int width = std::max(1, cfg.concurrency);
  if (width == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < width; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= examples.size()) return;
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::map<std::string, std::string> predictions;
  std::map<std::string, llm::Counters> traces;
  long failures = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    predictions[examples[i].id] = results[i].prediction;
    traces[examples[i].id] = results[i].counters;
    if (results[i].failed) ++failures;
  }
  try {
    eval::Report report = eval::evaluate(examples, predictions, &traces);
    nlohmann::json rj = report.to_json();
    rj["failed_examples"] = failures;
    detail::write_json_atomic(out_dir / "report.json", rj);
    out << "examples: " << report.count << "\n";
    out << "overall_f1: " << report.overall << "\n";
    for (const auto& [qt, f1] : report.per_type) {
      out << "f1[" << qt << "]: " << f1 << "\n";
    }
    if (failures > 0) out << "failed: " << failures << "\n";
    out << "report: " << (out_dir / "report.json").string() << "\n";
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

//===----------------------------------------------------------------------===//
// kg-import / cache / report
//===----------------------------------------------------------------------===//

inline int cmd_kg_import(const std::string& dump_path,
                         std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  try {
    kg::KgStore store = kg::load_kg_jsonl(dump_path);
    out << "entities: " << store.entities().size() << "\n";
    out << "triples: " << store.triples().size() << "\n";
    out << "attributes: " << store.attribute_count() << "\n";
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

inline int cmd_cache(const std::string& action,
                     const config::RunConfig& cfg,
                     std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  if (cfg.cache_dir.empty()) {
    err << "no cache directory configured (--cache)\n";
    return 2;
  }
  llm::ResponseCache cache(cfg.cache_dir);
  if (action == "stats") {
    out << "entries: " << cache.size() << "\n";
    return 0;
  }
  if (action == "clear") {
    cache.clear();
    out << "cleared\n";
    return 0;
  }
  err << "unknown cache action '" << action << "' (stats, clear)\n";
  return 2;
}

inline int cmd_report(const std::string& report_path,
                      std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  std::ifstream in(report_path);
  if (!in) {
    err << "cannot open report '" << report_path << "'\n";
    return 2;
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    err << "report parse error: " << e.what() << "\n";
    return 2;
  }
  out << "examples: " << doc.value("count", 0L) << "\n";
  out << "overall_f1: " << doc.value("overall_f1", 0.0) << "\n";
  if (doc.contains("per_type")) {
    for (auto& [k, v] : doc["per_type"].items()) {
      out << "f1[" << k << "]: " << v.get<double>() << "\n";
    }
  }
  if (doc.contains("mean_counters")) {
    for (auto& [k, v] : doc["mean_counters"].items()) {
      out << "mean " << k << ": " << v.get<double>() << "\n";
    }
  }
  return 0;
}

}  // namespace cli
}  // namespace artree
