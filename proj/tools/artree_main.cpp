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

//===----------------------------------------------------------------------===//
// artree command line. Flags override environment overrides config file.
//===----------------------------------------------------------------------===//

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "artree/cli.hpp"
#include "artree/config.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> sources;
  std::optional<int> k;
  std::optional<double> t;
  std::optional<std::string> backend;
  std::optional<std::string> script;
  std::optional<std::string> cache;
  std::optional<std::string> out;
  std::optional<int> concurrency;
  bool trace = false;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "Config file (JSON)");
  cmd->add_option("--sources", f.sources,
                  "Comma separated knowledge sources (kg,text,web)");
  cmd->add_option("--k", f.k, "Passages per retriever");
  cmd->add_option("--t", f.t, "Filter overlap threshold in [0,1]");
  cmd->add_option("--backend", f.backend,
                  "LLM backend: live, scripted or recorded");
  cmd->add_option("--script", f.script, "Script file for --backend scripted");
  cmd->add_option("--cache", f.cache, "Response cache directory");
  cmd->add_option("--out", f.out, "Output directory for run artifacts");
  cmd->add_option("--concurrency", f.concurrency, "Worker threads for run");
  cmd->add_flag("--trace", f.trace, "Write a per-question trace artifact");
}

artree::config::RunConfig resolve(const Flags& f) {
  artree::config::RunConfig cfg = artree::config::load(f.config_path);
  if (f.sources) {
    cfg.sources.clear();
    std::string cur;
    for (char c : *f.sources + ",") {
      if (c == ',') {
        auto s = artree::text::trim(cur);
        if (!s.empty()) cfg.sources.push_back(s);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
  }
  if (f.k) cfg.k = *f.k;
  if (f.t) cfg.t = *f.t;
  if (f.backend) cfg.backend.kind = *f.backend;
  if (f.script) cfg.backend.script = *f.script;
  if (f.cache) cfg.cache_dir = *f.cache;
  if (f.out) cfg.out_dir = *f.out;
  if (f.concurrency) cfg.concurrency = *f.concurrency;
  if (f.trace) cfg.trace = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artree: question decomposition over mixed knowledge sources"};
  app.require_subcommand(1);

  Flags flags;
  std::string question;
  std::string plan_path;
  std::string dataset_path;
  std::string format_id = "generic";
  std::string dump_path;
  std::string cache_action;
  std::string report_path;
  int limit = 0;

  CLI::App* ask = app.add_subcommand("ask", "Answer a single question");
  ask->add_option("question", question, "Question text")->required();
  add_common_flags(ask, flags);

  CLI::App* plan = app.add_subcommand("plan", "Print the plan JSON");
  plan->add_option("question", question, "Question text")->required();
  add_common_flags(plan, flags);

  CLI::App* exec_plan =
      app.add_subcommand("exec-plan", "Execute a stored plan JSON file");
  exec_plan->add_option("plan", plan_path, "Plan JSON file")->required();
  add_common_flags(exec_plan, flags);

  CLI::App* run = app.add_subcommand("run", "Run a dataset and score it");
  run->add_option("dataset", dataset_path, "Dataset file")->required();
  run->add_option("--format", format_id,
                  "Dataset format: generic, hotpotqa, twowiki, musique, crag");
  run->add_option("--limit", limit, "Run only the first N examples");
  add_common_flags(run, flags);

  CLI::App* kg_import =
      app.add_subcommand("kg-import", "Validate a KG dump and print counts");
  kg_import->add_option("dump", dump_path, "KG JSONL dump")->required();

  CLI::App* cache_cmd = app.add_subcommand("cache", "Cache admin");
  cache_cmd->add_option("action", cache_action, "stats or clear")->required();
  add_common_flags(cache_cmd, flags);

  CLI::App* report_cmd =
      app.add_subcommand("report", "Pretty print a report.json");
  report_cmd->add_option("report", report_path, "report.json path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(ask)) {
      return artree::cli::cmd_ask(question, resolve(flags));
    }
    if (app.got_subcommand(plan)) {
      return artree::cli::cmd_plan(question, resolve(flags));
    }
    if (app.got_subcommand(exec_plan)) {
      return artree::cli::cmd_exec_plan(plan_path, resolve(flags));
    }
    if (app.got_subcommand(run)) {
      return artree::cli::cmd_run(dataset_path, format_id, limit,
                                  resolve(flags));
    }
    if (app.got_subcommand(kg_import)) {
      return artree::cli::cmd_kg_import(dump_path);
    }
    if (app.got_subcommand(cache_cmd)) {
      return artree::cli::cmd_cache(cache_action, resolve(flags));
    }
    if (app.got_subcommand(report_cmd)) {
      return artree::cli::cmd_report(report_path);
    }
  } catch (const artree::Error& e) {
    std::cerr << e.what() << "\n";
    return artree::cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}
