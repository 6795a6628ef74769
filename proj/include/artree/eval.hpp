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
// Evaluation: extractive-QA answer normalization, token-level F1 (multiset
// overlap, maxed over gold answers), dataset loading, and aggregate reports.
//===----------------------------------------------------------------------===//

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/llm.hpp"
#include "artree/text.hpp"

namespace artree {
namespace eval {

struct Example {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;  // non-empty
  std::string qtype;                      // optional; empty = untyped
  std::map<std::string, std::string> meta;
};

//===----------------------------------------------------------------------===//
// Scoring
//===----------------------------------------------------------------------===//

// Extractive-QA convention: lowercase, delete punctuation characters, drop
// the articles {a, an, the}, split on whitespace. Deleting (not blanking)
// punctuation keeps "U.S." and "Spider-Man" single tokens. Idempotent.
inline std::vector<std::string> normalize_answer(const std::string& s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (text::is_ascii_punct(c)) continue;
    cleaned.push_back(text::ascii_lower(c));
  }
  std::vector<std::string> out;
  for (auto& t : text::split_ws(cleaned)) {
    if (t == "a" || t == "an" || t == "the") continue;
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

inline double f1_pair(const std::vector<std::string>& pred,
                      const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string, long> want;
  for (const auto& t : gold) ++want[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = want.find(t);
    if (it != want.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision =
      static_cast<double>(common) / static_cast<double>(pred.size());
  double recall =
      static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

// Token-level F1, maximum over the gold answers.
inline double token_f1(const std::string& prediction,
                       const std::vector<std::string>& golds) {
  std::vector<std::string> pred = normalize_answer(prediction);
  double best = 0.0;
  for (const auto& g : golds) {
    best = std::max(best, detail::f1_pair(pred, normalize_answer(g)));
  }
  return best;
}

//===----------------------------------------------------------------------===//
// Dataset loading
//===----------------------------------------------------------------------===//

namespace detail {

inline std::vector<nlohmann::json> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::format, "cannot open dataset '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::string trimmed = text::trim(content);
  std::vector<nlohmann::json> out;
  if (!trimmed.empty() && trimmed.front() == '[') {
    // whole-file JSON array (native HotpotQA-style dumps)
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format, std::string("dataset array: ") + e.what());
    }
    for (auto& r : arr) out.push_back(std::move(r));
    return out;
  }
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string line = content.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++lineno;
    pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.back().is_object()) {
      fail(Errc::format,
           "line " + std::to_string(lineno) + ": record must be an object");
    }
    out.back()["__line"] = lineno;
  }
  return out;
}

inline std::string record_locus(const nlohmann::json& r, std::size_t index) {
  if (r.contains("__line")) {
    return "line " + std::to_string(r["__line"].get<int>());
  }
  return "record " + std::to_string(index);
}

}  // namespace detail

// Formats: "generic" (the documented JSONL), "hotpotqa"/"twowiki" (native
// {_id, question, answer, type}), "musique" ({id, question, answer}),
// "crag" ({interaction_id, query, answer, question_type}).
inline std::vector<Example> load_dataset(const std::string& path,
                                         const std::string& format_id =
                                             "generic") {
  auto records = detail::read_records(path);
  std::vector<Example> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = detail::record_locus(r, i);
    Example ex;
    try {
      if (format_id == "generic") {
        ex.id = r.at("id").is_string() ? r["id"].get<std::string>()
                                       : r["id"].dump();
        ex.question = r.at("question").get<std::string>();
        for (const auto& a : r.at("answers")) {
          ex.gold_answers.push_back(
              a.is_string() ? a.get<std::string>() : a.dump());
        }
        ex.qtype = r.value("qtype", "");
        if (r.contains("meta") && r["meta"].is_object()) {
          for (auto& [k, v] : r["meta"].items()) {
            ex.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
          }
        }
      } else if (format_id == "hotpotqa" || format_id == "twowiki") {
        ex.id = r.at("_id").get<std::string>();
        ex.question = r.at("question").get<std::string>();
        ex.gold_answers.push_back(r.at("answer").get<std::string>());
        ex.qtype = r.value("type", "");
      } else if (format_id == "musique") {
        ex.id = r.at("id").get<std::string>();
        ex.question = r.at("question").get<std::string>();
        ex.gold_answers.push_back(r.at("answer").get<std::string>());
      } else if (format_id == "crag") {
        ex.id = r.contains("interaction_id")
                    ? r["interaction_id"].get<std::string>()
                    : std::to_string(i);
        ex.question = r.contains("query") ? r["query"].get<std::string>()
                                          : r.at("question")
                                                .get<std::string>();
        ex.gold_answers.push_back(r.at("answer").get<std::string>());
        ex.qtype = r.value("question_type", "");
      } else {
        fail(Errc::format, "unknown dataset format '" + format_id + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format, where + ": " + e.what());
    }
    if (ex.gold_answers.empty()) {
      fail(Errc::format, where + ": empty answers");
    }
    for (const auto& a : ex.gold_answers) {
      if (text::trim(a).empty()) {
        fail(Errc::format, where + ": blank gold answer");
      }
    }
    if (!ids.insert(ex.id).second) {
      fail(Errc::format, where + ": duplicate id '" + ex.id + "'");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Aggregation
//===----------------------------------------------------------------------===//

struct Report {
  double overall = 0.0;  // unweighted mean of per-example F1
  std::map<std::string, double> per_type;
  std::map<std::string, long> type_counts;
  long count = 0;
  std::map<std::string, double> mean_counters;
  std::vector<std::pair<std::string, double>> per_example;  // (id, f1)

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["overall_f1"] = overall;
    j["count"] = count;
    j["per_type"] = nlohmann::json::object();
    for (const auto& [k, v] : per_type) j["per_type"][k] = v;
    j["type_counts"] = nlohmann::json::object();
    for (const auto& [k, v] : type_counts) j["type_counts"][k] = v;
    j["mean_counters"] = nlohmann::json::object();
    for (const auto& [k, v] : mean_counters) j["mean_counters"][k] = v;
    j["per_example"] = nlohmann::json::object();
    for (const auto& [id, f1] : per_example) j["per_example"][id] = f1;
    return j;
  }
};

// predictions: example id -> prediction text (list answers pre-joined with
// ", "). traces: optional per-example counters for mean-cost reporting.
inline Report evaluate(
    const std::vector<Example>& examples,
    const std::map<std::string, std::string>& predictions,
    const std::map<std::string, llm::Counters>* traces = nullptr) {
  Report rep;
  rep.count = static_cast<long>(examples.size());
  std::map<std::string, double> type_sum;
  double sum = 0.0;
  for (const auto& ex : examples) {
    auto it = predictions.find(ex.id);
    if (it == predictions.end()) {
      fail(Errc::missing_prediction, "no prediction for id '" + ex.id + "'");
    }
    double f1 = token_f1(it->second, ex.gold_answers);
    sum += f1;
    rep.per_example.emplace_back(ex.id, f1);
    if (!ex.qtype.empty()) {
      type_sum[ex.qtype] += f1;
      ++rep.type_counts[ex.qtype];
    }
  }
  if (rep.count > 0) rep.overall = sum / static_cast<double>(rep.count);
  for (const auto& [k, v] : type_sum) {
    rep.per_type[k] = v / static_cast<double>(rep.type_counts[k]);
  }
  if (traces && !traces->empty()) {
    double n = static_cast<double>(traces->size());
    llm::Counters total;
    for (const auto& [id, c] : *traces) total.merge(c);
    rep.mean_counters["llm_calls"] = total.llm_calls / n;
    rep.mean_counters["selection_calls"] = total.selection_calls / n;
    rep.mean_counters["plan_calls"] = total.plan_calls / n;
    rep.mean_counters["kg_parse_calls"] = total.kg_parse_calls / n;
    rep.mean_counters["backend_calls"] = total.backend_calls / n;
    rep.mean_counters["cache_hits"] = total.cache_hits / n;
    rep.mean_counters["operator_fallbacks"] = total.operator_fallbacks / n;
    rep.mean_counters["parent_fallbacks"] = total.parent_fallbacks / n;
    rep.mean_counters["retriever_calls"] = total.total_retrievals() / n;
  }
  return rep;
}

}  // namespace eval
}  // namespace artree
