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
// Adaptive LLM execution of a substituted atomic operator over retrieved
// evidence. Output must honor the final-line grammar; anything else, an LLM
// refusal, or empty knowledge (without a parametric waiver) raises
// OperatorExecutionFailure, the engine's fallback signal.
//===----------------------------------------------------------------------===//

#include <map>
#include <string>
#include <vector>

#include "artree/errors.hpp"
#include "artree/knowledge.hpp"
#include "artree/llm.hpp"
#include "artree/operators.hpp"
#include "artree/plan.hpp"
#include "artree/text.hpp"

namespace artree {
namespace exec {

struct ExecutorOptions {
  // Answer Search/Relate (and symbolically filterable) leaves straight from
  // the kg answer, skipping the LLM. Off by default: the executor reasons
  // over all evidence, kg included.
  bool kg_direct = false;
  // Permit execution with an empty evidence bundle (parametric answering).
  bool allow_parametric = false;
};

namespace detail {

inline prompts::Id template_for(plan::OpName op) {
  switch (op) {
    case plan::OpName::search: return prompts::Id::executor_search;
    case plan::OpName::relate: return prompts::Id::executor_relate;
    case plan::OpName::filter: return prompts::Id::executor_filter;
  }
  return prompts::Id::executor_search;
}

// Subset enforcement for Filter: drop executor outputs outside the input
// entity set, dedupe, and normalize casing back to the input's spelling.
inline std::vector<std::string> enforce_subset(
    const std::vector<std::string>& produced,
    const std::vector<std::string>& inputs) {
  std::map<std::string, std::string> canon;
  for (const auto& e : inputs) {
    canon.emplace(text::normalize_name(e), e);
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : produced) {
    auto it = canon.find(text::normalize_name(p));
    if (it == canon.end()) continue;
    if (!seen.insert(it->first).second) continue;
    out.push_back(it->second);
  }
  return out;
}

inline Answer split_kg_answer(const std::string& serialized, bool as_list) {
  std::vector<std::string> parts;
  std::size_t b = 0;
  while (b <= serialized.size()) {
    std::size_t e = serialized.find("; ", b);
    if (e == std::string::npos) {
      parts.push_back(serialized.substr(b));
      break;
    }
    parts.push_back(serialized.substr(b, e - b));
    b = e + 2;
  }
  if (!as_list && parts.size() == 1) return parts.front();
  return parts;
}

}  // namespace detail

// One reasoning call per invocation. `spec` must be fully substituted and,
// for Filter, already gated (survivor entities only).
inline ops::LocalAnswer execute_operator(const plan::OperatorSpec& spec,
                                         const std::string& subquestion,
                                         const knowledge::RetrievalBundle& k,
                                         const llm::Gateway& gateway,
                                         llm::Counters& counters,
                                         const ExecutorOptions& opts = {}) {
  if (opts.kg_direct && k.kg_answer && !k.kg_answer->empty()) {
    ops::LocalAnswer out;
    out.value = detail::split_kg_answer(*k.kg_answer,
                                        spec.op != plan::OpName::relate);
    out.evidence = k.passage_ids();
    out.method = ops::LocalAnswer::Method::kg_symbolic;
    return out;
  }
  if (k.empty() && !opts.allow_parametric) {
    fail(Errc::operator_execution_failure,
         "no knowledge retrieved for operator " + plan::to_string(spec));
  }

  llm::CompletionResult res = gateway.complete(
      detail::template_for(spec.op),
      {{"question", subquestion},
       {"operator", plan::to_string(spec)},
       {"knowledge", k.render()}},
      counters, llm::CallKind::reasoning);

  auto parsed = llm::parse_answer_line(res.response, /*strict=*/true);
  if (!parsed) {
    fail(Errc::operator_execution_failure,
         "executor output violates the answer grammar: " +
             res.response.substr(0, 200));
  }
  if (parsed->unknown) {
    fail(Errc::operator_execution_failure,
         "executor could not resolve " + plan::to_string(spec));
  }

  ops::LocalAnswer out;
  out.evidence = k.passage_ids();
  out.method = ops::LocalAnswer::Method::operator_llm;
  switch (spec.op) {
    case plan::OpName::search:
      out.value = answer_to_list(parsed->value);
      break;
    case plan::OpName::relate:
      out.value = parsed->value;
      break;
    case plan::OpName::filter:
      out.value = detail::enforce_subset(answer_to_list(parsed->value),
                                         ops::filter_entities(spec));
      break;
  }
  return out;
}

}  // namespace exec
}  // namespace artree
