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
// Bottom-up tree execution. Post-order over the reasoning tree; leaves run
// source selection -> retrieval -> operator reasoning with a direct-RAG
// fallback that reuses the already-retrieved evidence; direct-reasoning
// nodes answer from earlier sibling answers without retrieval; other parents
// synthesize from child answers, falling back to fresh retrieval plus direct
// RAG when synthesis returns Unknown. The root's answer is the run answer.
//===----------------------------------------------------------------------===//

#include <chrono>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/executor.hpp"
#include "artree/knowledge.hpp"
#include "artree/llm.hpp"
#include "artree/operators.hpp"
#include "artree/plan.hpp"

namespace artree {
namespace engine {

enum class Method { operator_reasoning, sibling, child, direct_rag };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::operator_reasoning: return "operator";
    case Method::sibling: return "sibling";
    case Method::child: return "child";
    case Method::direct_rag: return "direct_rag";
  }
  return "?";
}

struct NodeOutcome {
  int index = -1;
  std::string question;  // after placeholder substitution
  Answer answer = std::string{};
  bool unknown = false;
  Method method = Method::child;
  std::set<std::string> sources_used;
  std::vector<std::string> evidence;
  bool failed_operator = false;
  bool no_evidence = false;  // answered without any retrieved evidence
  bool degraded = false;     // backend/budget trouble forced an Unknown
};

struct RunTrace {
  std::vector<NodeOutcome> outcomes;  // positional: outcome[i] is node i
  llm::Counters counters;
  double wall_ms = 0.0;
};

struct EngineOptions {
  double t = 0.5;  // Filter overlap threshold
  bool kg_direct = false;
  bool allow_parametric = false;
  long max_llm_calls = 0;    // 0 = unlimited
  long max_retrievals = 0;
};

class Engine {
 public:
  Engine(std::shared_ptr<knowledge::KnowledgeBroker> broker,
         std::shared_ptr<llm::Gateway> gateway, EngineOptions opts = {})
      : broker_(std::move(broker)),
        gateway_(std::move(gateway)),
        opts_(opts) {}

  // Plan generation with one error-annotated retry on a malformed plan.
  plan::Art plan_question(const std::string& question,
                          llm::Counters& counters) const {
    counters.max_llm_calls = opts_.max_llm_calls;
    counters.max_retrievals = opts_.max_retrievals;
    llm::CompletionResult res =
        gateway_->complete(prompts::Id::plan_generation,
                           {{"question", question}, {"feedback", ""}},
                           counters, llm::CallKind::plan);
    try {
      return plan::parse_art(res.response);
    } catch (const Error& first) {
      std::string feedback =
          std::string("Your previous plan was rejected: ") + first.what() +
          "\nOutput only the corrected JSON object.\n\n";
      llm::CompletionResult retry = gateway_->complete(
          prompts::Id::plan_generation,
          {{"question", question}, {"feedback", feedback}}, counters,
          llm::CallKind::plan);
      return plan::parse_art(retry.response);
    }
  }

  // Executes a validated tree. Every node receives an outcome; per-node
  // trouble degrades to an Unknown answer rather than aborting, except the
  // one fatal combination: no source yielded knowledge and the fallback
  // LLM path failed too.
  std::pair<Answer, RunTrace> execute(const plan::Art& art) const {
    auto t0 = std::chrono::steady_clock::now();
    RunTrace trace;
    trace.counters.max_llm_calls = opts_.max_llm_calls;
    trace.counters.max_retrievals = opts_.max_retrievals;
    trace.outcomes.resize(art.nodes.size());
    AnswerMap answers;

    for (int idx : plan::post_order(art)) {
      const plan::ArtNode& node = art.at(idx);
      NodeOutcome out;
      out.index = idx;
      bool all_sources_failed_here = false;
      try {
        out.question = plan::substitute_text(node.question, answers);
      } catch (const Error&) {
        out.question = node.question;
      }
      try {
        switch (node.kind) {
          case plan::NodeKind::atomic:
            run_leaf(node, out, trace, answers, all_sources_failed_here);
            break;
          case plan::NodeKind::direct_reasoning:
            run_sibling(node, out, trace);
            break;
          case plan::NodeKind::root:
          case plan::NodeKind::composite:
            run_parent(node, out, trace, all_sources_failed_here);
            break;
        }
      } catch (const Error& e) {
        if (e.code() == Errc::engine_abort) throw;
        if ((e.code() == Errc::backend || e.code() == Errc::script_gap) &&
            all_sources_failed_here) {
          fail(Errc::engine_abort,
               "node " + std::to_string(idx) +
                   ": retrieval and reasoning both failed: " + e.what());
        }
        out.unknown = true;
        out.answer = std::string("Unknown");
        out.degraded = true;
      }
      answers[idx] =
          out.unknown ? Answer(std::string("Unknown")) : out.answer;
      trace.outcomes[static_cast<std::size_t>(idx)] = std::move(out);
    }

    trace.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    Answer final_answer = trace.outcomes[0].unknown
                              ? Answer(std::string("Unknown"))
                              : trace.outcomes[0].answer;
    return {final_answer, std::move(trace)};
  }

  const EngineOptions& options() const { return opts_; }

 private:
  //===--------------------------------------------------------------------===//
  // Leaf: selection -> retrieval -> operator reasoning, direct-RAG fallback.
  //===--------------------------------------------------------------------===//
  void run_leaf(const plan::ArtNode& node, NodeOutcome& out, RunTrace& trace,
                const AnswerMap& answers,
                bool& all_sources_failed_here) const {
    out.method = Method::operator_reasoning;
    plan::OperatorSpec spec;
    knowledge::RetrievalBundle bundle;
    bool retrieved = false;
    try {
      spec = plan::substitute_spec(*node.op, answers);

      std::set<knowledge::Source> sources =
          broker_->select_sources(out.question, trace.counters);
      for (auto s : sources) out.sources_used.insert(source_name(s));

      if (spec.op == plan::OpName::filter) {
        run_filter_leaf(spec, sources, out, trace, bundle, retrieved);
        return;
      }

      knowledge::RetrievalRequest req;
      req.question = out.question;
      req.query = ops::formulate_query(spec).front();
      req.kg_mode = knowledge::RetrievalRequest::KgMode::spec;
      req.spec = &spec;
      bundle = retrieve_guarded(req, sources, trace, all_sources_failed_here);
      retrieved = true;

      ops::LocalAnswer local =
          exec::execute_operator(spec, out.question, bundle, *gateway_,
                                 trace.counters, executor_options());
      out.answer = local.value;
      out.evidence = local.evidence;
      out.no_evidence = bundle.empty();
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::operator_execution_failure:
        case Errc::missing_answer:
        case Errc::type_mismatch:
        case Errc::unsubstituted_placeholder:
        case Errc::empty_query:
        case Errc::all_sources_failed:
          break;  // fallback below
        default:
          throw;
      }
      if (e.code() == Errc::all_sources_failed) {
        all_sources_failed_here = true;
      }
      ++trace.counters.operator_fallbacks;
      out.failed_operator = true;
      out.method = Method::direct_rag;
      if (!retrieved && !all_sources_failed_here) {
        // Failure before/without retrieval: fetch fresh evidence for the
        // sub-question itself.
        std::set<knowledge::Source> sources =
            broker_->select_sources(out.question, trace.counters);
        for (auto s : sources) out.sources_used.insert(source_name(s));
        knowledge::RetrievalRequest req;
        req.question = out.question;
        req.query = out.question;
        req.kg_mode = knowledge::RetrievalRequest::KgMode::program;
        try {
          bundle = broker_->retrieve(req, sources, trace.counters);
        } catch (const Error& re) {
          if (re.code() != Errc::all_sources_failed) throw;
          all_sources_failed_here = true;
        }
      }
      direct_rag_answer(out, bundle, trace);
    }
  }

  // Filter leaves retrieve once per input entity, concatenate each entity's
  // passages in rank order, gate on the overlap coefficient, and hand only
  // the survivors (with their evidence) to the executor. An empty survivor
  // set is already the answer: the empty entity list.
  void run_filter_leaf(const plan::OperatorSpec& spec,
                       const std::set<knowledge::Source>& sources,
                       NodeOutcome& out, RunTrace& trace,
                       knowledge::RetrievalBundle& merged,
                       bool& retrieved) const {
    std::vector<std::string> entities = ops::filter_entities(spec);
    std::vector<std::string> queries = ops::formulate_query(spec);

    std::vector<ops::GatedEntity> gated;
    std::vector<knowledge::RetrievalBundle> bundles;
    gated.reserve(entities.size());
    bundles.reserve(entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) {
      knowledge::RetrievalRequest req;
      req.question = out.question;
      req.query = queries[i];
      req.kg_mode = knowledge::RetrievalRequest::KgMode::profile;
      req.entity = entities[i];
      knowledge::RetrievalBundle b;
      try {
        b = broker_->retrieve(req, sources, trace.counters);
      } catch (const Error& e) {
        if (e.code() != Errc::all_sources_failed) throw;
        // this entity simply has no evidence; the gate will discard it
      }
      ops::GatedEntity g;
      g.entity.name = entities[i];
      std::vector<std::string> bodies;
      for (const auto& p : b.passages) bodies.push_back(p.body);
      if (b.kg_answer && !b.kg_answer->empty()) {
        bodies.push_back(*b.kg_answer);
      }
      g.passage = text::join(bodies, "\n");
      gated.push_back(std::move(g));
      bundles.push_back(std::move(b));
    }
    retrieved = true;

    ops::OverlapGate gate{opts_.t};
    auto survivors = ops::filter_gate(gated, gate, queries);

    plan::OperatorSpec gated_spec;
    gated_spec.op = plan::OpName::filter;
    std::vector<plan::Arg> items;
    std::set<std::string> surviving_names;
    for (const auto& s : survivors) {
      items.push_back(plan::Arg::lit(s.entity.name));
      surviving_names.insert(s.entity.name);
    }
    gated_spec.args.push_back(plan::Arg::lst(std::move(items)));
    if (spec.args.size() > 1) gated_spec.args.push_back(spec.args[1]);

    std::set<std::string> seen_ids;
    for (std::size_t i = 0; i < gated.size(); ++i) {
      if (!surviving_names.count(gated[i].entity.name)) continue;
      for (auto& p : bundles[i].passages) {
        if (seen_ids.insert(p.id()).second) {
          merged.passages.push_back(std::move(p));
        }
      }
      if (bundles[i].kg_answer && !merged.kg_answer) {
        merged.kg_answer = bundles[i].kg_answer;
      }
    }
    merged.query_per_source["filter"] = text::join(queries, " | ");

    if (survivors.empty()) {
      out.answer = std::vector<std::string>{};
      out.no_evidence = true;
      return;
    }
    ops::LocalAnswer local =
        exec::execute_operator(gated_spec, out.question, merged, *gateway_,
                               trace.counters, executor_options());
    out.answer = local.value;
    out.evidence = local.evidence;
  }

  //===--------------------------------------------------------------------===//
  // Direct reasoning: earlier sibling answers only, never retrieval.
  //===--------------------------------------------------------------------===//
  void run_sibling(const plan::ArtNode& node, NodeOutcome& out,
                   RunTrace& trace) const {
    out.method = Method::sibling;
    std::vector<int> refs = plan::find_placeholders(node.question);
    std::vector<int> unique;
    for (int r : refs) {
      if (std::find(unique.begin(), unique.end(), r) == unique.end()) {
        unique.push_back(r);
      }
    }
    std::vector<std::string> lines;
    for (int r : unique) {
      const NodeOutcome& sib = trace.outcomes[static_cast<std::size_t>(r)];
      lines.push_back("Q: " + sib.question + " A: " +
                      (sib.unknown ? "Unknown" : answer_to_text(sib.answer)));
    }
    llm::CompletionResult res = gateway_->complete(
        prompts::Id::sibling_answer,
        {{"question", out.question}, {"siblings", text::join(lines, "\n")}},
        trace.counters, llm::CallKind::reasoning);
    auto parsed = llm::parse_answer_line(res.response, /*strict=*/false);
    if (!parsed || parsed->unknown) {
      // No retrieval fallback exists for direct-reasoning nodes; Unknown
      // flows upward.
      out.unknown = true;
      out.answer = std::string("Unknown");
      return;
    }
    out.answer = parsed->value;
  }

  //===--------------------------------------------------------------------===//
  // Parent: child-answer synthesis; Unknown triggers fresh retrieval plus
  // direct RAG (child answers deliberately excluded from that prompt).
  //===--------------------------------------------------------------------===//
  void run_parent(const plan::ArtNode& node, NodeOutcome& out,
                  RunTrace& trace, bool& all_sources_failed_here) const {
    out.method = Method::child;
    std::vector<std::string> lines;
    for (int c : node.children) {
      const NodeOutcome& ch = trace.outcomes[static_cast<std::size_t>(c)];
      lines.push_back("Q: " + ch.question + " A: " +
                      (ch.unknown ? "Unknown" : answer_to_text(ch.answer)));
    }
    llm::CompletionResult res = gateway_->complete(
        prompts::Id::child_answer,
        {{"question", out.question}, {"children", text::join(lines, "\n")}},
        trace.counters, llm::CallKind::reasoning);
    auto parsed = llm::parse_answer_line(res.response, /*strict=*/false);
    if (parsed && !parsed->unknown) {
      out.answer = parsed->value;
      return;
    }

    ++trace.counters.parent_fallbacks;
    out.method = Method::direct_rag;
    std::set<knowledge::Source> sources =
        broker_->select_sources(out.question, trace.counters);
    for (auto s : sources) out.sources_used.insert(source_name(s));
    knowledge::RetrievalRequest req;
    req.question = out.question;
    req.query = out.question;
    req.kg_mode = knowledge::RetrievalRequest::KgMode::program;
    knowledge::RetrievalBundle bundle;
    try {
      bundle = broker_->retrieve(req, sources, trace.counters);
    } catch (const Error& e) {
      if (e.code() != Errc::all_sources_failed) throw;
      all_sources_failed_here = true;
    }
    direct_rag_answer(out, bundle, trace);
  }

  //===--------------------------------------------------------------------===//
  // Shared direct-RAG reasoning step over whatever evidence is at hand.
  //===--------------------------------------------------------------------===//
  void direct_rag_answer(NodeOutcome& out,
                         const knowledge::RetrievalBundle& bundle,
                         RunTrace& trace) const {
    llm::CompletionResult res = gateway_->complete(
        prompts::Id::direct_rag,
        {{"question", out.question}, {"knowledge", bundle.render()}},
        trace.counters, llm::CallKind::reasoning);
    auto parsed = llm::parse_answer_line(res.response, /*strict=*/false);
    out.no_evidence = bundle.empty();
    out.evidence = bundle.passage_ids();
    if (!parsed || parsed->unknown) {
      out.unknown = true;
      out.answer = std::string("Unknown");
      return;
    }
    out.answer = parsed->value;
  }

  knowledge::RetrievalBundle retrieve_guarded(
      const knowledge::RetrievalRequest& req,
      const std::set<knowledge::Source>& sources, RunTrace& trace,
      bool& all_sources_failed_here) const {
    try {
      return broker_->retrieve(req, sources, trace.counters);
    } catch (const Error& e) {
      if (e.code() == Errc::all_sources_failed) {
        all_sources_failed_here = true;
      }
      throw;
    }
  }

  exec::ExecutorOptions executor_options() const {
    exec::ExecutorOptions eo;
    eo.kg_direct = opts_.kg_direct;
    eo.allow_parametric = opts_.allow_parametric;
    return eo;
  }

  std::shared_ptr<knowledge::KnowledgeBroker> broker_;
  std::shared_ptr<llm::Gateway> gateway_;
  EngineOptions opts_;
};

//===----------------------------------------------------------------------===//
// Run artifact serialization
//===----------------------------------------------------------------------===//

inline nlohmann::json answer_to_json(const Answer& a) {
  if (answer_is_list(a)) return nlohmann::json(answer_to_list(a));
  return nlohmann::json(answer_to_text(a));
}

inline nlohmann::json counters_to_json(const llm::Counters& c) {
  nlohmann::json j;
  j["llm_calls"] = c.llm_calls;
  j["selection_calls"] = c.selection_calls;
  j["plan_calls"] = c.plan_calls;
  j["kg_parse_calls"] = c.kg_parse_calls;
  j["backend_calls"] = c.backend_calls;
  j["cache_hits"] = c.cache_hits;
  j["operator_fallbacks"] = c.operator_fallbacks;
  j["parent_fallbacks"] = c.parent_fallbacks;
  j["retriever_calls"] = nlohmann::json::object();
  for (const auto& [s, n] : c.retriever_calls) j["retriever_calls"][s] = n;
  return j;
}

inline nlohmann::json trace_to_json(const RunTrace& trace,
                                    bool include_timing = true) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& o : trace.outcomes) {
    nlohmann::json n;
    n["idx"] = o.index;
    n["question"] = o.question;
    n["answer"] = answer_to_json(o.answer);
    n["unknown"] = o.unknown;
    n["method"] = method_name(o.method);
    n["sources"] = std::vector<std::string>(o.sources_used.begin(),
                                            o.sources_used.end());
    n["evidence"] = o.evidence;
    n["failed_operator"] = o.failed_operator;
    n["no_evidence"] = o.no_evidence;
    n["degraded"] = o.degraded;
    j["nodes"].push_back(std::move(n));
  }
  j["counters"] = counters_to_json(trace.counters);
  if (include_timing) j["elapsed_ms"] = trace.wall_ms;
  return j;
}

}  // namespace engine
}  // namespace artree
