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
// Atomic operator semantics that need no I/O: retrieval query formulation
// and the Filter overlap-coefficient gate. The LLM-executor dispatch lives
// in executor.hpp, on top of the knowledge and llm modules.
//===----------------------------------------------------------------------===//

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "artree/errors.hpp"
#include "artree/plan.hpp"
#include "artree/text.hpp"

namespace artree {
namespace ops {

struct EntityRef {
  std::string name;                      // non-empty
  std::optional<std::string> descriptor;
  std::optional<std::string> kg_id;
};

struct LocalAnswer {
  Answer value;                       // entity list, attribute, or relation
  std::vector<std::string> evidence;  // passage ids
  enum class Method { operator_llm, kg_symbolic } method =
      Method::operator_llm;
};

struct OverlapGate {
  double threshold = 0.5;
};

namespace detail {

inline void require_substituted(const plan::Arg& a) {
  if (a.kind == plan::Arg::Kind::placeholder) {
    fail(Errc::unsubstituted_placeholder,
         "operator argument still holds placeholder [" +
             std::to_string(a.ref) + "]");
  }
  for (const auto& it : a.items) require_substituted(it);
}

inline std::string arg_text(const plan::Arg& a) {
  if (a.kind == plan::Arg::Kind::literal) return a.value;
  std::vector<std::string> parts;
  for (const auto& it : a.items) parts.push_back(arg_text(it));
  return text::join(parts, ", ");
}

}  // namespace detail

// The entity list a substituted Filter spec operates on.
inline std::vector<std::string> filter_entities(const plan::OperatorSpec& s) {
  std::vector<std::string> out;
  if (s.args.empty()) return out;
  const plan::Arg& first = s.args[0];
  if (first.kind == plan::Arg::Kind::list) {
    for (const auto& it : first.items) out.push_back(detail::arg_text(it));
  } else {
    out.push_back(detail::arg_text(first));
  }
  return out;
}

// Search/Relate issue one space-joined query; Filter issues one
// "{entity_name} {condition}" query per input entity.
inline std::vector<std::string> formulate_query(
    const plan::OperatorSpec& spec) {
  for (const auto& a : spec.args) detail::require_substituted(a);
  switch (spec.op) {
    case plan::OpName::search:
    case plan::OpName::relate: {
      std::vector<std::string> parts;
      for (const auto& a : spec.args) {
        std::string t = detail::arg_text(a);
        if (!t.empty()) parts.push_back(std::move(t));
      }
      return {text::join(parts, " ")};
    }
    case plan::OpName::filter: {
      std::string condition =
          spec.args.size() > 1 ? detail::arg_text(spec.args[1]) : "";
      std::vector<std::string> out;
      for (const auto& e : filter_entities(spec)) {
        out.push_back(condition.empty() ? e : e + " " + condition);
      }
      return out;
    }
  }
  return {};
}

// O(q, p) = |q ∩ p| / min(|q|, |p|) over normalized token sets.
// Empty passage scores 0; empty query is a caller error.
inline double overlap_coefficient(const std::set<std::string>& q,
                                  const std::set<std::string>& p) {
  if (q.empty()) fail(Errc::empty_query, "overlap query token set is empty");
  if (p.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : q) common += p.count(t);
  return static_cast<double>(common) /
         static_cast<double>(std::min(q.size(), p.size()));
}

inline double overlap_coefficient(const std::string& query,
                                  const std::string& passage) {
  return overlap_coefficient(text::token_set(query),
                             text::token_set(passage));
}

struct GatedEntity {
  EntityRef entity;
  std::string passage;  // retrieval-rank-ordered concatenation
  double overlap = 0.0;
};

// Keeps exactly the entities with O >= t (discard condition is strict <),
// preserving input order. query_per_entity[i] pairs with entities[i].
// An entity with no retrieved passage carries no evidence and is dropped
// outright, even when t = 0 would admit O = 0.
inline std::vector<GatedEntity> filter_gate(
    const std::vector<GatedEntity>& entities, const OverlapGate& gate,
    const std::vector<std::string>& query_per_entity) {
  std::vector<GatedEntity> out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    GatedEntity g = entities[i];
    if (g.passage.empty()) continue;
    auto q = text::token_set(i < query_per_entity.size()
                                 ? query_per_entity[i]
                                 : g.entity.name);
    g.overlap =
        q.empty() ? 0.0 : overlap_coefficient(q, text::token_set(g.passage));
    if (g.overlap >= gate.threshold) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace ops
}  // namespace artree
