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
// Embedded symbolic knowledge graph: entities with labels/aliases/concepts,
// typed attributes, and relation triples. Implements entity disambiguation
// (search), one-hop inference (relate: relation -> attribute -> reverse
// relation resolution order), and predicate filtering.
//
// Dump format is JSON Lines. Entity records:
//   {"id","label","aliases":[...],"concepts":[...],
//    "attributes":[{"key","type","value","unit"?}]}
// Triple records: {"h","r","t"}.
//===----------------------------------------------------------------------===//

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/plan.hpp"
#include "artree/text.hpp"

namespace artree {
namespace kg {

//===----------------------------------------------------------------------===//
// Store
//===----------------------------------------------------------------------===//

struct AttrValue {
  enum class Type { string_, number, year, date };
  Type type = Type::string_;
  std::string display;  // original textual rendering
  double num = 0.0;     // number
  std::string unit;     // number
  int year = 0;         // year
  std::string iso;      // date, "YYYY-MM-DD" (or a prefix of it)
};

struct Attribute {
  std::string key;  // non-empty
  AttrValue value;
};

struct Entity {
  std::string id;  // unique
  std::string label;
  std::vector<std::string> aliases;
  std::vector<std::string> concepts;
  std::vector<Attribute> attributes;
};

struct Triple {
  std::string h;
  std::string r;
  std::string t;
};

class KgStore {
 public:
  // Duplicated ids are a load-time error because lookups assume uniqueness.
  void add_entity(Entity e) {
    if (by_id_.count(e.id)) {
      fail(Errc::format, "duplicate entity id '" + e.id + "'");
    }
    std::size_t pos = entities_.size();
    by_id_[e.id] = pos;
    by_name_.emplace(text::normalize_name(e.label), pos);
    for (const auto& a : e.aliases) {
      by_name_.emplace(text::normalize_name(a), pos);
    }
    entities_.push_back(std::move(e));
  }

  void add_triple(Triple t) { triples_.push_back(std::move(t)); }

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Triple>& triples() const { return triples_; }

  const Entity* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entities_[it->second];
  }

  std::string label(const std::string& id) const {
    const Entity* e = find(id);
    return e ? e->label : id;
  }

  // All entities whose label or alias equals the normalized name, in
  // insertion order.
  std::vector<std::size_t> name_matches(const std::string& name) const {
    std::vector<std::size_t> out;
    auto [b, e] = by_name_.equal_range(text::normalize_name(name));
    for (auto it = b; it != e; ++it) out.push_back(it->second);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t attribute_count() const {
    std::size_t n = 0;
    for (const auto& e : entities_) n += e.attributes.size();
    return n;
  }

 private:
  std::vector<Entity> entities_;
  std::vector<Triple> triples_;
  std::map<std::string, std::size_t> by_id_;
  std::multimap<std::string, std::size_t> by_name_;
};

//===----------------------------------------------------------------------===//
// Loading
//===----------------------------------------------------------------------===//

namespace detail {

inline std::string json_display(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline AttrValue parse_attr_value(const nlohmann::json& rec, int line) {
  AttrValue out;
  std::string type = rec.value("type", "string");
  const auto& v = rec.at("value");
  out.display = json_display(v);
  if (type == "string") {
    out.type = AttrValue::Type::string_;
  } else if (type == "number") {
    out.type = AttrValue::Type::number;
    if (v.is_number()) {
      out.num = v.get<double>();
    } else if (v.is_string()) {
      char* end = nullptr;
      out.num = std::strtod(v.get<std::string>().c_str(), &end);
    } else {
      fail(Errc::format,
           "line " + std::to_string(line) + ": numeric attribute value");
    }
    out.unit = rec.value("unit", "");
    if (!out.unit.empty()) out.display += " " + out.unit;
  } else if (type == "year") {
    out.type = AttrValue::Type::year;
    out.year = v.is_number_integer() ? v.get<int>()
                                     : std::atoi(out.display.c_str());
  } else if (type == "date") {
    out.type = AttrValue::Type::date;
    if (!v.is_string()) {
      fail(Errc::format,
           "line " + std::to_string(line) + ": date value must be a string");
    }
    out.iso = v.get<std::string>();
  } else {
    fail(Errc::format, "line " + std::to_string(line) +
                           ": unknown attribute type '" + type + "'");
  }
  return out;
}

}  // namespace detail

// Streams a JSON Lines dump. Triple endpoints are validated after the full
// file is read so forward references are legal; the offending line number is
// reported on dangling endpoints.
inline KgStore load_kg_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::format, "cannot open kg dump '" + path + "'");
  KgStore store;
  std::vector<std::pair<int, Triple>> pending;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format,
           "line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (rec.contains("h")) {
        Triple t{rec.at("h").get<std::string>(),
                 rec.at("r").get<std::string>(),
                 rec.at("t").get<std::string>()};
        pending.emplace_back(lineno, std::move(t));
        continue;
      }
      Entity e;
      e.id = rec.at("id").get<std::string>();
      e.label = rec.at("label").get<std::string>();
      if (rec.contains("aliases")) {
        e.aliases = rec["aliases"].get<std::vector<std::string>>();
      }
      if (rec.contains("concepts")) {
        e.concepts = rec["concepts"].get<std::vector<std::string>>();
      }
      if (rec.contains("attributes")) {
        for (const auto& ja : rec["attributes"]) {
          Attribute attr;
          attr.key = ja.at("key").get<std::string>();
          if (attr.key.empty()) {
            fail(Errc::format,
                 "line " + std::to_string(lineno) + ": empty attribute key");
          }
          attr.value = detail::parse_attr_value(ja, lineno);
          e.attributes.push_back(std::move(attr));
        }
      }
      store.add_entity(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format,
           "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (auto& [ln, t] : pending) {
    if (!store.find(t.h) || !store.find(t.t)) {
      fail(Errc::format, "line " + std::to_string(ln) +
                             ": triple endpoint missing ('" + t.h + "' -> '" +
                             t.t + "')");
    }
    store.add_triple(std::move(t));
  }
  return store;
}

//===----------------------------------------------------------------------===//
// Search (entity disambiguation)
//===----------------------------------------------------------------------===//

namespace detail {

inline std::set<std::string> entity_profile_tokens(const Entity& e) {
  std::set<std::string> out;
  auto absorb = [&out](const std::string& s) {
    for (auto& t : text::tokenize(s)) out.insert(std::move(t));
  };
  for (const auto& c : e.concepts) absorb(c);
  for (const auto& a : e.attributes) absorb(a.value.display);
  return out;
}

}  // namespace detail

// Exact (normalized) label/alias match; with a descriptor, only candidates
// with the maximal descriptor-token overlap against their concepts and
// attribute values survive. Zero overlap everywhere keeps all candidates:
// an uninformative descriptor must not erase a correct name match.
inline std::vector<std::string> kg_search(
    const KgStore& store, const std::string& name,
    const std::optional<std::string>& descriptor = std::nullopt) {
  std::vector<std::size_t> cand = store.name_matches(name);
  if (cand.empty()) return {};
  if (descriptor && !text::trim(*descriptor).empty()) {
    std::set<std::string> want = text::token_set(*descriptor);
    std::vector<std::size_t> scores(cand.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      auto have = detail::entity_profile_tokens(store.entities()[cand[i]]);
      for (const auto& t : want) scores[i] += have.count(t);
      best = std::max(best, scores[i]);
    }
    if (best > 0) {
      std::vector<std::size_t> kept;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (scores[i] == best) kept.push_back(cand[i]);
      }
      cand = std::move(kept);
    }
  }
  std::vector<std::string> ids;
  ids.reserve(cand.size());
  for (std::size_t pos : cand) ids.push_back(store.entities()[pos].id);
  return ids;
}

//===----------------------------------------------------------------------===//
// Relate (one-hop inference)
//===----------------------------------------------------------------------===//

struct KgAnswer {
  enum class Kind { entities, attribute, relation, none };
  Kind kind = Kind::none;
  Answer value = std::vector<std::string>{};
};

// Resolution order: relation label on outgoing triples, then attribute key,
// then connecting entity (outgoing scanned before incoming; incoming
// relations are annotated). At most one branch answers.
inline KgAnswer kg_relate(const KgStore& store, const std::string& entity_id,
                          const std::string& second) {
  const Entity* e = store.find(entity_id);
  if (!e) fail(Errc::unknown_entity, "no entity '" + entity_id + "'");
  const std::string want = text::normalize_name(second);

  std::vector<std::string> tails;
  for (const auto& t : store.triples()) {
    if (t.h == entity_id && text::normalize_name(t.r) == want) {
      tails.push_back(store.label(t.t));
    }
  }
  if (!tails.empty()) {
    return KgAnswer{KgAnswer::Kind::entities, std::move(tails)};
  }

  for (const auto& a : e->attributes) {
    if (text::normalize_name(a.key) == want) {
      return KgAnswer{KgAnswer::Kind::attribute, a.value.display};
    }
  }

  std::set<std::string> other_ids;
  for (std::size_t pos : store.name_matches(second)) {
    other_ids.insert(store.entities()[pos].id);
  }
  if (const Entity* by_id = store.find(second)) other_ids.insert(by_id->id);
  if (!other_ids.empty()) {
    for (const auto& t : store.triples()) {
      if (t.h == entity_id && other_ids.count(t.t)) {
        return KgAnswer{KgAnswer::Kind::relation, t.r};
      }
    }
    for (const auto& t : store.triples()) {
      if (t.t == entity_id && other_ids.count(t.h)) {
        return KgAnswer{KgAnswer::Kind::relation, t.r + " (incoming)"};
      }
    }
  }
  return KgAnswer{};
}

//===----------------------------------------------------------------------===//
// Filter (predicate evaluation)
//===----------------------------------------------------------------------===//

struct Predicate {
  std::string key;
  enum class Op { eq, lt, gt, within } op = Op::eq;
  std::string value;
};

// Grammar: <attribute key> (= | < | > | within) <value>. The operator is the
// first whole token matching one of the four; key and value are the joined
// tokens on either side.
inline Predicate parse_predicate(const std::string& condition) {
  auto toks = text::split_ws(condition);
  std::size_t op_at = toks.size();
  Predicate p;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] == "=") {
      p.op = Predicate::Op::eq;
    } else if (toks[i] == "<") {
      p.op = Predicate::Op::lt;
    } else if (toks[i] == ">") {
      p.op = Predicate::Op::gt;
    } else if (toks[i] == "within") {
      p.op = Predicate::Op::within;
    } else {
      continue;
    }
    op_at = i;
    break;
  }
  if (op_at == toks.size()) {
    fail(Errc::predicate_parse,
         "no operator (= < > within) in '" + condition + "'");
  }
  p.key = text::join({toks.begin(), toks.begin() + op_at}, " ");
  p.value = text::join({toks.begin() + op_at + 1, toks.end()}, " ");
  if (p.key.empty() || p.value.empty()) {
    fail(Errc::predicate_parse,
         "predicate needs '<key> <op> <value>', got '" + condition + "'");
  }
  return p;
}

namespace detail {

struct NumberLit {
  double num = 0.0;
  std::string unit;
  bool ok = false;
};

inline NumberLit parse_number(const std::string& s) {
  NumberLit out;
  const char* begin = s.c_str();
  char* end = nullptr;
  out.num = std::strtod(begin, &end);
  if (end == begin) return out;
  out.ok = true;
  out.unit = text::trim(std::string(end));
  return out;
}

inline bool units_match(const std::string& attr_unit,
                        const std::string& pred_unit) {
  // A predicate without a unit matches any attribute unit.
  return pred_unit.empty() ||
         text::normalize_name(attr_unit) == text::normalize_name(pred_unit);
}

inline bool eval_predicate(const AttrValue& v, const Predicate& p) {
  using Op = Predicate::Op;
  switch (v.type) {
    case AttrValue::Type::string_: {
      std::string a = text::normalize_name(v.display);
      std::string b = text::normalize_name(p.value);
      switch (p.op) {
        case Op::eq: return a == b;
        case Op::lt: return a < b;
        case Op::gt: return a > b;
        case Op::within: return a.find(b) != std::string::npos;
      }
      return false;
    }
    case AttrValue::Type::number: {
      NumberLit lit = parse_number(p.value);
      if (!lit.ok || !units_match(v.unit, lit.unit)) return false;
      switch (p.op) {
        case Op::eq: return v.num == lit.num;
        case Op::lt: return v.num < lit.num;
        case Op::gt: return v.num > lit.num;
        case Op::within: return v.num == lit.num;
      }
      return false;
    }
    case AttrValue::Type::year: {
      NumberLit lit = parse_number(p.value);
      if (!lit.ok) return false;
      int y = static_cast<int>(lit.num);
      switch (p.op) {
        case Op::eq:
        case Op::within: return v.year == y;
        case Op::lt: return v.year < y;
        case Op::gt: return v.year > y;
      }
      return false;
    }
    case AttrValue::Type::date: {
      std::string b = text::trim(p.value);
      switch (p.op) {
        case Op::eq: return v.iso == b;
        case Op::lt: return v.iso < b;   // ISO dates order lexicographically
        case Op::gt: return v.iso.substr(0, b.size()) > b;
        case Op::within:
          return v.iso == b ||
                 (v.iso.size() > b.size() &&
                  v.iso.compare(0, b.size(), b) == 0 && v.iso[b.size()] == '-');
      }
      return false;
    }
  }
  return false;
}

}  // namespace detail

// Keeps the input order; ids that do not resolve or lack the attribute fail
// the predicate. The reserved key "concept" tests concept membership.
inline std::vector<std::string> kg_filter(const KgStore& store,
                                          const std::vector<std::string>& ids,
                                          const Predicate& p) {
  std::vector<std::string> out;
  const std::string want_key = text::normalize_name(p.key);
  for (const auto& id : ids) {
    const Entity* e = store.find(id);
    if (!e) continue;
    bool pass = false;
    if (want_key == "concept") {
      for (const auto& c : e->concepts) {
        if (text::normalize_name(c) == text::normalize_name(p.value)) {
          pass = true;
          break;
        }
      }
    } else {
      for (const auto& a : e->attributes) {
        if (text::normalize_name(a.key) == want_key &&
            detail::eval_predicate(a.value, p)) {
          pass = true;
          break;
        }
      }
    }
    if (pass) out.push_back(id);
  }
  return out;
}

inline std::vector<std::string> kg_filter(const KgStore& store,
                                          const std::vector<std::string>& ids,
                                          const std::string& condition) {
  return kg_filter(store, ids, parse_predicate(condition));
}

//===----------------------------------------------------------------------===//
// Serialization helpers
//===----------------------------------------------------------------------===//

inline std::string serialize_labels(const KgStore& store,
                                    const std::vector<std::string>& ids) {
  std::vector<std::string> labels;
  labels.reserve(ids.size());
  for (const auto& id : ids) labels.push_back(store.label(id));
  return text::join(labels, "; ");
}

inline std::string serialize_kg_answer(const KgAnswer& a) {
  if (a.kind == KgAnswer::Kind::none) return "";
  if (answer_is_list(a.value)) {
    return text::join(answer_to_list(a.value), "; ");
  }
  return answer_to_text(a.value);
}

// One-hop textual profile of an entity: the kg-side pseudo-passage used for
// retrieval and Filter evidence.
inline std::string entity_profile(const KgStore& store,
                                  const std::string& id) {
  const Entity* e = store.find(id);
  if (!e) return "";
  std::vector<std::string> lines;
  lines.push_back(e->label);
  if (!e->aliases.empty()) {
    lines.push_back("also known as: " + text::join(e->aliases, ", "));
  }
  if (!e->concepts.empty()) {
    lines.push_back("concepts: " + text::join(e->concepts, ", "));
  }
  for (const auto& a : e->attributes) {
    lines.push_back(a.key + ": " + a.value.display);
  }
  for (const auto& t : store.triples()) {
    if (t.h == id) {
      lines.push_back(t.r + ": " + store.label(t.t));
    } else if (t.t == id) {
      lines.push_back(t.r + " (incoming): " + store.label(t.h));
    }
  }
  return text::join(lines, "\n");
}

//===----------------------------------------------------------------------===//
// One-step program execution (the LLM-emitted KG query path)
//===----------------------------------------------------------------------===//

namespace detail {

inline std::string entity_to_id(const KgStore& store, const plan::Arg& a) {
  if (a.kind != plan::Arg::Kind::literal) {
    fail(Errc::program_parse, "program arguments must be identifiers/strings");
  }
  if (store.find(a.value)) return a.value;  // already an id
  auto ids = kg_search(store, a.value);
  return ids.empty() ? "" : ids.front();
}

inline std::string arg_literal(const plan::Arg& a) {
  if (a.kind != plan::Arg::Kind::literal) {
    fail(Errc::program_parse, "program arguments must be identifiers/strings");
  }
  return a.value;
}

}  // namespace detail

// Program grammar (bare identifiers allowed):
//   search("name"[, "descriptor"]) | relate(ENTITY, "second")
//   | filter([ENTITY, ...], "<key> <op> <value>")
// where ENTITY is an id or a name. Returns a "; "-serialized answer.
inline std::string execute_program(const KgStore& store,
                                   const std::string& program) {
  plan::detail::Call call;
  try {
    call = plan::detail::parse_call(text::trim(program), /*allow_bare=*/true);
  } catch (const Error& e) {
    fail(Errc::program_parse, e.what());
  }
  std::string name = text::to_lower(call.name);
  if (name == "search") {
    if (call.args.empty() || call.args.size() > 2) {
      fail(Errc::program_parse, "search takes 1 or 2 args");
    }
    std::optional<std::string> desc;
    if (call.args.size() == 2) desc = detail::arg_literal(call.args[1]);
    return serialize_labels(
        store, kg_search(store, detail::arg_literal(call.args[0]), desc));
  }
  if (name == "relate") {
    if (call.args.size() != 2) {
      fail(Errc::program_parse, "relate takes 2 args");
    }
    std::string id = detail::entity_to_id(store, call.args[0]);
    if (id.empty()) return "";
    return serialize_kg_answer(
        kg_relate(store, id, detail::arg_literal(call.args[1])));
  }
  if (name == "filter") {
    if (call.args.size() != 2 ||
        call.args[0].kind != plan::Arg::Kind::list) {
      fail(Errc::program_parse, "filter takes ([entities], \"predicate\")");
    }
    std::vector<std::string> ids;
    for (const auto& item : call.args[0].items) {
      std::string id = detail::entity_to_id(store, item);
      if (!id.empty()) ids.push_back(id);
    }
    Predicate p;
    try {
      p = parse_predicate(detail::arg_literal(call.args[1]));
    } catch (const Error& e) {
      fail(Errc::program_parse, e.what());
    }
    return serialize_labels(store, kg_filter(store, ids, p));
  }
  fail(Errc::program_parse, "unknown program function '" + call.name + "'");
}

}  // namespace kg
}  // namespace artree
