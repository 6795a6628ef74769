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
// Atomic Reasoning Tree data model: BFS-indexed sub-question nodes, operator
// leaves, direct-reasoning nodes, plus parsing/serialization of the plan
// document exchanged with the planner LLM.
//
// Plan wire format (UTF-8 JSON, nodes sorted by idx):
//   {"question": str,
//    "nodes": [{"idx": int, "q": str, "children": [int],
//               "op": str|null, "dr": bool}]}
//===----------------------------------------------------------------------===//

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/text.hpp"

namespace artree {

// A node answer is either a scalar string or a list of strings. Parent
// reasoning and substitution rules depend on which it is.
using Answer = std::variant<std::string, std::vector<std::string>>;
using AnswerMap = std::map<int, Answer>;

inline bool answer_is_list(const Answer& a) {
  return std::holds_alternative<std::vector<std::string>>(a);
}

// List answers render as comma-joined text in scalar positions.
inline std::string answer_to_text(const Answer& a) {
  if (auto* s = std::get_if<std::string>(&a)) return *s;
  return text::join(std::get<std::vector<std::string>>(a), ", ");
}

inline std::vector<std::string> answer_to_list(const Answer& a) {
  if (auto* v = std::get_if<std::vector<std::string>>(&a)) return *v;
  return {std::get<std::string>(a)};
}

namespace plan {

//===----------------------------------------------------------------------===//
// Operator expressions
//===----------------------------------------------------------------------===//

enum class OpName { search, relate, filter };

inline const char* op_name(OpName op) {
  switch (op) {
    case OpName::search: return "Search";
    case OpName::relate: return "Relate";
    case OpName::filter: return "Filter";
  }
  return "?";
}

// One operator argument: a quoted literal, a node-answer placeholder [i],
// or a bracketed list of arguments.
struct Arg {
  enum class Kind { literal, placeholder, list };
  Kind kind = Kind::literal;
  std::string value;       // literal text
  int ref = -1;            // placeholder target index
  std::vector<Arg> items;  // list elements

  static Arg lit(std::string v) {
    Arg a;
    a.kind = Kind::literal;
    a.value = std::move(v);
    return a;
  }
  static Arg ph(int i) {
    Arg a;
    a.kind = Kind::placeholder;
    a.ref = i;
    return a;
  }
  static Arg lst(std::vector<Arg> xs) {
    Arg a;
    a.kind = Kind::list;
    a.items = std::move(xs);
    return a;
  }

  friend bool operator==(const Arg& x, const Arg& y) {
    return x.kind == y.kind && x.value == y.value && x.ref == y.ref &&
           x.items == y.items;
  }
};

struct OperatorSpec {
  OpName op = OpName::search;
  std::vector<Arg> args;

  friend bool operator==(const OperatorSpec& a, const OperatorSpec& b) {
    return a.op == b.op && a.args == b.args;
  }
};

namespace detail {

// Quoting for literal arguments: backslash escapes for '\' and '"' only;
// everything else passes through verbatim.
inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '\\' || c == '"') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct Cursor {
  const std::string& s;
  std::size_t i = 0;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  void skip_ws() {
    while (!done() && text::is_space(s[i])) ++i;
  }
};

inline std::string parse_quoted(Cursor& c) {
  // caller guarantees c.peek() == '"'
  ++c.i;
  std::string out;
  while (!c.done()) {
    char ch = c.s[c.i++];
    if (ch == '\\') {
      if (c.done()) fail(Errc::syntax, "dangling escape in string literal");
      out.push_back(c.s[c.i++]);
      continue;
    }
    if (ch == '"') return out;
    out.push_back(ch);
  }
  fail(Errc::syntax, "unterminated string literal");
}

inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
}

Arg parse_arg(Cursor& c, bool allow_bare);

// '[' already consumed callers: no. Parses a bracket form, deciding between
// placeholder "[3]" and list "[...]" by lookahead: digits-only content is a
// placeholder.
inline Arg parse_bracket(Cursor& c, bool allow_bare) {
  ++c.i;  // '['
  c.skip_ws();
  // placeholder lookahead
  std::size_t j = c.i;
  while (j < c.s.size() && c.s[j] >= '0' && c.s[j] <= '9') ++j;
  if (j > c.i) {
    std::size_t k = j;
    while (k < c.s.size() && text::is_space(c.s[k])) ++k;
    if (k < c.s.size() && c.s[k] == ']') {
      int ref = std::stoi(c.s.substr(c.i, j - c.i));
      c.i = k + 1;
      return Arg::ph(ref);
    }
  }
  std::vector<Arg> items;
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.i;
    return Arg::lst(std::move(items));
  }
  for (;;) {
    items.push_back(parse_arg(c, allow_bare));
    c.skip_ws();
    if (c.done()) fail(Errc::syntax, "unterminated list");
    if (c.peek() == ',') {
      ++c.i;
      continue;
    }
    if (c.peek() == ']') {
      ++c.i;
      return Arg::lst(std::move(items));
    }
    fail(Errc::syntax, "expected ',' or ']' in list");
  }
}

inline Arg parse_arg(Cursor& c, bool allow_bare) {
  c.skip_ws();
  if (c.done()) fail(Errc::syntax, "expected argument");
  char ch = c.peek();
  if (ch == '"') return Arg::lit(parse_quoted(c));
  if (ch == '[') return parse_bracket(c, allow_bare);
  if (allow_bare && is_ident_char(ch)) {
    std::size_t b = c.i;
    while (!c.done() && is_ident_char(c.peek())) ++c.i;
    return Arg::lit(c.s.substr(b, c.i - b));
  }
  fail(Errc::syntax, std::string("unexpected character '") + ch +
                         "' in argument position");
}

struct Call {
  std::string name;
  std::vector<Arg> args;
};

// Shared call-expression parser. Strict mode (allow_bare = false) is the
// planner-facing operator grammar; bare identifiers are admitted only for
// the one-step KG program grammar.
inline Call parse_call(const std::string& expr, bool allow_bare) {
  Cursor c{expr};
  c.skip_ws();
  std::size_t b = c.i;
  while (!c.done() &&
         ((c.peek() >= 'a' && c.peek() <= 'z') ||
          (c.peek() >= 'A' && c.peek() <= 'Z') || c.peek() == '_')) {
    ++c.i;
  }
  if (c.i == b) fail(Errc::syntax, "expected operator name");
  Call call;
  call.name = expr.substr(b, c.i - b);
  c.skip_ws();
  if (c.done() || c.peek() != '(') fail(Errc::syntax, "expected '('");
  ++c.i;
  c.skip_ws();
  if (!c.done() && c.peek() == ')') {
    ++c.i;
  } else {
    for (;;) {
      call.args.push_back(parse_arg(c, allow_bare));
      c.skip_ws();
      if (c.done()) fail(Errc::syntax, "unterminated call");
      if (c.peek() == ',') {
        ++c.i;
        continue;
      }
      if (c.peek() == ')') {
        ++c.i;
        break;
      }
      fail(Errc::syntax, "expected ',' or ')'");
    }
  }
  c.skip_ws();
  if (!c.done()) fail(Errc::syntax, "trailing characters after call");
  return call;
}

}  // namespace detail

inline std::string to_string(const Arg& a) {
  switch (a.kind) {
    case Arg::Kind::literal: return detail::quote(a.value);
    case Arg::Kind::placeholder: return "[" + std::to_string(a.ref) + "]";
    case Arg::Kind::list: {
      std::vector<std::string> parts;
      parts.reserve(a.items.size());
      for (const auto& it : a.items) parts.push_back(to_string(it));
      return "[" + text::join(parts, ", ") + "]";
    }
  }
  return "";
}

inline std::string to_string(const OperatorSpec& spec) {
  std::vector<std::string> parts;
  parts.reserve(spec.args.size());
  for (const auto& a : spec.args) parts.push_back(to_string(a));
  return std::string(op_name(spec.op)) + "(" + text::join(parts, ", ") + ")";
}

// Parses a single operator call expression. Name match is case-sensitive.
inline OperatorSpec parse_operator(const std::string& expr) {
  detail::Call call = detail::parse_call(expr, /*allow_bare=*/false);
  OperatorSpec spec;
  if (call.name == "Search") {
    spec.op = OpName::search;
    if (call.args.size() != 1 && call.args.size() != 2) {
      fail(Errc::arity, "Search takes 1 or 2 args, got " +
                            std::to_string(call.args.size()));
    }
  } else if (call.name == "Relate") {
    spec.op = OpName::relate;
    if (call.args.size() != 2) {
      fail(Errc::arity,
           "Relate takes 2 args, got " + std::to_string(call.args.size()));
    }
  } else if (call.name == "Filter") {
    spec.op = OpName::filter;
    if (call.args.size() != 2) {
      fail(Errc::arity,
           "Filter takes 2 args, got " + std::to_string(call.args.size()));
    }
  } else {
    fail(Errc::unknown_operator, "unknown operator '" + call.name + "'");
  }
  spec.args = std::move(call.args);
  return spec;
}

//===----------------------------------------------------------------------===//
// Tree model
//===----------------------------------------------------------------------===//

enum class NodeKind { root, composite, atomic, direct_reasoning };

inline const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::root: return "root";
    case NodeKind::composite: return "composite";
    case NodeKind::atomic: return "atomic";
    case NodeKind::direct_reasoning: return "direct_reasoning";
  }
  return "?";
}

struct ArtNode {
  int index = 0;
  std::string question;
  NodeKind kind = NodeKind::composite;
  std::optional<OperatorSpec> op;  // present iff kind == atomic
  std::vector<int> children;
  std::optional<int> parent;
};

struct Art {
  std::string source_question;
  std::vector<ArtNode> nodes;  // position == BFS index

  const ArtNode& at(int i) const {
    return nodes[static_cast<std::size_t>(i)];
  }
  ArtNode& at(int i) { return nodes[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes.size()); }
};

// Extracts every "[i]" reference from a question text, in occurrence order.
inline std::vector<int> find_placeholders(const std::string& s) {
  std::vector<int> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '[') continue;
    std::size_t j = i + 1;
    while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
    if (j > i + 1 && j < s.size() && s[j] == ']') {
      out.push_back(std::stoi(s.substr(i + 1, j - i - 1)));
      i = j;
    }
  }
  return out;
}

inline void collect_arg_placeholders(const Arg& a, std::vector<int>& out) {
  switch (a.kind) {
    case Arg::Kind::placeholder: out.push_back(a.ref); break;
    case Arg::Kind::list:
      for (const auto& it : a.items) collect_arg_placeholders(it, out);
      break;
    case Arg::Kind::literal: break;
  }
}

// All placeholders a node depends on: question text plus operator args.
inline std::vector<int> node_placeholders(const ArtNode& n) {
  std::vector<int> out = find_placeholders(n.question);
  if (n.op) {
    for (const auto& a : n.op->args) collect_arg_placeholders(a, out);
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Traversal
//===----------------------------------------------------------------------===//

namespace detail {
inline void post_order_rec(const Art& art, int idx, std::vector<int>& out) {
  for (int c : art.at(idx).children) post_order_rec(art, c, out);
  out.push_back(idx);
}
}  // namespace detail

// Children before parents, siblings in listed order.
inline std::vector<int> post_order(const Art& art) {
  std::vector<int> out;
  out.reserve(art.nodes.size());
  if (!art.nodes.empty()) detail::post_order_rec(art, 0, out);
  return out;
}

//===----------------------------------------------------------------------===//
// Validation
//===----------------------------------------------------------------------===//

struct Violation {
  int node = -1;
  std::string rule;    // stable machine-readable id
  std::string detail;  // human-readable message

  std::string to_string() const {
    return "node " + std::to_string(node) + ": " + detail;
  }
};

// Checks every typed invariant; returns one violation per broken rule.
// Never throws: diagnostic surface for exec-plan and mutation tests.
inline std::vector<Violation> validate_art(const Art& art) {
  std::vector<Violation> out;
  auto add = [&out](int node, std::string rule, std::string detail) {
    out.push_back(Violation{node, std::move(rule), std::move(detail)});
  };
  const int n = art.size();
  if (n == 0) {
    add(-1, "empty_tree", "tree has no nodes");
    return out;
  }

  bool indices_ok = true;
  for (int i = 0; i < n; ++i) {
    if (art.at(i).index != i) {
      add(i, "node_index_mismatch",
          "node at position " + std::to_string(i) + " carries index " +
              std::to_string(art.at(i).index));
      indices_ok = false;
    }
  }

  if (art.at(0).question != art.source_question) {
    add(0, "root_question_mismatch",
        "root question differs from source question");
  }
  if (art.at(0).kind != NodeKind::root) {
    add(0, "root_kind", "node 0 must have kind root");
  }

  bool structure_ok = indices_ok;
  std::vector<int> claimed_by(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const ArtNode& node = art.at(i);
    for (int c : node.children) {
      if (c < 0 || c >= n) {
        add(i, "child_out_of_range",
            "child index " + std::to_string(c) + " out of range");
        structure_ok = false;
        continue;
      }
      if (c <= i) {
        add(i, "bfs_parent_before_child",
            "child " + std::to_string(c) + " does not follow parent " +
                std::to_string(i));
        structure_ok = false;
      }
      if (claimed_by[static_cast<std::size_t>(c)] != -1) {
        add(c, "multiple_parents", "node claimed by more than one parent");
        structure_ok = false;
      } else {
        claimed_by[static_cast<std::size_t>(c)] = i;
      }
      const auto& declared = art.at(c).parent;
      if (!declared || *declared != i) {
        add(c, "parent_child_inconsistent",
            "parent link does not match children list of node " +
                std::to_string(i));
      }
    }
    for (std::size_t s = 1; s < node.children.size(); ++s) {
      if (node.children[s - 1] >= node.children[s]) {
        add(i, "sibling_order",
            "children of node " + std::to_string(i) +
                " are not in ascending index order");
        structure_ok = false;
      }
    }
  }
  if (art.at(0).parent) add(0, "root_has_parent", "root must have no parent");

  // BFS reconstruction: walking the children lists level by level must visit
  // exactly 0, 1, ..., n-1. This subsumes connectivity and acyclicity.
  if (structure_ok) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    order.push_back(0);
    for (std::size_t head = 0; head < order.size(); ++head) {
      for (int c : art.at(order[head]).children) order.push_back(c);
    }
    bool bfs_ok = order.size() == static_cast<std::size_t>(n);
    for (std::size_t i = 0; bfs_ok && i < order.size(); ++i) {
      bfs_ok = order[i] == static_cast<int>(i);
    }
    if (!bfs_ok) {
      add(0, "bfs_order",
          "indices are not a breadth-first numbering of the tree");
    }
  }

  for (int i = 0; i < n; ++i) {
    const ArtNode& node = art.at(i);
    switch (node.kind) {
      case NodeKind::atomic:
        if (!node.children.empty()) {
          add(i, "atomic_must_be_leaf", "atomic node must be leaf");
        }
        if (!node.op) {
          add(i, "atomic_missing_operator",
              "atomic node carries no operator");
        }
        break;
      case NodeKind::direct_reasoning:
        if (!node.children.empty()) {
          add(i, "dr_must_be_leaf", "direct-reasoning node must be leaf");
        }
        if (node.op) {
          add(i, "operator_on_non_atomic",
              "direct-reasoning node cannot carry an operator");
        }
        break;
      case NodeKind::root:
      case NodeKind::composite:
        if (node.children.empty()) {
          add(i, "composite_needs_children",
              std::string(kind_name(node.kind)) +
                  " node must have children");
        }
        if (node.op) {
          add(i, "operator_on_non_atomic",
              "only atomic nodes may carry an operator");
        }
        break;
    }
    if (i != 0 && node.kind == NodeKind::root) {
      add(i, "root_not_first", "only node 0 may be the root");
    }
  }

  // Placeholder rules need a completion order; only computable on sound
  // structure.
  if (structure_ok) {
    std::vector<int> order = post_order(art);
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    bool covers_all = order.size() == static_cast<std::size_t>(n);
    for (std::size_t p = 0; covers_all && p < order.size(); ++p) {
      pos[static_cast<std::size_t>(order[p])] = static_cast<int>(p);
    }
    if (covers_all) {
      for (int i = 0; i < n; ++i) {
        const ArtNode& node = art.at(i);
        for (int ref : node_placeholders(node)) {
          if (ref < 0 || ref >= n) {
            add(i, "placeholder_dangling",
                "placeholder [" + std::to_string(ref) +
                    "] references a missing node");
            continue;
          }
          if (pos[static_cast<std::size_t>(ref)] >=
              pos[static_cast<std::size_t>(i)]) {
            add(i, "placeholder_forward",
                "placeholder [" + std::to_string(ref) +
                    "] is not completed before node " + std::to_string(i));
          }
          if (node.kind == NodeKind::direct_reasoning) {
            bool earlier_sibling = node.parent && art.at(ref).parent &&
                                   *art.at(ref).parent == *node.parent &&
                                   ref < i;
            if (!earlier_sibling) {
              add(i, "dr_reference_not_sibling",
                  "direct-reasoning placeholder [" + std::to_string(ref) +
                      "] must reference an earlier sibling");
            }
          }
        }
      }
    }
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Plan document parsing / serialization
//===----------------------------------------------------------------------===//

namespace detail {

// Tolerates markdown code fences and leading/trailing prose around the JSON
// object; planner LLMs routinely wrap output.
inline std::string extract_json_object(const std::string& s) {
  std::size_t b = s.find('{');
  std::size_t e = s.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e < b) {
    fail(Errc::schema, "no JSON object found in plan text");
  }
  return s.substr(b, e - b + 1);
}

inline void classify_violations(const std::vector<Violation>& vs) {
  if (vs.empty()) return;
  auto has = [&vs](const char* rule) {
    for (const auto& v : vs) {
      if (v.rule == rule) return true;
    }
    return false;
  };
  std::string all;
  for (const auto& v : vs) {
    if (!all.empty()) all += "; ";
    all += v.to_string();
  }
  if (has("node_index_mismatch") || has("child_out_of_range") ||
      has("bfs_parent_before_child") || has("multiple_parents") ||
      has("sibling_order") || has("bfs_order") ||
      has("parent_child_inconsistent")) {
    fail(Errc::index, all);
  }
  if (has("placeholder_dangling") || has("placeholder_forward") ||
      has("dr_reference_not_sibling")) {
    fail(Errc::placeholder, all);
  }
  fail(Errc::schema, all);
}

}  // namespace detail

// Parses (and fully validates) a plan document. Kind assignment: node 0 is
// the root; dr:true marks direct reasoning; a non-null op marks atomic;
// everything else is composite.
inline Art parse_art(const std::string& plan_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::extract_json_object(plan_text));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema, std::string("plan is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("question") ||
      !doc["question"].is_string() || !doc.contains("nodes") ||
      !doc["nodes"].is_array()) {
    fail(Errc::schema, "plan must be {\"question\": str, \"nodes\": [...]}");
  }
  const auto& jnodes = doc["nodes"];
  if (jnodes.empty()) fail(Errc::schema, "plan has no nodes");

  Art art;
  art.source_question = doc["question"].get<std::string>();
  art.nodes.reserve(jnodes.size());

  int expected = 0;
  for (const auto& jn : jnodes) {
    if (!jn.is_object() || !jn.contains("idx") ||
        !jn["idx"].is_number_integer() || !jn.contains("q") ||
        !jn["q"].is_string() || !jn.contains("children") ||
        !jn["children"].is_array()) {
      fail(Errc::schema,
           "node records require integer idx, string q, array children");
    }
    ArtNode node;
    node.index = jn["idx"].get<int>();
    if (node.index != expected) {
      fail(Errc::index, "nodes must be sorted by idx with idx = 0..n-1; saw " +
                            std::to_string(node.index) + " at position " +
                            std::to_string(expected));
    }
    ++expected;
    node.question = jn["q"].get<std::string>();
    for (const auto& jc : jn["children"]) {
      if (!jc.is_number_integer()) {
        fail(Errc::schema, "children must be integers");
      }
      node.children.push_back(jc.get<int>());
    }
    bool dr = jn.contains("dr") && !jn["dr"].is_null() &&
              (jn["dr"].is_boolean() ? jn["dr"].get<bool>() : false);
    std::optional<std::string> op_text;
    if (jn.contains("op") && !jn["op"].is_null()) {
      if (!jn["op"].is_string()) fail(Errc::schema, "op must be string|null");
      op_text = jn["op"].get<std::string>();
    }
    if (dr && op_text) {
      fail(Errc::schema, "node " + std::to_string(node.index) +
                             ": dr node cannot carry an operator");
    }
    if (node.index == 0) {
      if (dr || op_text) {
        fail(Errc::schema, "root node cannot be dr or atomic");
      }
      node.kind = NodeKind::root;
    } else if (dr) {
      node.kind = NodeKind::direct_reasoning;
    } else if (op_text) {
      node.kind = NodeKind::atomic;
    } else {
      node.kind = NodeKind::composite;
    }
    if (op_text) {
      try {
        node.op = parse_operator(*op_text);
      } catch (const Error& e) {
        fail(Errc::operator_call, "node " + std::to_string(node.index) +
                                      ": " + e.what());
      }
    }
    art.nodes.push_back(std::move(node));
  }

  // Derive parent links from children lists.
  for (const auto& node : art.nodes) {
    for (int c : node.children) {
      if (c >= 0 && c < art.size()) art.at(c).parent = node.index;
    }
  }

  detail::classify_violations(validate_art(art));
  return art;
}

// Round-trip companion of parse_art: parse_art(serialize_art(a)) == a
// structurally, and serialize ∘ parse ∘ serialize is byte-stable.
inline std::string serialize_art(const Art& art) {
  nlohmann::json doc;
  doc["question"] = art.source_question;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& node : art.nodes) {
    nlohmann::json jn;
    jn["idx"] = node.index;
    jn["q"] = node.question;
    jn["children"] = node.children;
    jn["op"] = node.op ? nlohmann::json(to_string(*node.op))
                       : nlohmann::json(nullptr);
    jn["dr"] = node.kind == NodeKind::direct_reasoning;
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump(2);
}

//===----------------------------------------------------------------------===//
// Placeholder substitution
//===----------------------------------------------------------------------===//

// Text position: "[i]" becomes the answer text; list answers join with ", ".
inline std::string substitute_text(const std::string& tmpl,
                                   const AnswerMap& answers) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '[') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && tmpl[j] >= '0' && tmpl[j] <= '9') ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == ']') {
        int ref = std::stoi(tmpl.substr(i + 1, j - i - 1));
        auto it = answers.find(ref);
        if (it == answers.end()) {
          fail(Errc::missing_answer,
               "no answer recorded for placeholder [" + std::to_string(ref) +
                   "]");
        }
        out += answer_to_text(it->second);
        i = j;
        continue;
      }
    }
    out.push_back(tmpl[i]);
  }
  return out;
}

namespace detail {

inline Answer lookup(const AnswerMap& answers, int ref) {
  auto it = answers.find(ref);
  if (it == answers.end()) {
    fail(Errc::missing_answer,
         "no answer recorded for placeholder [" + std::to_string(ref) + "]");
  }
  return it->second;
}

// Text position resolution: placeholders flatten to comma-joined text,
// embedded "[i]" references inside literals are substituted too.
inline Arg resolve_text_arg(const Arg& a, const AnswerMap& answers) {
  switch (a.kind) {
    case Arg::Kind::literal:
      return Arg::lit(substitute_text(a.value, answers));
    case Arg::Kind::placeholder:
      return Arg::lit(answer_to_text(lookup(answers, a.ref)));
    case Arg::Kind::list: {
      std::vector<std::string> parts;
      for (const auto& it : a.items) {
        parts.push_back(resolve_text_arg(it, answers).value);
      }
      return Arg::lit(text::join(parts, ", "));
    }
  }
  return a;
}

// Entity-list position resolution (Filter arg 0): placeholders must resolve
// to lists and splice; scalars in that position are a type error.
inline Arg resolve_list_arg(const Arg& a, const AnswerMap& answers) {
  switch (a.kind) {
    case Arg::Kind::placeholder: {
      Answer ans = lookup(answers, a.ref);
      if (!answer_is_list(ans)) {
        fail(Errc::type_mismatch,
             "placeholder [" + std::to_string(a.ref) +
                 "] must resolve to an entity list");
      }
      std::vector<Arg> items;
      for (const auto& e : answer_to_list(ans)) items.push_back(Arg::lit(e));
      return Arg::lst(std::move(items));
    }
    case Arg::Kind::list: {
      std::vector<Arg> items;
      for (const auto& it : a.items) {
        Arg r = it.kind == Arg::Kind::placeholder
                    ? resolve_list_arg(it, answers)
                    : resolve_text_arg(it, answers);
        if (r.kind == Arg::Kind::list) {
          for (auto& e : r.items) items.push_back(std::move(e));
        } else {
          items.push_back(std::move(r));
        }
      }
      return Arg::lst(std::move(items));
    }
    case Arg::Kind::literal:
      fail(Errc::type_mismatch,
           "entity-list position requires a list, got scalar text");
  }
  return a;
}

}  // namespace detail

// Resolves every placeholder in an operator invocation. Search/Relate args
// and Filter's condition are text positions; Filter's first argument is an
// entity-list position.
inline OperatorSpec substitute_spec(const OperatorSpec& spec,
                                    const AnswerMap& answers) {
  OperatorSpec out;
  out.op = spec.op;
  out.args.reserve(spec.args.size());
  for (std::size_t i = 0; i < spec.args.size(); ++i) {
    bool list_position = spec.op == OpName::filter && i == 0;
    out.args.push_back(list_position
                           ? detail::resolve_list_arg(spec.args[i], answers)
                           : detail::resolve_text_arg(spec.args[i], answers));
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Depth statistics
//===----------------------------------------------------------------------===//

struct DepthStats {
  double mean = 0.0;
  double median = 0.0;
  int min = 0;
  int max = 0;
};

// Depth = edge count of the longest root-to-leaf path. Operator leaves sit
// at their node's level; they do not add one.
inline int depth(const Art& art) {
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (int c : art.at(idx).children) stack.push_back({c, d + 1});
  }
  return best;
}

inline DepthStats depth_stats(const std::vector<Art>& arts) {
  if (arts.empty()) fail(Errc::empty_input, "depth_stats over empty list");
  std::vector<int> ds;
  ds.reserve(arts.size());
  for (const auto& a : arts) ds.push_back(depth(a));
  std::sort(ds.begin(), ds.end());
  DepthStats st;
  st.min = ds.front();
  st.max = ds.back();
  double sum = 0.0;
  for (int d : ds) sum += d;
  st.mean = sum / static_cast<double>(ds.size());
  std::size_t m = ds.size() / 2;
  st.median = ds.size() % 2 == 1
                  ? static_cast<double>(ds[m])
                  : (static_cast<double>(ds[m - 1]) +
                     static_cast<double>(ds[m])) /
                        2.0;
  return st;
}

}  // namespace plan
}  // namespace artree
