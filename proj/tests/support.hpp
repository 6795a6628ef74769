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
// Shared test support: fixture paths, temp dirs, stub retrievers, scripted
// rule kits, and the randomized tree generator used by the property suites.
// Deliberately Catch2-free so the plain acceptance binary can reuse it.
//===----------------------------------------------------------------------===//

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "artree/knowledge.hpp"
#include "artree/llm.hpp"
#include "artree/plan.hpp"

#ifndef ARTREE_FIXTURE_DIR
#error "ARTREE_FIXTURE_DIR must be defined by the build"
#endif

namespace testsupport {

inline std::string fixture(const std::string& rel) {
  return (std::filesystem::path(ARTREE_FIXTURE_DIR) / rel).string();
}

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 100; ++i) {
      auto p = base / ("artree_test_" + std::to_string(rng()()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& rel) const {
    return (path_ / rel).string();
  }

 private:
  static std::mt19937_64& rng() {
    static std::mt19937_64 r{std::random_device{}()};
    return r;
  }
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path());
  std::ofstream o(path);
  o << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Returns the query itself as the single passage; the overlap gate then sees
// O = 1.0 for every entity, which keeps call-count properties deterministic.
class EchoRetriever : public artree::knowledge::TextRetriever {
 public:
  std::vector<artree::knowledge::Passage> retrieve(const std::string& query,
                                                   int k) override {
    ++calls;
    if (k <= 0) return {};
    artree::knowledge::Passage p;
    p.source = artree::knowledge::Source::text;
    p.title_or_uri = "echo";
    p.body = query;
    p.score = 1.0;
    p.rank = 1;
    return {p};
  }
  int calls = 0;
};

class FailingRetriever : public artree::knowledge::TextRetriever {
 public:
  std::vector<artree::knowledge::Passage> retrieve(const std::string&,
                                                   int) override {
    artree::fail(artree::Errc::retriever_unavailable, "stub retriever down");
  }
};

inline artree::llm::ScriptRule rule(const std::string& template_id,
                                    const std::string& contains,
                                    const std::string& response) {
  artree::llm::ScriptRule r;
  r.template_id = template_id;
  r.contains = contains;
  r.response = response;
  return r;
}

// Grammar-valid answers for every reasoning template except direct_rag:
// a direct_rag call under these rules raises ScriptGap, so the call-count
// properties fail loudly if any fallback fires.
inline std::vector<artree::llm::ScriptRule> catch_all_rules() {
  return {
      rule("executor_search", "", "ok\n[\"Alpha\"]"),
      rule("executor_relate", "", "ok\n[\"Alpha\"]"),
      rule("executor_filter", "", "ok\n[\"Alpha\", \"Beta\"]"),
      rule("child_answer", "", "ok\n\"Alpha\""),
      rule("sibling_answer", "", "ok\n\"Alpha\""),
  };
}

//===----------------------------------------------------------------------===//
// Random tree generation
//===----------------------------------------------------------------------===//

struct TreeGenOptions {
  int depth = 3;             // exact depth in edges, >= 1
  bool placeholders = false; // weave [i] references into questions and args
};

namespace detail {

inline int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace detail

// Builds a valid tree of the exact requested depth. Nodes are indexed in the
// construction (BFS) order; one spine path is forced to full depth, other
// branches choose their own kinds. DR nodes always reference a previous
// sibling. With `placeholders`, extra [i] references to nodes earlier in
// post order are woven into questions and operator arguments.
inline artree::plan::Art random_tree(std::mt19937_64& rng,
                                     const TreeGenOptions& opt) {
  using artree::plan::Arg;
  using artree::plan::ArtNode;
  using artree::plan::NodeKind;
  using artree::plan::OperatorSpec;
  using artree::plan::OpName;

  artree::plan::Art art;
  art.nodes.emplace_back();
  art.nodes[0].index = 0;
  art.nodes[0].kind = NodeKind::root;

  struct Slot {
    int idx;
    int level;
    bool spine;
  };
  std::vector<Slot> queue{{0, 0, true}};

  auto make_operator = [&](int idx) {
    OperatorSpec spec;
    switch (detail::rand_int(rng, 0, 2)) {
      case 0:
        spec.op = OpName::search;
        spec.args = {Arg::lit("Entity " + std::to_string(idx))};
        if (detail::rand_int(rng, 0, 1)) {
          spec.args.push_back(Arg::lit("descriptor"));
        }
        break;
      case 1:
        spec.op = OpName::relate;
        spec.args = {Arg::lit("Entity " + std::to_string(idx)),
                     Arg::lit("relation " + std::to_string(idx))};
        break;
      default:
        spec.op = OpName::filter;
        spec.args = {Arg::lst({Arg::lit("Alpha"), Arg::lit("Beta")}),
                     Arg::lit("cond " + std::to_string(idx))};
        break;
    }
    return spec;
  };

  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    Slot slot = queue[qi];
    int n_children = detail::rand_int(rng, 1, 3);
    std::vector<int> child_idx;
    for (int c = 0; c < n_children; ++c) {
      int idx = static_cast<int>(art.nodes.size());
      art.nodes.emplace_back();
      ArtNode& node = art.nodes.back();
      node.index = idx;
      node.parent = slot.idx;
      child_idx.push_back(idx);

      bool force_spine = slot.spine && c == 0;
      bool at_bottom = slot.level + 1 >= opt.depth;
      int kind_pick = detail::rand_int(rng, 0, 9);
      if (force_spine && !at_bottom) {
        node.kind = NodeKind::composite;
      } else if (at_bottom || kind_pick < 5) {
        // leaf: DR only when a previous sibling exists
        if (c > 0 && kind_pick % 3 == 0) {
          node.kind = NodeKind::direct_reasoning;
          node.question = "How does [" + std::to_string(child_idx[c - 1]) +
                          "] bear on part " + std::to_string(idx) + "?";
        } else {
          node.kind = NodeKind::atomic;
          node.op = make_operator(idx);
          node.question = "Atomic part " + std::to_string(idx);
        }
      } else {
        node.kind = NodeKind::composite;
      }
      if (node.kind == NodeKind::composite) {
        node.question = "Composite part " + std::to_string(idx);
        queue.push_back({idx, slot.level + 1, force_spine});
      }
      art.nodes[slot.idx].children.push_back(idx);
    }
  }
  art.source_question =
      "Root question over " + std::to_string(art.nodes.size()) + " nodes?";
  art.nodes[0].question = art.source_question;

  if (opt.placeholders) {
    // post-order position of each node; a reference may only point backwards
    std::vector<int> order = artree::plan::post_order(art);
    std::vector<int> pos(art.nodes.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    }
    for (auto& node : art.nodes) {
      if (node.kind == NodeKind::direct_reasoning || node.index == 0) {
        continue;
      }
      std::vector<int> earlier;
      for (const auto& other : art.nodes) {
        if (pos[static_cast<std::size_t>(other.index)] <
            pos[static_cast<std::size_t>(node.index)]) {
          earlier.push_back(other.index);
        }
      }
      if (earlier.empty() || detail::rand_int(rng, 0, 2) != 0) continue;
      int ref = earlier[static_cast<std::size_t>(
          detail::rand_int(rng, 0, static_cast<int>(earlier.size()) - 1))];
      node.question += " given [" + std::to_string(ref) + "]";
      if (node.kind == NodeKind::atomic && node.op &&
          node.op->op == OpName::relate) {
        node.op->args[0] = Arg::ph(ref);
      }
    }
  }
  return art;
}

// Expected retriever calls when every leaf retrieves from one text source:
// Search/Relate 1, Filter one per entity, DR none.
inline long expected_leaf_retrievals(const artree::plan::Art& art) {
  long total = 0;
  for (const auto& node : art.nodes) {
    if (node.kind != artree::plan::NodeKind::atomic || !node.op) continue;
    if (node.op->op == artree::plan::OpName::filter) {
      total += static_cast<long>(node.op->args[0].items.size());
    } else {
      total += 1;
    }
  }
  return total;
}

}  // namespace testsupport
