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

#include <optional>
#include <random>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "artree/plan.hpp"
#include "artree/text.hpp"
#include "support.hpp"

using namespace artree;
using nlohmann::json;

namespace {

template <class F>
std::optional<Errc> thrown_code(F&& f) {
  try {
    std::forward<F>(f)();
    return std::nullopt;
  } catch (const Error& e) {
    return e.code();
  }
}

plan::Art walkthrough_art() {
  return plan::parse_art(
      testsupport::read_file(testsupport::fixture("walkthrough/plan.json")));
}

}  // namespace

TEST_CASE("text utilities") {
  CHECK(text::tokenize("Hello, World!") ==
        std::vector<std::string>{"hello", "world"});
  CHECK(text::tokenize("2000-2010") == std::vector<std::string>{"2000", "2010"});
  CHECK(text::normalize_name("  Barack   OBAMA ") == "barack obama");
  CHECK(text::normalize_name(text::normalize_name("  A  b ")) ==
        text::normalize_name("  A  b "));
  CHECK(text::trim(" \t x \n") == "x");
  CHECK(text::digest("abc").size() == 16);
  CHECK(text::digest("abc") == text::digest("abc"));
  CHECK(text::digest("abc") != text::digest("abd"));
  CHECK(text::join({"a", "b"}, "; ") == "a; b");
  CHECK(text::token_set("the the cat").size() == 2);
}

TEST_CASE("parse_operator accepts the documented forms") {
  auto s = plan::parse_operator("Search(\"Michael Jordan\", \"scientist\")");
  REQUIRE(s.op == plan::OpName::search);
  REQUIRE(s.args.size() == 2);
  CHECK(s.args[0] == plan::Arg::lit("Michael Jordan"));
  CHECK(s.args[1] == plan::Arg::lit("scientist"));

  auto f = plan::parse_operator(
      "Filter([2], \"released between 2000 and 2010\")");
  REQUIRE(f.op == plan::OpName::filter);
  CHECK(f.args[0] == plan::Arg::ph(2));
  CHECK(f.args[1] == plan::Arg::lit("released between 2000 and 2010"));

  auto fl = plan::parse_operator("Filter([\"A\", \"B\"], \"cond\")");
  REQUIRE(fl.args[0].kind == plan::Arg::Kind::list);
  REQUIRE(fl.args[0].items.size() == 2);
  CHECK(fl.args[0].items[1] == plan::Arg::lit("B"));

  auto esc = plan::parse_operator("Search(\"a \\\"quoted\\\" \\\\ name\")");
  CHECK(esc.args[0] == plan::Arg::lit("a \"quoted\" \\ name"));
}

TEST_CASE("parse_operator rejects bad calls") {
  CHECK(thrown_code([] { plan::parse_operator("Relate(\"x\")"); }) ==
        Errc::arity);
  CHECK(thrown_code([] {
          plan::parse_operator("Search(\"a\", \"b\", \"c\")");
        }) == Errc::arity);
  CHECK(thrown_code([] { plan::parse_operator("Fetch(\"x\")"); }) ==
        Errc::unknown_operator);
  CHECK(thrown_code([] { plan::parse_operator("search(\"x\")"); }) ==
        Errc::unknown_operator);
  CHECK(thrown_code([] { plan::parse_operator("Search(\"x"); }) ==
        Errc::syntax);
  CHECK(thrown_code([] { plan::parse_operator("Search([1, \"x\")"); }) ==
        Errc::syntax);
  CHECK(thrown_code([] { plan::parse_operator("Filter(\"e\", \"c\") x"); }) ==
        Errc::syntax);
}

TEST_CASE("operator rendering is canonical and round-trips") {
  const std::string canon =
      "Filter([\"A\", \"B\"], \"released between 2000 and 2010\")";
  CHECK(plan::to_string(plan::parse_operator(canon)) == canon);
  CHECK(plan::to_string(plan::parse_operator(
            "Filter( [ \"A\" ,\"B\" ] , \"released between 2000 and 2010\" )")) ==
        canon);
  CHECK(plan::to_string(plan::parse_operator("Relate([4], \"child\")")) ==
        "Relate([4], \"child\")");
}

TEST_CASE("parse_art on the six-node fixture") {
  plan::Art art = walkthrough_art();
  REQUIRE(art.nodes.size() == 6);
  CHECK(art.source_question ==
        "How many studio albums has Shakira released between 2000 and 2010?");
  CHECK(art.at(0).kind == plan::NodeKind::root);
  CHECK(art.at(1).kind == plan::NodeKind::composite);
  CHECK(art.at(2).kind == plan::NodeKind::atomic);
  CHECK(art.at(3).kind == plan::NodeKind::direct_reasoning);
  CHECK(art.at(4).kind == plan::NodeKind::atomic);
  CHECK(art.at(5).kind == plan::NodeKind::atomic);
  CHECK(art.at(0).children == std::vector<int>{1, 2, 3});
  CHECK(art.at(1).children == std::vector<int>{4, 5});
  CHECK(art.at(4).parent == 1);
  REQUIRE(art.at(2).op.has_value());
  CHECK(art.at(2).op->op == plan::OpName::filter);
  CHECK(plan::post_order(art) == std::vector<int>{4, 5, 1, 2, 3, 0});
  CHECK(plan::validate_art(art).empty());
  CHECK(plan::depth(art) == 2);
}

TEST_CASE("parse_art tolerates fenced output and prose around the object") {
  std::string fenced = "Here is the plan:\n```json\n" +
                       testsupport::read_file(
                           testsupport::fixture("walkthrough/plan.json")) +
                       "\n```\nDone.";
  CHECK(plan::parse_art(fenced).nodes.size() == 6);
}

TEST_CASE("parse_art error taxonomy") {
  auto minimal = [](const char* op, bool dr) {
    json doc;
    doc["question"] = "Q?";
    doc["nodes"] = json::array();
    doc["nodes"].push_back(
        {{"idx", 0}, {"q", "Q?"}, {"children", {1}}, {"op", nullptr},
         {"dr", false}});
    json leaf = {{"idx", 1}, {"q", "Sub"}, {"children", json::array()},
                 {"dr", dr}};
    if (op) leaf["op"] = op; else leaf["op"] = nullptr;
    doc["nodes"].push_back(leaf);
    return doc;
  };

  SECTION("valid minimal plan") {
    auto art = plan::parse_art(minimal("Search(\"Paris\")", false).dump());
    CHECK(art.nodes.size() == 2);
    CHECK(plan::depth(art) == 1);
    CHECK(plan::post_order(art) == std::vector<int>{1, 0});
  }
  SECTION("not json at all") {
    CHECK(thrown_code([] { plan::parse_art("not a plan"); }) == Errc::schema);
  }
  SECTION("missing nodes key") {
    CHECK(thrown_code([] { plan::parse_art("{\"question\": \"x\"}"); }) ==
          Errc::schema);
  }
  SECTION("idx gap is an index error") {
    json doc = minimal("Search(\"Paris\")", false);
    doc["nodes"][1]["idx"] = 2;
    doc["nodes"][0]["children"] = {2};
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) == Errc::index);
  }
  SECTION("child out of range is an index error") {
    json doc = minimal("Search(\"Paris\")", false);
    doc["nodes"][0]["children"] = {1, 9};
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) == Errc::index);
  }
  SECTION("bad operator expression is an operator error") {
    json doc = minimal("Relate(\"x\")", false);
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) ==
          Errc::operator_call);
  }
  SECTION("op and dr together is a schema error") {
    json doc = minimal("Search(\"Paris\")", true);
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) == Errc::schema);
  }
  SECTION("dangling placeholder is a placeholder error") {
    json doc = minimal(nullptr, true);
    doc["nodes"][1]["q"] = "What about [7]?";
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) ==
          Errc::placeholder);
  }
  SECTION("leaf with neither op nor dr is a schema error") {
    json doc = minimal(nullptr, false);
    CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) == Errc::schema);
  }
}

TEST_CASE("DR placeholders must reference previous siblings") {
  // node 3 references [4], which is node 1's child, not a sibling of 3
  json doc = json::parse(
      testsupport::read_file(testsupport::fixture("walkthrough/plan.json")));
  doc["nodes"][3]["q"] = "How many albums are in [4]?";
  CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) ==
        Errc::placeholder);
}

TEST_CASE("forward placeholders are rejected") {
  // node 2 referencing [3]: node 3 runs later in post order
  json doc = json::parse(
      testsupport::read_file(testsupport::fixture("walkthrough/plan.json")));
  doc["nodes"][2]["q"] = "Which albums in [3]?";
  doc["nodes"][2]["op"] = "Filter([3], \"cond\")";
  CHECK(thrown_code([&] { plan::parse_art(doc.dump()); }) ==
        Errc::placeholder);
}

TEST_CASE("validate_art names the node and rule") {
  plan::Art art = walkthrough_art();
  art.nodes[4].children.push_back(5);
  bool found = false;
  for (const auto& v : plan::validate_art(art)) {
    if (v.to_string() == "node 4: atomic node must be leaf") found = true;
  }
  CHECK(found);

  plan::Art art2 = walkthrough_art();
  art2.nodes[1].children.clear();
  auto vs = plan::validate_art(art2);
  REQUIRE_FALSE(vs.empty());
  bool names_node1 = false;
  for (const auto& v : vs) names_node1 |= (v.node == 1);
  CHECK(names_node1);
}

TEST_CASE("substitution rules") {
  AnswerMap answers;
  answers[2] = std::vector<std::string>{"Laundry Service", "Oral Fixation"};
  answers[4] = std::string("Shakira");

  CHECK(plan::substitute_text("How many albums are in [2]?", answers) ==
        "How many albums are in Laundry Service, Oral Fixation?");
  CHECK(plan::substitute_text("[4] is [4]", answers) == "Shakira is Shakira");
  CHECK(thrown_code([&] { plan::substitute_text("[7]?", answers); }) ==
        Errc::missing_answer);

  auto f = plan::parse_operator("Filter([2], \"c\")");
  auto fs = plan::substitute_spec(f, answers);
  REQUIRE(fs.args[0].kind == plan::Arg::Kind::list);
  REQUIRE(fs.args[0].items.size() == 2);
  CHECK(fs.args[0].items[0] == plan::Arg::lit("Laundry Service"));

  // a scalar where Filter needs an entity list
  auto f2 = plan::parse_operator("Filter([4], \"c\")");
  CHECK(thrown_code([&] { plan::substitute_spec(f2, answers); }) ==
        Errc::type_mismatch);

  auto r = plan::parse_operator("Relate([4], \"studio album\")");
  auto rs = plan::substitute_spec(r, answers);
  CHECK(rs.args[0] == plan::Arg::lit("Shakira"));
}

TEST_CASE("serialization is byte-stable") {
  plan::Art art = walkthrough_art();
  std::string s1 = plan::serialize_art(art);
  std::string s2 = plan::serialize_art(plan::parse_art(s1));
  CHECK(s1 == s2);
}

TEST_CASE("depth statistics") {
  std::vector<plan::Art> arts{walkthrough_art()};
  auto st = plan::depth_stats(arts);
  CHECK(st.mean == 2.0);
  CHECK(st.median == 2.0);
  CHECK(st.min == 2);
  CHECK(st.max == 2);

  CHECK(thrown_code([] { plan::depth_stats({}); }) == Errc::empty_input);

  // even count: median is the mean of the middle pair
  std::mt19937_64 rng(7);
  std::vector<plan::Art> batch;
  std::vector<int> want;
  for (int d : {1, 2, 3, 4}) {
    batch.push_back(testsupport::random_tree(rng, {d, false}));
    want.push_back(d);
  }
  auto st2 = plan::depth_stats(batch);
  CHECK(st2.min == 1);
  CHECK(st2.max == 4);
  CHECK(st2.median == Catch::Approx(2.5));
  CHECK(st2.mean == Catch::Approx(2.5));
}

TEST_CASE("random trees validate, round-trip, and honor depth") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) {
    testsupport::TreeGenOptions opt;
    opt.depth = 1 + static_cast<int>(rng() % 5);
    opt.placeholders = (i % 2) == 1;
    plan::Art art = testsupport::random_tree(rng, opt);
    INFO("tree " << i << " depth " << opt.depth);
    CHECK(plan::validate_art(art).empty());
    CHECK(plan::depth(art) == opt.depth);

    std::string s1 = plan::serialize_art(art);
    plan::Art back = plan::parse_art(s1);
    CHECK(plan::serialize_art(back) == s1);
    CHECK(back.nodes.size() == art.nodes.size());

    auto order = plan::post_order(art);
    CHECK(order.size() == art.nodes.size());
    std::vector<int> pos(art.nodes.size());
    for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = (int)p;
    for (const auto& n : art.nodes) {
      for (int c : n.children) {
        CHECK(pos[c] < pos[n.index]);
        CHECK(n.index < c);  // BFS: parents before children
      }
    }
  }
}

TEST_CASE("single-rule mutations are caught") {
  std::mt19937_64 rng(99);
  int caught = 0, total = 0;
  for (int i = 0; i < 60; ++i) {
    plan::Art art = testsupport::random_tree(
        rng, {2 + static_cast<int>(rng() % 3), true});
    json doc = json::parse(plan::serialize_art(art));
    auto& nodes = doc["nodes"];
    int n = static_cast<int>(nodes.size());
    switch (i % 6) {
      case 0: nodes[n - 1]["idx"] = n + 3; break;
      case 1: nodes[0]["children"].push_back(n + 7); break;
      case 2: nodes[0]["op"] = "Search(\"x\")"; break;
      case 3: nodes[n - 1]["q"] = "uses [99]"; break;
      case 4: nodes[0]["children"] = json::array(); break;
      case 5: {
        // find an atomic node and give it a child
        bool mutated = false;
        for (auto& nd : nodes) {
          if (!nd["op"].is_null()) {
            nd["children"].push_back(0);
            mutated = true;
            break;
          }
        }
        if (!mutated) nodes[0]["dr"] = true;
        break;
      }
    }
    ++total;
    if (thrown_code([&] { plan::parse_art(doc.dump()); }).has_value()) {
      ++caught;
    }
  }
  CHECK(caught == total);
}
