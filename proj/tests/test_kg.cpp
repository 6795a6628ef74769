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

#include "artree/kg.hpp"
#include "artree/knowledge.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace artree;

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

const kg::KgStore& people() {
  static kg::KgStore store =
      kg::load_kg_jsonl(testsupport::fixture("kg/people.jsonl"));
  return store;
}

}  // namespace

TEST_CASE("the people dump loads with expected counts") {
  const auto& s = people();
  CHECK(s.entities().size() == 15);
  CHECK(s.triples().size() == 7);
  CHECK(s.attribute_count() == 14);
}

TEST_CASE("loader rejects malformed dumps with line numbers") {
  testsupport::TempDir tmp;
  SECTION("bad json") {
    testsupport::write_file(tmp.file("bad.jsonl"),
                            "{\"id\": \"a\", \"label\": \"A\"}\n{oops\n");
    try {
      kg::load_kg_jsonl(tmp.file("bad.jsonl"));
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::format);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SECTION("duplicate id") {
    testsupport::write_file(tmp.file("dup.jsonl"),
                            "{\"id\": \"a\", \"label\": \"A\"}\n"
                            "{\"id\": \"a\", \"label\": \"B\"}\n");
    CHECK(thrown_code([&] { kg::load_kg_jsonl(tmp.file("dup.jsonl")); }) ==
          Errc::format);
  }
  SECTION("dangling triple endpoint") {
    testsupport::write_file(tmp.file("dangle.jsonl"),
                            "{\"id\": \"a\", \"label\": \"A\"}\n"
                            "{\"h\": \"a\", \"r\": \"r\", \"t\": \"ghost\"}\n");
    try {
      kg::load_kg_jsonl(tmp.file("dangle.jsonl"));
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::format);
      CHECK(std::string(e.what()).find("triple endpoint missing") !=
            std::string::npos);
    }
  }
  SECTION("empty file gives an empty store") {
    testsupport::write_file(tmp.file("empty.jsonl"), "");
    auto s = kg::load_kg_jsonl(tmp.file("empty.jsonl"));
    CHECK(s.entities().empty());
    CHECK(s.triples().empty());
    CHECK(s.attribute_count() == 0);
  }
}

TEST_CASE("entity search and disambiguation") {
  const auto& s = people();
  CHECK(kg::kg_search(s, "barack obama") == std::vector<std::string>{"q76"});
  CHECK(kg::kg_search(s, "  BARACK   Obama ") ==
        std::vector<std::string>{"q76"});
  CHECK(kg::kg_search(s, "Natasha Obama") == std::vector<std::string>{"q2"});
  CHECK(kg::kg_search(s, "nobody at all").empty());

  auto both = kg::kg_search(s, "Michael Jordan");
  CHECK(both == std::vector<std::string>{"q3", "q4"});
  CHECK(kg::kg_search(s, "Michael Jordan", "scientist") ==
        std::vector<std::string>{"q4"});
  CHECK(kg::kg_search(s, "Michael Jordan", "basketball player") ==
        std::vector<std::string>{"q3"});
  // an uninformative descriptor keeps every name match
  CHECK(kg::kg_search(s, "Michael Jordan", "zzz qqq") == both);
}

TEST_CASE("relate resolution order") {
  const auto& s = people();

  auto children = kg::kg_relate(s, "q76", "child");
  REQUIRE(children.kind == kg::KgAnswer::Kind::entities);
  CHECK(answer_to_list(children.value) ==
        std::vector<std::string>{"Malia Obama", "Sasha Obama"});

  auto dob = kg::kg_relate(s, "q76", "date of birth");
  REQUIRE(dob.kind == kg::KgAnswer::Kind::attribute);
  CHECK(answer_to_text(dob.value) == "August 4th, 1961");

  auto rel = kg::kg_relate(s, "q1", "Barack Obama");
  REQUIRE(rel.kind == kg::KgAnswer::Kind::relation);
  CHECK(answer_to_text(rel.value) == "child (incoming)");

  SECTION("a relation label beats an attribute key of the same name") {
    auto collided = kg::kg_relate(s, "q8", "field");
    REQUIRE(collided.kind == kg::KgAnswer::Kind::entities);
    CHECK(answer_to_list(collided.value) ==
          std::vector<std::string>{"Philosophy"});
  }
  SECTION("an attribute key beats a connected entity of the same name") {
    auto collided = kg::kg_relate(s, "q10", "gravity");
    REQUIRE(collided.kind == kg::KgAnswer::Kind::attribute);
    CHECK(answer_to_text(collided.value) == "universal");
  }
  SECTION("outgoing connections are scanned before incoming") {
    auto out = kg::kg_relate(s, "q12", "Bob Stone");
    REQUIRE(out.kind == kg::KgAnswer::Kind::relation);
    CHECK(answer_to_text(out.value) == "mentor");
    auto rev = kg::kg_relate(s, "q13", "Alice Carroll");
    CHECK(answer_to_text(rev.value) == "rival");
  }
  SECTION("no match yields the none kind") {
    CHECK(kg::kg_relate(s, "q9", "nothing here").kind ==
          kg::KgAnswer::Kind::none);
  }
  SECTION("unknown entity") {
    CHECK(thrown_code([&] { kg::kg_relate(s, "ghost", "child"); }) ==
          Errc::unknown_entity);
  }
}

TEST_CASE("predicate parsing") {
  auto p = kg::parse_predicate("date of birth within 1955");
  CHECK(p.key == "date of birth");
  CHECK(p.op == kg::Predicate::Op::within);
  CHECK(p.value == "1955");

  auto h = kg::parse_predicate("height > 180 cm");
  CHECK(h.key == "height");
  CHECK(h.op == kg::Predicate::Op::gt);
  CHECK(h.value == "180 cm");

  auto c = kg::parse_predicate("concept = human");
  CHECK(c.key == "concept");
  CHECK(c.op == kg::Predicate::Op::eq);

  CHECK(thrown_code([] { kg::parse_predicate("no operator here"); }) ==
        Errc::predicate_parse);
  CHECK(thrown_code([] { kg::parse_predicate("= 5"); }) ==
        Errc::predicate_parse);
  CHECK(thrown_code([] { kg::parse_predicate("height >"); }) ==
        Errc::predicate_parse);
}

TEST_CASE("filter over typed attributes") {
  const auto& s = people();
  std::vector<std::string> trio{"q5", "q6", "q7"};

  CHECK(kg::kg_filter(s, trio, "date of birth within 1955") ==
        std::vector<std::string>{"q6", "q7"});
  CHECK(kg::kg_filter(s, {"q3", "q5", "q6", "q7"}, "height > 180 cm") ==
        std::vector<std::string>{"q3", "q6"});
  CHECK(kg::kg_filter(s, {"q5", "q9", "q6"}, "concept = human") ==
        std::vector<std::string>{"q5", "q6"});
  CHECK(kg::kg_filter(s, {}, "height > 10 cm").empty());
  // unknown ids are dropped, not errors
  CHECK(kg::kg_filter(s, {"ghost", "q6"}, "date of birth within 1955") ==
        std::vector<std::string>{"q6"});
  // date ordering
  CHECK(kg::kg_filter(s, trio, "date of birth < 1960-01-01") ==
        std::vector<std::string>{"q6", "q7"});
  CHECK(kg::kg_filter(s, trio, "date of birth > 1960-01-01") ==
        std::vector<std::string>{"q5"});
  // year equality
  CHECK(kg::kg_filter(s, {"Q42"}, "publication year = 1687") ==
        std::vector<std::string>{"Q42"});
  CHECK(kg::kg_filter(s, {"Q42"}, "publication year within 1687") ==
        std::vector<std::string>{"Q42"});
  // mismatched unit never matches
  CHECK(kg::kg_filter(s, trio, "height > 1 m").empty());

  SECTION("output is a subset and filtering is idempotent") {
    auto once = kg::kg_filter(s, trio, "date of birth within 1955");
    auto twice = kg::kg_filter(s, once, "date of birth within 1955");
    CHECK(once == twice);
  }
}

TEST_CASE("serialization of kg answers") {
  const auto& s = people();
  CHECK(kg::serialize_labels(s, {"q1", "q2"}) == "Malia Obama; Sasha Obama");
  auto spec = plan::parse_operator("Relate(\"Barack Obama\", \"child\")");
  auto res = knowledge::query_kg_from_spec(s, spec);
  REQUIRE(res.answer.has_value());
  CHECK(*res.answer == "Malia Obama; Sasha Obama");

  auto missing = knowledge::query_kg_from_spec(
      s, plan::parse_operator("Relate(\"Nobody Known\", \"child\")"));
  REQUIRE(missing.answer.has_value());
  CHECK(missing.answer->empty());
}

TEST_CASE("entity profiles cover names, attributes, and both edge directions") {
  const auto& s = people();
  std::string prof = kg::entity_profile(s, "q76");
  CHECK(prof.find("Barack Obama") != std::string::npos);
  CHECK(prof.find("also known as") != std::string::npos);
  CHECK(prof.find("politician") != std::string::npos);
  CHECK(prof.find("date of birth: August 4th, 1961") != std::string::npos);
  CHECK(prof.find("child: Malia Obama") != std::string::npos);

  std::string malia = kg::entity_profile(s, "q1");
  CHECK(malia.find("child (incoming): Barack Obama") != std::string::npos);
}

TEST_CASE("one-step programs execute against the store") {
  const auto& s = people();
  CHECK(kg::execute_program(s, "relate(Q42, \"author\")") == "Isaac Newton");
  CHECK(kg::execute_program(s, "search(\"Michael Jordan\", \"scientist\")") ==
        "Michael Jordan");
  CHECK(kg::execute_program(
            s, "filter([q5, q6, q7], \"date of birth within 1955\")") ==
        "Steve Jobs; Bill Gates");
  // names resolve through search when no id matches
  CHECK(kg::execute_program(s, "relate(\"Barack Obama\", \"child\")") ==
        "Malia Obama; Sasha Obama");
  CHECK(thrown_code([&] { kg::execute_program(s, "hop(q1, q2)"); }) ==
        Errc::program_parse);
  CHECK(thrown_code([&] { kg::execute_program(s, "not a call"); }) ==
        Errc::program_parse);
}

TEST_CASE("random stores agree with full-scan oracles") {
  std::mt19937_64 rng(31337);
  static const std::vector<std::string> kNames = {
      "Alex Stone", "Brook Hale", "Casey Vega", "Dana Frost", "Eli Marsh"};
  for (int round = 0; round < 40; ++round) {
    kg::KgStore store = oracles::random_store(rng);
    const auto n = store.entities().size();

    for (int probe = 0; probe < 8; ++probe) {
      const auto& e = store.entities()[rng() % n];

      // search by label, with and without a concept descriptor
      CHECK(kg::kg_search(store, e.label) ==
            oracles::search_oracle(store, e.label, std::nullopt));
      std::optional<std::string> desc;
      if (!e.concepts.empty()) desc = e.concepts[rng() % e.concepts.size()];
      CHECK(kg::kg_search(store, e.label, desc) ==
            oracles::search_oracle(store, e.label, desc));
      const std::string& rnd = kNames[rng() % kNames.size()];
      CHECK(kg::kg_search(store, rnd) ==
            oracles::search_oracle(store, rnd, std::nullopt));

      // relate against relation labels, attribute keys, entity names
      std::vector<std::string> seconds{"child", "author", "height",
                                       "date of birth", "color",
                                       kNames[rng() % kNames.size()]};
      const std::string& second = seconds[rng() % seconds.size()];
      auto got = kg::kg_relate(store, e.id, second);
      auto want = oracles::relate_oracle(store, e.id, second);
      CHECK(got.kind == want.kind);
      CHECK(answer_to_text(got.value) == answer_to_text(want.value));

      // filter over a random prefix of ids
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < n; i += 1 + rng() % 3) {
        ids.push_back(store.entities()[i].id);
      }
      std::vector<std::string> preds{
          "height > 180 cm", "height < 170 cm", "date of birth within 1955",
          "publication year = 1955", "color = red", "concept = human"};
      const std::string& ps = preds[rng() % preds.size()];
      CHECK(kg::kg_filter(store, ids, ps) ==
            oracles::filter_oracle(store, ids, kg::parse_predicate(ps)));
    }
  }
}
