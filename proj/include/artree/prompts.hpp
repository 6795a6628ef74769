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
// Prompt templates. Slots use {{name}} syntax; rendering is pure and every
// referenced slot must be bound. Each template carries a two-shot exemplar
// block and pins the output grammar: the final line of a model reply must be
// a JSON list, a double-quoted string, or the sentinel Unknown.
//===----------------------------------------------------------------------===//

#include <map>
#include <string>
#include <vector>

#include "artree/errors.hpp"

namespace artree {
namespace prompts {

enum class Id {
  plan_generation,
  executor_search,
  executor_relate,
  executor_filter,
  source_selection,
  child_answer,
  sibling_answer,
  direct_rag,
};

inline const char* id_name(Id id) {
  switch (id) {
    case Id::plan_generation: return "plan_generation";
    case Id::executor_search: return "executor_search";
    case Id::executor_relate: return "executor_relate";
    case Id::executor_filter: return "executor_filter";
    case Id::source_selection: return "source_selection";
    case Id::child_answer: return "child_answer";
    case Id::sibling_answer: return "sibling_answer";
    case Id::direct_rag: return "direct_rag";
  }
  return "?";
}

struct Template {
  std::string system;
  std::string user;
};

namespace detail {

inline const char* kAnswerGrammar =
    "Finish with one final line containing only the answer: a JSON list of "
    "strings, a double-quoted string, or the word Unknown.";

inline const std::map<std::string, Template>& table() {
  static const std::map<std::string, Template> t = [] {
    std::map<std::string, Template> m;

    m["plan_generation"] = Template{
        // system
        std::string(
            "You decompose a complex question into an atomic reasoning "
            "tree.\n"
            "Output a single JSON object, nothing else:\n"
            "{\"question\": str, \"nodes\": [{\"idx\": int, \"q\": str, "
            "\"children\": [int], \"op\": str|null, \"dr\": bool}]}\n"
            "Rules:\n"
            "- Node 0 is the root and restates the question verbatim; nodes "
            "are numbered breadth-first (parents before children, siblings "
            "left to right).\n"
            "- Leaf sub-questions that need knowledge carry exactly one "
            "atomic operator in \"op\":\n"
            "    Search(\"entity name\") or Search(\"entity name\", "
            "\"descriptor\") finds and disambiguates an entity.\n"
            "    Relate(\"entity\", \"relation or attribute or entity\") "
            "does one-hop inference from an entity.\n"
            "    Filter([i], \"condition\") keeps the entities of node i's "
            "answer that satisfy the condition.\n"
            "- [i] inside a question or operator argument is replaced by "
            "node i's answer at run time.\n"
            "- A leaf that only combines earlier sibling answers (counting, "
            "comparing, arithmetic) sets \"dr\": true and carries no "
            "operator; its [i] references must point at earlier siblings.\n"
            "- Non-leaf nodes have \"op\": null and \"dr\": false.\n"
            "\n"
            "Example 1:\n"
            "Question: In which country was the spouse of the director of "
            "Titanic born?\n"
            "{\"question\": \"In which country was the spouse of the "
            "director of Titanic born?\", \"nodes\": [\n"
            " {\"idx\": 0, \"q\": \"In which country was the spouse of the "
            "director of Titanic born?\", \"children\": [1, 2, 3], \"op\": "
            "null, \"dr\": false},\n"
            " {\"idx\": 1, \"q\": \"Who is the director of Titanic?\", "
            "\"children\": [], \"op\": \"Relate(\\\"Titanic\\\", "
            "\\\"director\\\")\", \"dr\": false},\n"
            " {\"idx\": 2, \"q\": \"Who is the spouse of [1]?\", "
            "\"children\": [], \"op\": \"Relate(\\\"[1]\\\", "
            "\\\"spouse\\\")\", \"dr\": false},\n"
            " {\"idx\": 3, \"q\": \"In which country was [2] born?\", "
            "\"children\": [], \"op\": \"Relate(\\\"[2]\\\", \\\"country of "
            "birth\\\")\", \"dr\": false}]}\n"
            "\n"
            "Example 2:\n"
            "Question: How many of the founders of Microsoft were born in "
            "1955?\n"
            "{\"question\": \"How many of the founders of Microsoft were "
            "born in 1955?\", \"nodes\": [\n"
            " {\"idx\": 0, \"q\": \"How many of the founders of Microsoft "
            "were born in 1955?\", \"children\": [1, 2, 3], \"op\": null, "
            "\"dr\": false},\n"
            " {\"idx\": 1, \"q\": \"Who are the founders of Microsoft?\", "
            "\"children\": [], \"op\": \"Relate(\\\"Microsoft\\\", "
            "\\\"founder\\\")\", \"dr\": false},\n"
            " {\"idx\": 2, \"q\": \"Which of [1] were born in 1955?\", "
            "\"children\": [], \"op\": \"Filter([1], \\\"born in 1955\\\")\", "
            "\"dr\": false},\n"
            " {\"idx\": 3, \"q\": \"How many people are in [2]?\", "
            "\"children\": [], \"op\": null, \"dr\": true}]}"),
        // user
        "{{feedback}}Question: {{question}}\nPlan JSON:"};

    m["executor_search"] = Template{
        std::string(
            "You carry out the Search operator: given an entity name, an "
            "optional descriptor, and retrieved evidence, return the "
            "matching entity name(s), using the descriptor to disambiguate "
            "between same-name candidates when the evidence supports it.\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nSub-question: Who is the scientist Michael "
            "Jordan?\nOperator: Search(\"Michael Jordan\", "
            "\"scientist\")\nEvidence:\nMichael I. Jordan is an American "
            "scientist known for machine learning.\nMichael Jeffrey Jordan "
            "is a former professional basketball player.\nAnswer:\n"
            "[\"Michael I. Jordan\"]\n\nExample 2:\nSub-question: Find the "
            "city of Paris.\nOperator: Search(\"Paris\")\nEvidence:\nParis "
            "is the capital and largest city of France.\nAnswer:\n"
            "[\"Paris\"]",
        "Sub-question: {{question}}\nOperator: "
        "{{operator}}\nEvidence:\n{{knowledge}}\nAnswer:"};

    m["executor_relate"] = Template{
        std::string(
            "You carry out the Relate operator: from a head entity and a "
            "second argument, use the evidence to return either (1) the "
            "tail entities of the named relation, (2) the value of the "
            "named attribute, or (3) the relation connecting the two named "
            "entities; pick whichever reading the arguments support.\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nSub-question: Who are the children of Barack "
            "Obama?\nOperator: Relate(\"Barack Obama\", "
            "\"child\")\nEvidence:\nBarack Obama has two daughters, Malia "
            "Obama and Sasha Obama.\nAnswer:\n[\"Malia Obama\", \"Sasha "
            "Obama\"]\n\nExample 2:\nSub-question: What is the date of "
            "birth of Barack Obama?\nOperator: Relate(\"Barack Obama\", "
            "\"date of birth\")\nEvidence:\nBarack Obama was born on August "
            "4th, 1961.\nAnswer:\n\"August 4th, 1961\"",
        "Sub-question: {{question}}\nOperator: "
        "{{operator}}\nEvidence:\n{{knowledge}}\nAnswer:"};

    m["executor_filter"] = Template{
        std::string(
            "You carry out the Filter operator: keep exactly the input "
            "entities that satisfy the condition according to the evidence. "
            "The answer must be a subset of the input entities, in input "
            "order; an empty list is valid.\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nSub-question: Which of them were born in "
            "1955?\nOperator: Filter([\"Lionel Messi\", \"Steve Jobs\", "
            "\"Bill Gates\"], \"born in 1955\")\nEvidence:\nLionel Messi "
            "was born in 1987.\nSteve Jobs was born on February 24, "
            "1955.\nBill Gates was born on October 28, 1955.\nAnswer:\n"
            "[\"Steve Jobs\", \"Bill Gates\"]\n\nExample 2:\nSub-question: "
            "Which of them is a river?\nOperator: Filter([\"Mississippi\"], "
            "\"is a river\")\nEvidence:\nMississippi is a state in the "
            "United States.\nAnswer:\n[]",
        "Sub-question: {{question}}\nOperator: "
        "{{operator}}\nEvidence:\n{{knowledge}}\nAnswer:"};

    m["source_selection"] = Template{
        std::string(
            "You route a sub-question to knowledge sources. Available "
            "sources may include: kg (structured knowledge graph of "
            "entities, relations, attributes), text (local text corpus), "
            "web (live web search). Reply with a comma-separated subset of "
            "the available sources and nothing else.\n\nExample 1:\n"
            "Available sources: kg, text, web\nSub-question: When was the "
            "singer Shakira born?\nSources: kg, text\n\nExample 2:\n"
            "Available sources: kg, text, web\nSub-question: What was "
            "yesterday's stock price of Apple?\nSources: web"),
        "Available sources: {{sources}}\nSub-question: "
        "{{question}}\nSources:"};

    m["child_answer"] = Template{
        std::string(
            "You answer a question by synthesizing the answers of its "
            "sub-questions. Use only the sub-question answers given. If "
            "they are insufficient or contradictory, reply Unknown.\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nQuestion: In which country was the spouse of "
            "the director of Titanic born?\nSub-questions answered:\nQ: Who "
            "is the director of Titanic? A: James Cameron\nQ: Who is the "
            "spouse of James Cameron? A: Suzy Amis\nQ: In which country was "
            "Suzy Amis born? A: United States\nAnswer:\n\"United "
            "States\"\n\nExample 2:\nQuestion: Which is taller, A or "
            "B?\nSub-questions answered:\nQ: How tall is A? A: "
            "Unknown\nQ: How tall is B? A: 300 m\nAnswer:\nUnknown",
        "Question: {{question}}\nSub-questions "
        "answered:\n{{children}}\nAnswer:"};

    m["sibling_answer"] = Template{
        std::string(
            "You answer a question that refers to answers already obtained "
            "for earlier sibling questions. No retrieval is available; "
            "reason only over the referenced answers (count, compare, "
            "compute as needed).\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nQuestion: How many albums are in the list "
            "Laundry Service, Fijacion Oral Vol. 1, Oral Fixation Vol. "
            "2?\nReferenced answers:\nQ: Which albums did X release? A: "
            "Laundry Service, Fijacion Oral Vol. 1, Oral Fixation Vol. "
            "2\nAnswer:\n\"3\"\n\nExample 2:\nQuestion: Is 300 m taller "
            "than 250 m?\nReferenced answers:\nQ: How tall is A? A: 300 "
            "m\nQ: How tall is B? A: 250 m\nAnswer:\n\"yes\"",
        "Question: {{question}}\nReferenced "
        "answers:\n{{siblings}}\nAnswer:"};

    m["direct_rag"] = Template{
        std::string(
            "Answer the question from the retrieved evidence. Keep the "
            "answer short (an entity, value, or brief phrase). If the "
            "evidence is empty or insufficient, answer from your own "
            "knowledge; reply Unknown only when you cannot answer at "
            "all.\n") +
            kAnswerGrammar +
            "\n\nExample 1:\nQuestion: What is the capital of "
            "France?\nEvidence:\nParis is the capital and most populous "
            "city of France.\nAnswer:\n\"Paris\"\n\nExample 2:\nQuestion: "
            "Who wrote Hamlet?\nEvidence:\n\nAnswer:\n\"William "
            "Shakespeare\"",
        "Question: {{question}}\nEvidence:\n{{knowledge}}\nAnswer:"};

    return m;
  }();
  return t;
}

inline std::string fill(const std::string& tmpl,
                        const std::map<std::string, std::string>& vars,
                        const std::string& template_id) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      std::size_t close = tmpl.find("}}", i + 2);
      if (close != std::string::npos) {
        std::string slot = tmpl.substr(i + 2, close - i - 2);
        auto it = vars.find(slot);
        if (it == vars.end()) {
          fail(Errc::missing_slot,
               "template '" + template_id + "' slot '" + slot + "' unbound");
        }
        out += it->second;
        i = close + 2;
        continue;
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace detail

struct Message {
  std::string role;
  std::string content;
};

// Deterministic: same id + same variables -> identical bytes.
inline std::vector<Message> render(
    const std::string& template_id,
    const std::map<std::string, std::string>& vars) {
  const auto& tbl = detail::table();
  auto it = tbl.find(template_id);
  if (it == tbl.end()) {
    fail(Errc::unknown_template, "no template '" + template_id + "'");
  }
  return {Message{"system", it->second.system},
          Message{"user", detail::fill(it->second.user, vars, template_id)}};
}

inline std::vector<Message> render(
    Id id, const std::map<std::string, std::string>& vars) {
  return render(id_name(id), vars);
}

}  // namespace prompts
}  // namespace artree
