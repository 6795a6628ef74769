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
// Naive reference implementations used only by tests. Each oracle is a
// deliberately dumb full scan written from the documented behavior, not from
// the library code, so agreement is meaningful.
//===----------------------------------------------------------------------===//

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "artree/kg.hpp"
#include "artree/text.hpp"

namespace oracles {

//===----------------------------------------------------------------------===//
// Overlap coefficient
//===----------------------------------------------------------------------===//

// Brute-force set enumeration: count shared members by pairwise comparison.
inline double overlap_oracle(const std::set<std::string>& q,
                             const std::set<std::string>& p) {
  if (p.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& a : q) {
    for (const auto& b : p) {
      if (a == b) {
        ++shared;
        break;
      }
    }
  }
  return static_cast<double>(shared) /
         static_cast<double>(std::min(q.size(), p.size()));
}

//===----------------------------------------------------------------------===//
// KG full-scan oracles
//===----------------------------------------------------------------------===//

inline bool name_hit(const artree::kg::Entity& e, const std::string& name) {
  const std::string want = artree::text::normalize_name(name);
  if (artree::text::normalize_name(e.label) == want) return true;
  for (const auto& a : e.aliases) {
    if (artree::text::normalize_name(a) == want) return true;
  }
  return false;
}

inline std::vector<std::string> search_oracle(
    const artree::kg::KgStore& store, const std::string& name,
    const std::optional<std::string>& descriptor) {
  std::vector<const artree::kg::Entity*> cand;
  for (const auto& e : store.entities()) {
    if (name_hit(e, name)) cand.push_back(&e);
  }
  if (descriptor && !artree::text::trim(*descriptor).empty() &&
      !cand.empty()) {
    std::set<std::string> want = artree::text::token_set(*descriptor);
    std::vector<std::size_t> scores;
    std::size_t best = 0;
    for (const auto* e : cand) {
      std::set<std::string> have;
      for (const auto& c : e->concepts) {
        for (const auto& t : artree::text::tokenize(c)) have.insert(t);
      }
      for (const auto& a : e->attributes) {
        for (const auto& t : artree::text::tokenize(a.value.display)) {
          have.insert(t);
        }
      }
      std::size_t s = 0;
      for (const auto& t : want) s += have.count(t);
      scores.push_back(s);
      best = std::max(best, s);
    }
    if (best > 0) {
      std::vector<const artree::kg::Entity*> kept;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (scores[i] == best) kept.push_back(cand[i]);
      }
      cand = std::move(kept);
    }
  }
  std::vector<std::string> out;
  for (const auto* e : cand) out.push_back(e->id);
  return out;
}

// Resolution order: outgoing relation labels, then attribute keys, then a
// connecting entity (outgoing before incoming, incoming annotated).
inline artree::kg::KgAnswer relate_oracle(const artree::kg::KgStore& store,
                                          const std::string& id,
                                          const std::string& second) {
  using artree::kg::KgAnswer;
  const std::string want = artree::text::normalize_name(second);
  std::vector<std::string> tails;
  for (const auto& t : store.triples()) {
    if (t.h == id && artree::text::normalize_name(t.r) == want) {
      tails.push_back(store.label(t.t));
    }
  }
  if (!tails.empty()) return KgAnswer{KgAnswer::Kind::entities, tails};

  const artree::kg::Entity* e = store.find(id);
  for (const auto& a : e->attributes) {
    if (artree::text::normalize_name(a.key) == want) {
      return KgAnswer{KgAnswer::Kind::attribute, a.value.display};
    }
  }

  std::set<std::string> others;
  for (const auto& cand : store.entities()) {
    if (name_hit(cand, second)) others.insert(cand.id);
  }
  if (store.find(second)) others.insert(second);
  for (const auto& t : store.triples()) {
    if (t.h == id && others.count(t.t)) {
      return KgAnswer{KgAnswer::Kind::relation, t.r};
    }
  }
  for (const auto& t : store.triples()) {
    if (t.t == id && others.count(t.h)) {
      return KgAnswer{KgAnswer::Kind::relation, t.r + " (incoming)"};
    }
  }
  return KgAnswer{};
}

inline bool filter_entity_oracle(const artree::kg::Entity& e,
                                 const artree::kg::Predicate& pred) {
  using artree::kg::AttrValue;
  using Op = artree::kg::Predicate::Op;
  const std::string key = artree::text::normalize_name(pred.key);
  if (key == "concept") {
    for (const auto& c : e.concepts) {
      if (artree::text::normalize_name(c) ==
          artree::text::normalize_name(pred.value)) {
        return true;
      }
    }
    return false;
  }
  for (const auto& a : e.attributes) {
    if (artree::text::normalize_name(a.key) != key) continue;
    const AttrValue& v = a.value;
    switch (v.type) {
      case AttrValue::Type::string_: {
        std::string have = artree::text::normalize_name(v.display);
        std::string want = artree::text::normalize_name(pred.value);
        if (pred.op == Op::eq && have == want) return true;
        if (pred.op == Op::lt && have < want) return true;
        if (pred.op == Op::gt && have > want) return true;
        if (pred.op == Op::within && have.find(want) != std::string::npos) {
          return true;
        }
        break;
      }
      case AttrValue::Type::number: {
        char* end = nullptr;
        const std::string raw = artree::text::trim(pred.value);
        double want = std::strtod(raw.c_str(), &end);
        if (end == raw.c_str()) break;
        std::string unit = artree::text::trim(end ? end : "");
        if (!unit.empty() &&
            artree::text::normalize_name(unit) !=
                artree::text::normalize_name(v.unit)) {
          break;
        }
        if (pred.op == Op::eq && v.num == want) return true;
        if (pred.op == Op::lt && v.num < want) return true;
        if (pred.op == Op::gt && v.num > want) return true;
        if (pred.op == Op::within && v.num == want) return true;
        break;
      }
      case AttrValue::Type::year: {
        int want = std::atoi(artree::text::trim(pred.value).c_str());
        if (pred.op == Op::eq && v.year == want) return true;
        if (pred.op == Op::lt && v.year < want) return true;
        if (pred.op == Op::gt && v.year > want) return true;
        if (pred.op == Op::within && v.year == want) return true;
        break;
      }
      case AttrValue::Type::date: {
        const std::string want = artree::text::trim(pred.value);
        if (pred.op == Op::eq && v.iso == want) return true;
        if (pred.op == Op::lt && v.iso < want) return true;
        // gt compares at the predicate's granularity so a date inside the
        // period "1955" is not after "1955"
        if (pred.op == Op::gt && v.iso.substr(0, want.size()) > want) {
          return true;
        }
        if (pred.op == Op::within &&
            (v.iso == want ||
             (v.iso.size() > want.size() &&
              v.iso.compare(0, want.size(), want) == 0 &&
              v.iso[want.size()] == '-'))) {
          return true;
        }
        break;
      }
    }
  }
  return false;
}

inline std::vector<std::string> filter_oracle(
    const artree::kg::KgStore& store, const std::vector<std::string>& ids,
    const artree::kg::Predicate& pred) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    const artree::kg::Entity* e = store.find(id);
    if (e && filter_entity_oracle(*e, pred)) out.push_back(id);
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Random store generation
//===----------------------------------------------------------------------===//

struct StoreGenOptions {
  int max_entities = 40;
  int max_triples = 120;
};

inline artree::kg::KgStore random_store(std::mt19937_64& rng,
                                        const StoreGenOptions& opt = {}) {
  using artree::kg::Attribute;
  using artree::kg::AttrValue;
  using artree::kg::Entity;
  using artree::kg::KgStore;

  static const std::vector<std::string> kNames = {
      "Alex Stone",  "Brook Hale",  "Casey Vega", "Dana Frost",
      "Eli Marsh",   "Flor Quinn",  "Gale North", "Harper Voss",
      "Iris Blum",   "Jude Carver", "Kit Sander", "Lane Piper"};
  static const std::vector<std::string> kConcepts = {
      "human", "city", "book", "athlete", "scientist", "river"};
  static const std::vector<std::string> kRelations = {
      "child", "author", "capital", "member", "part"};
  static const std::vector<std::string> kColors = {"red", "green", "blue"};

  auto pick = [&rng](const std::vector<std::string>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(
        0, pool.size() - 1)(rng)];
  };
  auto roll = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  KgStore store;
  int n = roll(3, opt.max_entities);
  for (int i = 0; i < n; ++i) {
    Entity e;
    e.id = "e" + std::to_string(i);
    e.label = pick(kNames);
    for (int a = roll(0, 2); a > 0; --a) e.aliases.push_back(pick(kNames));
    for (int c = roll(0, 3); c > 0; --c) e.concepts.push_back(pick(kConcepts));
    if (roll(0, 1)) {
      Attribute attr;
      attr.key = "height";
      attr.value.type = AttrValue::Type::number;
      attr.value.num = 150 + roll(0, 60);
      attr.value.unit = "cm";
      attr.value.display = std::to_string(static_cast<int>(attr.value.num)) +
                           " cm";
      e.attributes.push_back(attr);
    }
    if (roll(0, 1)) {
      Attribute attr;
      attr.key = "date of birth";
      attr.value.type = AttrValue::Type::date;
      int y = 1950 + roll(0, 10);
      int m = 1 + roll(0, 11);
      attr.value.iso = std::to_string(y) + "-" + (m < 10 ? "0" : "") +
                       std::to_string(m) + "-15";
      attr.value.display = attr.value.iso;
      e.attributes.push_back(attr);
    }
    if (roll(0, 1)) {
      Attribute attr;
      attr.key = "publication year";
      attr.value.type = AttrValue::Type::year;
      attr.value.year = 1950 + roll(0, 10);
      attr.value.display = std::to_string(attr.value.year);
      e.attributes.push_back(attr);
    }
    if (roll(0, 1)) {
      Attribute attr;
      attr.key = "color";
      attr.value.type = AttrValue::Type::string_;
      attr.value.display = pick(kColors);
      e.attributes.push_back(attr);
    }
    store.add_entity(std::move(e));
  }
  int m = roll(0, opt.max_triples);
  for (int i = 0; i < m; ++i) {
    artree::kg::Triple t;
    t.h = "e" + std::to_string(roll(0, n - 1));
    t.r = pick(kRelations);
    t.t = "e" + std::to_string(roll(0, n - 1));
    store.add_triple(std::move(t));
  }
  return store;
}

}  // namespace oracles
