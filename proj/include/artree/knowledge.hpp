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
// Knowledge-source adapters ({kg, text, web}), dynamic source selection,
// and multi-source retrieval with a deterministic merge. Per-source failure
// degrades to omission; only a total failure of every selected source
// aborts the retrieval.
//===----------------------------------------------------------------------===//

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "artree/errors.hpp"
#include "artree/kg.hpp"
#include "artree/llm.hpp"
#include "artree/operators.hpp"
#include "artree/plan.hpp"
#include "artree/text.hpp"

namespace artree {
namespace knowledge {

enum class Source { kg, text, web };

inline const char* source_name(Source s) {
  switch (s) {
    case Source::kg: return "kg";
    case Source::text: return "text";
    case Source::web: return "web";
  }
  return "?";
}

inline std::optional<Source> source_from(const std::string& s) {
  std::string n = text::normalize_name(s);
  if (n == "kg") return Source::kg;
  if (n == "text") return Source::text;
  if (n == "web") return Source::web;
  return std::nullopt;
}

struct Passage {
  Source source = Source::text;
  std::string title_or_uri;
  std::string body;  // non-empty
  double score = 0.0;
  int rank = 0;  // 1-based, unique per (source, query)

  std::string id() const {
    return std::string(source_name(source)) + ":" + std::to_string(rank) +
           ":" + text::digest(title_or_uri + "\n" + body).substr(0, 8);
  }
};

struct RetrievalBundle {
  std::map<std::string, std::string> query_per_source;
  std::vector<Passage> passages;  // merge order: kg, text, web; rank asc
  std::optional<std::string> kg_answer;

  bool empty() const {
    return passages.empty() && (!kg_answer || kg_answer->empty());
  }

  // Evidence block rendered into prompts.
  std::string render() const {
    std::vector<std::string> lines;
    if (kg_answer && !kg_answer->empty()) {
      lines.push_back("[kg answer] " + *kg_answer);
    }
    for (const auto& p : passages) {
      lines.push_back("[" + std::string(source_name(p.source)) + ":" +
                      std::to_string(p.rank) + "] " + p.title_or_uri + ": " +
                      p.body);
    }
    return text::join(lines, "\n");
  }

  std::vector<std::string> passage_ids() const {
    std::vector<std::string> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(p.id());
    return out;
  }
};

//===----------------------------------------------------------------------===//
// Text retrieval
//===----------------------------------------------------------------------===//

class TextRetriever {
 public:
  virtual ~TextRetriever() = default;
  virtual std::vector<Passage> retrieve(const std::string& query, int k) = 0;
};

// Zero-dependency default: term-frequency scoring over a directory of .txt
// documents. score(q, d) = sum over distinct query tokens of tf/|d|. Ties
// break on title so ranking is total.
class LocalTfRetriever : public TextRetriever {
 public:
  explicit LocalTfRetriever(const std::string& corpus_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(corpus_dir)) {
      fail(Errc::retriever_unavailable,
           "corpus directory '" + corpus_dir + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(corpus_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string body((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      body = text::trim(body);
      if (body.empty()) continue;
      Doc d;
      d.title = f.stem().string();
      d.body = body;
      for (const auto& t : text::tokenize(body)) ++d.tf[t];
      d.length = 0;
      for (const auto& [tok, n] : d.tf) d.length += n;
      docs_.push_back(std::move(d));
    }
  }

  std::vector<Passage> retrieve(const std::string& query, int k) override {
    if (k <= 0) return {};
    auto qtoks = text::token_set(query);
    std::vector<std::pair<double, const Doc*>> scored;
    for (const auto& d : docs_) {
      double s = 0.0;
      for (const auto& t : qtoks) {
        auto it = d.tf.find(t);
        if (it != d.tf.end()) {
          s += static_cast<double>(it->second) /
               static_cast<double>(d.length);
        }
      }
      if (s > 0.0) scored.emplace_back(s, &d);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second->title < b.second->title;
              });
    std::vector<Passage> out;
    for (std::size_t i = 0;
         i < scored.size() && i < static_cast<std::size_t>(k); ++i) {
      Passage p;
      p.source = Source::text;
      p.title_or_uri = scored[i].second->title;
      p.body = scored[i].second->body;
      p.score = scored[i].first;
      p.rank = static_cast<int>(i) + 1;
      out.push_back(std::move(p));
    }
    return out;
  }

  std::size_t corpus_size() const { return docs_.size(); }

 private:
  struct Doc {
    std::string title;
    std::string body;
    std::map<std::string, long> tf;
    long length = 0;
  };
  std::vector<Doc> docs_;
};

// Remote retriever speaking {"query": str, "k": int} -> ranked
// [{"title","text","score"}] (a {"results": [...]} wrapper is accepted).
class HttpTextRetriever : public TextRetriever {
 public:
  explicit HttpTextRetriever(const std::string& endpoint) {
    auto split = llm::detail::split_url(endpoint);
    origin_ = split.origin;
    path_ = split.path;
  }

  std::vector<Passage> retrieve(const std::string& query, int k) override {
    if (k <= 0) return {};
    nlohmann::json body;
    body["query"] = query;
    body["k"] = k;
    httplib::Client cli(origin_);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(60, 0);
    auto res = cli.Post(path_, body.dump(), "application/json");
    if (!res || res->status != 200) {
      fail(Errc::retriever_unavailable,
           "text retriever at " + origin_ + path_ +
               (res ? " returned status " + std::to_string(res->status)
                    : " is unreachable"));
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::retriever_unavailable,
           std::string("text retriever sent malformed JSON: ") + e.what());
    }
    const nlohmann::json& arr =
        doc.is_object() && doc.contains("results") ? doc["results"] : doc;
    if (!arr.is_array()) {
      fail(Errc::retriever_unavailable,
           "text retriever response is not a list");
    }
    std::vector<Passage> out;
    for (const auto& r : arr) {
      if (out.size() >= static_cast<std::size_t>(k)) break;
      Passage p;
      p.source = Source::text;
      p.title_or_uri = r.value("title", "");
      p.body = r.value("text", "");
      p.score = r.value("score", 0.0);
      if (p.body.empty()) continue;
      p.rank = static_cast<int>(out.size()) + 1;
      out.push_back(std::move(p));
    }
    return out;
  }

 private:
  std::string origin_;
  std::string path_;
};

//===----------------------------------------------------------------------===//
// Web search
//===----------------------------------------------------------------------===//

class WebSearcher {
 public:
  virtual ~WebSearcher() = default;
  virtual std::vector<Passage> search(const std::string& query, int k) = 0;
};

namespace detail {

// SERP-style payload: {"organic_results": [{"title","link","snippet"}]}.
inline std::vector<Passage> parse_serp(const nlohmann::json& doc, int k) {
  std::vector<Passage> out;
  if (!doc.is_object() || !doc.contains("organic_results")) return out;
  for (const auto& r : doc["organic_results"]) {
    if (out.size() >= static_cast<std::size_t>(std::max(0, k))) break;
    Passage p;
    p.source = Source::web;
    std::string link = r.value("link", "");
    p.title_or_uri = link.empty() ? r.value("title", "") : link;
    p.body = r.value("snippet", "");
    if (p.body.empty()) p.body = r.value("title", "");
    if (p.body.empty()) continue;
    p.rank = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

// Live search API client. The key travels as a query parameter read from an
// environment variable, SERP-style.
class HttpWebSearcher : public WebSearcher {
 public:
  HttpWebSearcher(const std::string& base_url, std::string api_key_env)
      : api_key_env_(std::move(api_key_env)) {
    auto split = llm::detail::split_url(base_url);
    origin_ = split.origin;
    path_ = split.path;
  }

  std::vector<Passage> search(const std::string& query, int k) override {
    if (k <= 0) return {};
    httplib::Client cli(origin_);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(60, 0);
    httplib::Params params{{"q", query}, {"num", std::to_string(k)}};
    if (!api_key_env_.empty()) {
      if (const char* key = std::getenv(api_key_env_.c_str())) {
        params.emplace("api_key", key);
      }
    }
    auto res = cli.Get(path_, params, httplib::Headers{});
    if (!res || res->status != 200) {
      fail(Errc::retriever_unavailable,
           "web search at " + origin_ +
               (res ? " returned status " + std::to_string(res->status)
                    : " is unreachable"));
    }
    try {
      return detail::parse_serp(nlohmann::json::parse(res->body), k);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::retriever_unavailable,
           std::string("web search sent malformed JSON: ") + e.what());
    }
  }

 private:
  std::string origin_;
  std::string path_;
  std::string api_key_env_;
};

// Offline replay: one stored SERP response per query digest. With an inner
// searcher attached, misses pass through and are recorded.
class RecordedWebSearcher : public WebSearcher {
 public:
  explicit RecordedWebSearcher(std::string dir,
                               std::shared_ptr<WebSearcher> inner = nullptr)
      : dir_(std::move(dir)), inner_(std::move(inner)) {}

  std::vector<Passage> search(const std::string& query, int k) override {
    const auto file =
        std::filesystem::path(dir_) / (text::digest(query) + ".json");
    std::ifstream in(file);
    if (in) {
      try {
        nlohmann::json doc;
        in >> doc;
        return detail::parse_serp(doc, k);
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::format, file.string() + ": " + e.what());
      }
    }
    if (!inner_) {
      fail(Errc::retriever_unavailable,
           "no recorded web response for query '" + query + "' (digest " +
               text::digest(query) + ")");
    }
    auto passages = inner_->search(query, k);
    nlohmann::json doc;
    doc["organic_results"] = nlohmann::json::array();
    for (const auto& p : passages) {
      doc["organic_results"].push_back(
          {{"title", p.title_or_uri}, {"link", p.title_or_uri},
           {"snippet", p.body}});
    }
    std::filesystem::create_directories(dir_);
    std::ofstream o(file);
    o << doc.dump(2);
    return passages;
  }

 private:
  std::string dir_;
  std::shared_ptr<WebSearcher> inner_;
};

//===----------------------------------------------------------------------===//
// KG query path
//===----------------------------------------------------------------------===//

struct KgQueryResult {
  std::optional<std::string> answer;      // serialized "a; b; c"
  std::vector<std::string> profile_ids;   // entities whose profiles back it
};

// Symbolic execution of a substituted operator invocation against the store.
// Search/Relate run entirely symbolically. Filter runs symbolically only
// when its condition parses in the predicate grammar; otherwise the store
// contributes entity profiles and leaves the filtering to the LLM executor.
inline KgQueryResult query_kg_from_spec(const kg::KgStore& store,
                                        const plan::OperatorSpec& spec) {
  KgQueryResult out;
  auto arg_text = [](const plan::Arg& a) {
    return a.kind == plan::Arg::Kind::literal ? a.value : std::string();
  };
  switch (spec.op) {
    case plan::OpName::search: {
      std::optional<std::string> desc;
      if (spec.args.size() > 1) desc = arg_text(spec.args[1]);
      auto ids = kg::kg_search(store, arg_text(spec.args[0]), desc);
      out.profile_ids = ids;
      out.answer = kg::serialize_labels(store, ids);
      return out;
    }
    case plan::OpName::relate: {
      auto heads = kg::kg_search(store, arg_text(spec.args[0]));
      if (heads.empty()) {
        out.answer = "";
        return out;
      }
      out.profile_ids = {heads.front()};
      out.answer = kg::serialize_kg_answer(
          kg::kg_relate(store, heads.front(), arg_text(spec.args[1])));
      return out;
    }
    case plan::OpName::filter: {
      std::vector<std::string> ids;
      for (const auto& name : ops::filter_entities(spec)) {
        auto found = kg::kg_search(store, name);
        if (!found.empty()) ids.push_back(found.front());
      }
      out.profile_ids = ids;
      std::string condition =
          spec.args.size() > 1 ? arg_text(spec.args[1]) : "";
      try {
        out.answer = kg::serialize_labels(
            store, kg::kg_filter(store, ids, condition));
      } catch (const Error& e) {
        if (e.code() != Errc::predicate_parse) throw;
        // natural-language condition: evidence only, no symbolic answer
      }
      return out;
    }
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Broker
//===----------------------------------------------------------------------===//

struct RetrievalRequest {
  std::string question;  // substituted sub-question (context for kg program)
  std::string query;     // textual retrieval query for text/web

  enum class KgMode {
    none,     // kg contributes nothing even if selected
    spec,     // symbolic execution of `spec`
    profile,  // one entity profile lookup by name (`entity`)
    program,  // LLM-emitted one-step program from `question`
  };
  KgMode kg_mode = KgMode::program;
  const plan::OperatorSpec* spec = nullptr;
  std::string entity;
};

struct BrokerOptions {
  std::set<Source> configured;
  int k = 3;
};

// Owns nothing but wiring: the store, retriever and searcher are shared,
// immutable-after-setup adapters.
class KnowledgeBroker {
 public:
  KnowledgeBroker(BrokerOptions opts, const kg::KgStore* store,
                  std::shared_ptr<TextRetriever> text_retriever,
                  std::shared_ptr<WebSearcher> web_searcher,
                  std::shared_ptr<llm::Gateway> gateway)
      : opts_(std::move(opts)),
        store_(store),
        text_(std::move(text_retriever)),
        web_(std::move(web_searcher)),
        gateway_(std::move(gateway)) {
    if (opts_.configured.empty()) {
      fail(Errc::config, "no knowledge sources configured");
    }
  }

  const BrokerOptions& options() const { return opts_; }
  const kg::KgStore* store() const { return store_; }

  // Single configured source short-circuits without an LLM call. A reply
  // that names no configured source degrades to all configured sources.
  std::set<Source> select_sources(const std::string& subquestion,
                                  llm::Counters& counters) const {
    if (opts_.configured.size() == 1 || !gateway_) return opts_.configured;
    std::vector<std::string> names;
    for (Source s : opts_.configured) names.push_back(source_name(s));
    llm::CompletionResult res = gateway_->complete(
        prompts::Id::source_selection,
        {{"question", subquestion}, {"sources", text::join(names, ", ")}},
        counters, llm::CallKind::selection);
    std::set<Source> picked;
    std::string token;
    auto flush = [&]() {
      if (token.empty()) return;
      if (auto s = source_from(token)) {
        if (opts_.configured.count(*s)) picked.insert(*s);
      }
      token.clear();
    };
    for (char c : res.response) {
      if (c == ',' || c == ';' || c == '\n') {
        flush();
      } else {
        token.push_back(c);
      }
    }
    flush();
    return picked.empty() ? opts_.configured : picked;
  }

  // Retrieves one query across the selected sources and merges kg -> text ->
  // web, rank ascending. Individual source failures degrade to omission and
  // are reported in the bundle only through absence; when every selected
  // source fails the retrieval as a whole fails.
  RetrievalBundle retrieve(const RetrievalRequest& req,
                           const std::set<Source>& sources,
                           llm::Counters& counters) const {
    RetrievalBundle bundle;
    int succeeded = 0;
    int attempted = 0;
    std::string first_error;
    auto attempt = [&](Source s, auto&& fn) {
      if (!sources.count(s) || !opts_.configured.count(s)) return;
      ++attempted;
      try {
        fn();
        ++succeeded;
      } catch (const Error& e) {
        if (e.code() == Errc::budget_exceeded) throw;
        if (first_error.empty()) first_error = e.what();
      }
    };

    attempt(Source::kg, [&] { retrieve_kg(req, bundle, counters); });
    attempt(Source::text, [&] {
      if (!text_) fail(Errc::retriever_unavailable, "no text retriever");
      counters.count_retrieval("text");
      bundle.query_per_source["text"] = req.query;
      for (auto& p : text_->retrieve(req.query, opts_.k)) {
        bundle.passages.push_back(std::move(p));
      }
    });
    attempt(Source::web, [&] {
      if (!web_) fail(Errc::retriever_unavailable, "no web searcher");
      counters.count_retrieval("web");
      bundle.query_per_source["web"] = req.query;
      for (auto& p : web_->search(req.query, opts_.k)) {
        bundle.passages.push_back(std::move(p));
      }
    });

    if (attempted > 0 && succeeded == 0) {
      fail(Errc::all_sources_failed,
           "every selected source failed; first error: " + first_error);
    }
    return bundle;
  }

 private:
  void retrieve_kg(const RetrievalRequest& req, RetrievalBundle& bundle,
                   llm::Counters& counters) const {
    if (!store_) fail(Errc::retriever_unavailable, "no kg store");
    if (req.kg_mode == RetrievalRequest::KgMode::none) return;
    counters.count_retrieval("kg");
    KgQueryResult result;
    switch (req.kg_mode) {
      case RetrievalRequest::KgMode::spec:
        if (!req.spec) fail(Errc::empty_query, "kg spec mode without spec");
        bundle.query_per_source["kg"] = plan::to_string(*req.spec);
        result = query_kg_from_spec(*store_, *req.spec);
        break;
      case RetrievalRequest::KgMode::profile: {
        bundle.query_per_source["kg"] = req.entity;
        auto ids = kg::kg_search(*store_, req.entity);
        if (!ids.empty()) result.profile_ids = {ids.front()};
        break;
      }
      case RetrievalRequest::KgMode::program: {
        if (!gateway_) {
          fail(Errc::retriever_unavailable,
               "kg program mode needs an LLM gateway");
        }
        bundle.query_per_source["kg"] = req.question;
        std::vector<llm::ChatMessage> msgs{
            {"system",
             "Translate the question into exactly one knowledge-graph call "
             "and output it alone on one line:\n"
             "search(\"name\"[, \"descriptor\"]) | relate(entity, "
             "\"relation or attribute\") | filter([entity, ...], \"<key> "
             "(= | < | > | within) <value>\")\n"
             "Entities may be ids or names. Do not explain.\n\n"
             "Example 1:\nQuestion: Who are the children of Barack Obama?\n"
             "Call: relate(\"Barack Obama\", \"child\")\n\n"
             "Example 2:\nQuestion: Which of Steve Jobs and Bill Gates was "
             "born in 1955?\nCall: filter([\"Steve Jobs\", \"Bill Gates\"], "
             "\"date of birth within 1955\")"},
            {"user", "Question: " + req.question + "\nCall:"}};
        llm::CompletionResult res =
            gateway_->complete_raw(std::move(msgs), "kg_program", counters,
                                   llm::CallKind::kg_parse);
        std::string program = text::trim(res.response);
        if (!program.empty()) {
          std::size_t nl = program.rfind('\n');
          if (nl != std::string::npos) program = program.substr(nl + 1);
        }
        result.answer = kg::execute_program(*store_, text::trim(program));
        break;
      }
      case RetrievalRequest::KgMode::none:
        return;
    }
    if (result.answer) bundle.kg_answer = result.answer;
    int rank = 0;
    for (const auto& id : result.profile_ids) {
      if (rank >= opts_.k) break;
      std::string profile = kg::entity_profile(*store_, id);
      if (profile.empty()) continue;
      Passage p;
      p.source = Source::kg;
      p.title_or_uri = store_->label(id);
      p.body = std::move(profile);
      p.rank = ++rank;
      bundle.passages.push_back(std::move(p));
    }
  }

  BrokerOptions opts_;
  const kg::KgStore* store_;
  std::shared_ptr<TextRetriever> text_;
  std::shared_ptr<WebSearcher> web_;
  std::shared_ptr<llm::Gateway> gateway_;
};

}  // namespace knowledge
}  // namespace artree
