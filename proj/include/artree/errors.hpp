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

#include <stdexcept>
#include <string>

namespace artree {

// Every failure in the library is an Error tagged with one of these codes.
// Catch sites that need to distinguish outcomes (e.g. the engine's fallback
// branches) dispatch on code(); everything else just propagates.
enum class Errc {
  // plan parsing / validation
  schema,
  index,
  operator_call,
  placeholder,
  // operator expression parsing
  unknown_operator,
  arity,
  syntax,
  // placeholder substitution
  missing_answer,
  type_mismatch,
  // operator semantics
  empty_query,
  unsubstituted_placeholder,
  operator_execution_failure,
  // knowledge sources
  selection_parse,
  retriever_unavailable,
  predicate_parse,
  program_parse,
  all_sources_failed,
  unknown_entity,
  // llm gateway
  backend,
  budget_exceeded,
  script_gap,
  missing_slot,
  unknown_template,
  // engine
  engine_abort,
  // eval / io
  format,
  missing_prediction,
  empty_input,
  config,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::schema: return "SchemaError";
    case Errc::index: return "IndexError";
    case Errc::operator_call: return "OperatorError";
    case Errc::placeholder: return "PlaceholderError";
    case Errc::unknown_operator: return "UnknownOperator";
    case Errc::arity: return "ArityError";
    case Errc::syntax: return "SyntaxError";
    case Errc::missing_answer: return "MissingAnswer";
    case Errc::type_mismatch: return "TypeMismatch";
    case Errc::empty_query: return "EmptyQuery";
    case Errc::unsubstituted_placeholder: return "UnsubstitutedPlaceholder";
    case Errc::operator_execution_failure: return "OperatorExecutionFailure";
    case Errc::selection_parse: return "SelectionParseError";
    case Errc::retriever_unavailable: return "RetrieverUnavailable";
    case Errc::predicate_parse: return "PredicateParseError";
    case Errc::program_parse: return "ProgramParseError";
    case Errc::all_sources_failed: return "AllSourcesFailed";
    case Errc::unknown_entity: return "UnknownEntity";
    case Errc::backend: return "BackendError";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::script_gap: return "ScriptGap";
    case Errc::missing_slot: return "MissingSlot";
    case Errc::unknown_template: return "UnknownTemplate";
    case Errc::engine_abort: return "EngineAbort";
    case Errc::format: return "FormatError";
    case Errc::missing_prediction: return "MissingPrediction";
    case Errc::empty_input: return "EmptyInput";
    case Errc::config: return "ConfigError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace artree
