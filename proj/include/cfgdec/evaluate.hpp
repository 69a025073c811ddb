#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cfgdec/controller.hpp"
#include "cfgdec/corpus.hpp"
#include "cfgdec/grammar.hpp"
#include "cfgdec/model.hpp"

namespace cfgdec {

struct Metrics {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t syntax_errors = 0;

  // A syntactically invalid output is never counted as correct.
  void add(bool matches_gold, bool syntactically_valid);
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  double syn_error_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(syntax_errors) / static_cast<double>(total);
  }
  Metrics& operator+=(const Metrics& other);
};

// Token-level exact match after whitespace normalization.
bool exact_match(const Tokens& a, const Tokens& b);

// Returns true if the query is syntactically valid.
using SyntaxValidator = std::function<bool(const Tokens&)>;

// Validity as membership in L(g), decided by the Earley recognizer.
SyntaxValidator grammar_validator(const Grammar& g);

// Pipes the query (one line) into `command` via the shell; exit status 0 means
// valid.
SyntaxValidator shell_validator(std::string command);

Metrics evaluate(const CfgDecoderModel& model, const Grammar& g, const std::vector<Example>& examples, ContextSize ctx,
                 const SyntaxValidator& valid = {}, std::size_t step_budget = kDefaultStepBudget);

Metrics evaluate_baseline(const BaselineModel& model, const Grammar& g, const std::vector<Example>& examples,
                          std::size_t max_len, const SyntaxValidator& valid = {});

}  // namespace cfgdec
