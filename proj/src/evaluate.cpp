#include "cfgdec/evaluate.hpp"

#include <cstdio>
#include <sys/wait.h>

#include "cfgdec/earley.hpp"
#include "cfgdec/error.hpp"

namespace cfgdec {

void Metrics::add(bool matches_gold, bool syntactically_valid) {
  ++total;
  if (!syntactically_valid) {
    ++syntax_errors;
  } else if (matches_gold) {
    ++correct;
  }
}

Metrics& Metrics::operator+=(const Metrics& other) {
  total += other.total;
  correct += other.correct;
  syntax_errors += other.syntax_errors;
  return *this;
}

bool exact_match(const Tokens& a, const Tokens& b) {
  return split_tokens(join_tokens(a)) == split_tokens(join_tokens(b));
}

SyntaxValidator grammar_validator(const Grammar& g) {
  return [&g](const Tokens& q) { return accepts(g, q); };
}

SyntaxValidator shell_validator(std::string command) {
  return [command = std::move(command)](const Tokens& q) {
    FILE* pipe = ::popen(command.c_str(), "w");
    if (!pipe) throw Error("cannot run validator '" + command + "'");
    std::string line = join_tokens(q) + "\n";
    std::fwrite(line.data(), 1, line.size(), pipe);
    int status = ::pclose(pipe);
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
}

Metrics evaluate(const CfgDecoderModel& model, const Grammar& g, const std::vector<Example>& examples, ContextSize ctx,
                 const SyntaxValidator& valid, std::size_t step_budget) {
  model.check_grammar(g);
  SyntaxValidator check = valid ? valid : grammar_validator(g);
  Metrics m;
  for (const Example& ex : examples) {
    try {
      Tokens out = generate(model, g, ex.source, ctx, step_budget);
      m.add(exact_match(out, ex.target), check(out));
    } catch (const BudgetExceededError&) {
      m.add(false, false);
    }
  }
  return m;
}

Metrics evaluate_baseline(const BaselineModel& model, const Grammar& g, const std::vector<Example>& examples,
                          std::size_t max_len, const SyntaxValidator& valid) {
  model.check_grammar(g);
  SyntaxValidator check = valid ? valid : grammar_validator(g);
  Metrics m;
  for (const Example& ex : examples) {
    std::vector<int> ids = model.vocab().sentence_ids(ex.source);
    Tokens out = generate_unconstrained(model, g, ids, max_len);
    m.add(exact_match(out, ex.target), check(out));
  }
  return m;
}

}  // namespace cfgdec
