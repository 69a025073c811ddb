#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfgdec/grammar.hpp"
#include "cfgdec/model.hpp"

namespace cfgdec {

// Capacity of the context window: a positive count or unbounded.
class ContextSize {
 public:
  static ContextSize unbounded() { return ContextSize(); }
  static ContextSize of(std::size_t n);
  // "inf" / "unbounded" or a positive integer.
  static ContextSize parse(const std::string& text);

  bool bounded() const { return limit_.has_value(); }
  std::size_t limit() const { return *limit_; }
  std::string str() const;

  friend bool operator==(const ContextSize&, const ContextSize&) = default;

 private:
  ContextSize() = default;
  std::optional<std::size_t> limit_;
};

// The most recently emitted terminals, newest first. The encoder reads it in
// this order, which is also the order the terminals take in the final query.
class Context {
 public:
  explicit Context(ContextSize capacity) : capacity_(capacity) {}

  void push(int terminal);
  const std::deque<int>& window() const { return window_; }
  std::vector<int> as_vector() const { return {window_.begin(), window_.end()}; }
  ContextSize capacity() const { return capacity_; }

 private:
  ContextSize capacity_;
  std::deque<int> window_;
};

struct GenState {
  std::vector<int> stack;  // pending nonterminals, top at back()
  Context context;
  std::deque<int> emitted;  // terminal ids, built right to left
  std::size_t step_count = 0;
  std::size_t step_budget = 0;
};

inline constexpr std::size_t kDefaultStepBudget = 10'000;

GenState initial_state(const Grammar& g, ContextSize capacity, std::size_t step_budget = kDefaultStepBudget);

// Prepends t to the output and makes it the newest context element, evicting
// the oldest one when the window is full.
void emit_terminal(GenState& state, int terminal);

// Probabilities of the symbols at successive tail positions. advance() moves
// to the next position given the symbol chosen at the previous one (nullopt at
// the first position); probability() then scores candidates at that position.
class TailScorer {
 public:
  virtual ~TailScorer() = default;
  virtual void advance(std::optional<Symbol> previous) = 0;
  virtual double probability(const Symbol& s) const = 0;
};

// Scores with a trained decoder D_X. Throws ModelMismatchError when asked
// about a symbol outside its output set.
class DecoderScorer final : public TailScorer {
 public:
  DecoderScorer(const neural::DecoderNet<Real>& decoder, const OutputSet& outputs, Vec encoding);
  void advance(std::optional<Symbol> previous) override;
  double probability(const Symbol& s) const override;

 private:
  const OutputSet* outputs_;
  neural::DecoderRun<Real> run_;
  Vec probs_;
};

struct RuleChoice {
  struct Step {
    std::size_t position;  // 1-based j
    Symbol chosen;
    double probability;  // rho_+
  };
  int rule = -1;
  std::vector<Step> steps;
  bool stopped_early = false;  // chose a shorter rule because rho_+ < rho
};

// Greedy tail-by-tail narrowing of the candidate rules (all headed by the same
// nonterminal, in file order) until exactly one remains. See docs/algorithm.md.
RuleChoice select_rule(const Grammar& g, std::span<const int> candidates, TailScorer& scorer);

struct GenerationTrace {
  struct Step {
    int nonterminal;
    std::vector<int> context;  // window at the time X was expanded, newest first
    int rule;
  };
  std::vector<Step> steps;
};

// Returns the scorer for expanding `nonterminal` under the current context.
using ScorerFactory = std::function<std::unique_ptr<TailScorer>(int nonterminal, const Context& context)>;

// Stack-driven generation: pop X, pick one of X's rules, push a nonterminal
// tail left to right or emit a terminal, until the stack is empty. The result
// is always a string of L(g). Throws BudgetExceededError after step_budget
// expansions.
Tokens generate_with(const Grammar& g, const ScorerFactory& scorer_for, ContextSize ctx,
                     std::size_t step_budget = kDefaultStepBudget, GenerationTrace* trace = nullptr);

Tokens generate(const CfgDecoderModel& model, const Grammar& g, std::span<const int> sentence, ContextSize ctx,
                std::size_t step_budget = kDefaultStepBudget, GenerationTrace* trace = nullptr);
Tokens generate(const CfgDecoderModel& model, const Grammar& g, const Tokens& sentence_words, ContextSize ctx,
                std::size_t step_budget = kDefaultStepBudget, GenerationTrace* trace = nullptr);

// Greedy argmax decoding over the full terminal vocabulary until <eos> or
// max_len symbols. No grammaticality guarantee.
Tokens generate_unconstrained(const BaselineModel& model, const Grammar& g, std::span<const int> sentence,
                              std::size_t max_len);

}  // namespace cfgdec
