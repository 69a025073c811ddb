#include "cfgdec/controller.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "cfgdec/error.hpp"

namespace cfgdec {

ContextSize ContextSize::of(std::size_t n) {
  if (n == 0) throw std::invalid_argument("context size must be positive");
  ContextSize c;
  c.limit_ = n;
  return c;
}

ContextSize ContextSize::parse(const std::string& text) {
  if (text == "inf" || text == "unbounded" || text == "UNBOUNDED") return unbounded();
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || ptr != text.data() + text.size() || n == 0) {
    throw std::invalid_argument("invalid context size '" + text + "' (expected a positive integer or 'inf')");
  }
  return of(n);
}

std::string ContextSize::str() const { return bounded() ? std::to_string(*limit_) : "inf"; }

void Context::push(int terminal) {
  window_.push_front(terminal);
  if (capacity_.bounded() && window_.size() > capacity_.limit()) window_.pop_back();
}

GenState initial_state(const Grammar& g, ContextSize capacity, std::size_t step_budget) {
  return GenState{{g.start()}, Context(capacity), {}, 0, step_budget};
}

void emit_terminal(GenState& state, int terminal) {
  state.emitted.push_front(terminal);
  state.context.push(terminal);
}

DecoderScorer::DecoderScorer(const neural::DecoderNet<Real>& decoder, const OutputSet& outputs, Vec encoding)
    : outputs_(&outputs), run_(decoder, std::move(encoding)) {
  if (decoder.output_count() != outputs.size()) {
    throw ModelMismatchError("decoder output size does not match the nonterminal's output set");
  }
}

void DecoderScorer::advance(std::optional<Symbol> previous) {
  int input = outputs_->size();  // <bos>
  if (previous) {
    auto idx = outputs_->index_of(*previous);
    if (!idx) throw ModelMismatchError("symbol missing from decoder output set");
    input = *idx;
  }
  probs_ = run_.feed(input);
}

double DecoderScorer::probability(const Symbol& s) const {
  auto idx = outputs_->index_of(s);
  if (!idx) throw ModelMismatchError("candidate symbol missing from decoder output set (model/grammar mismatch)");
  return probs_(*idx);
}

RuleChoice select_rule(const Grammar& g, std::span<const int> candidates, TailScorer& scorer) {
  if (candidates.empty()) throw std::invalid_argument("select_rule: no candidates");
  const int head = g.rule(candidates.front()).head;
  for (int r : candidates) {
    if (g.rule(r).head != head) throw std::invalid_argument("select_rule: candidates have different heads");
  }

  RuleChoice choice;
  std::vector<int> survivors(candidates.begin(), candidates.end());
  double rho = 0.0;
  std::optional<Symbol> previous;
  for (std::size_t j = 1;; ++j) {
    if (survivors.size() == 1) {
      choice.rule = survivors.front();
      return choice;
    }
    std::size_t longest = 0;
    for (int r : survivors) longest = std::max(longest, g.rule(r).size());
    if (j > longest) {
      // All survivors have length j-1 and share their first j-1 symbols;
      // distinct rules make that survivor unique.
      if (survivors.size() != 1) throw std::logic_error("select_rule: duplicate rules among candidates");
      choice.rule = survivors.front();
      return choice;
    }

    std::vector<Symbol> options;
    for (int r : survivors) {
      const Rule& rule = g.rule(r);
      if (rule.size() >= j && std::find(options.begin(), options.end(), rule.tail[j - 1]) == options.end()) {
        options.push_back(rule.tail[j - 1]);
      }
    }
    scorer.advance(previous);
    Symbol best = options.front();
    double best_p = scorer.probability(best);
    for (std::size_t k = 1; k < options.size(); ++k) {
      double p = scorer.probability(options[k]);
      if (p > best_p) {
        best = options[k];
        best_p = p;
      }
    }
    choice.steps.push_back({j, best, best_p});

    auto shorter = std::find_if(survivors.begin(), survivors.end(),
                                [&](int r) { return g.rule(r).size() == j - 1; });
    if (shorter != survivors.end() && best_p < rho) {
      choice.rule = *shorter;
      choice.stopped_early = true;
      return choice;
    }
    std::erase_if(survivors, [&](int r) {
      const Rule& rule = g.rule(r);
      return rule.size() < j || rule.tail[j - 1] != best;
    });
    rho = best_p;
    previous = best;
  }
}

Tokens generate_with(const Grammar& g, const ScorerFactory& scorer_for, ContextSize ctx, std::size_t step_budget,
                     GenerationTrace* trace) {
  GenState state = initial_state(g, ctx, step_budget);
  while (!state.stack.empty()) {
    if (state.step_count >= state.step_budget) throw BudgetExceededError(state.step_budget);
    const int x = state.stack.back();
    state.stack.pop_back();
    ++state.step_count;

    const std::vector<int>& candidates = g.rules_for(x);
    int rule_index = candidates.front();
    if (candidates.size() > 1) {
      std::unique_ptr<TailScorer> scorer = scorer_for(x, state.context);
      rule_index = select_rule(g, candidates, *scorer).rule;
    }
    if (trace) trace->steps.push_back({x, state.context.as_vector(), rule_index});

    const Rule& rule = g.rule(rule_index);
    if (rule.is_terminal_rule()) {
      emit_terminal(state, rule.tail.front().id);
    } else {
      for (const Symbol& s : rule.tail) state.stack.push_back(s.id);
    }
  }
  Tokens out;
  out.reserve(state.emitted.size());
  for (int t : state.emitted) out.push_back(g.terminal_name(t));
  return out;
}

Tokens generate(const CfgDecoderModel& model, const Grammar& g, std::span<const int> sentence, ContextSize ctx,
                std::size_t step_budget, GenerationTrace* trace) {
  model.check_grammar(g);
  if (sentence.empty()) throw std::invalid_argument("generate: empty sentence");
  auto factory = [&](int x, const Context& context) -> std::unique_ptr<TailScorer> {
    const Pair& pair = model.pair(x);
    std::vector<int> ctx_ids = model.vocab().context_ids(context.as_vector());
    Vec c = neural::encode(pair.encoder, sentence, ctx_ids);
    return std::make_unique<DecoderScorer>(pair.decoder, model.outputs(x), std::move(c));
  };
  return generate_with(g, factory, ctx, step_budget, trace);
}

Tokens generate(const CfgDecoderModel& model, const Grammar& g, const Tokens& sentence_words, ContextSize ctx,
                std::size_t step_budget, GenerationTrace* trace) {
  std::vector<int> ids = model.vocab().sentence_ids(sentence_words);
  return generate(model, g, ids, ctx, step_budget, trace);
}

Tokens generate_unconstrained(const BaselineModel& model, const Grammar& g, std::span<const int> sentence,
                              std::size_t max_len) {
  model.check_grammar(g);
  Tokens out;
  if (max_len == 0) return out;
  const Pair& pair = model.pair();
  neural::DecoderRun<Real> run(pair.decoder, neural::encode(pair.encoder, sentence, std::span<const int>{}));
  int prev = pair.decoder.bos();
  while (out.size() < max_len) {
    const Vec& p = run.feed(prev);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    if (static_cast<int>(best) == model.eos()) break;
    out.push_back(g.terminal_name(static_cast<int>(best)));
    prev = static_cast<int>(best);
  }
  return out;
}

}  // namespace cfgdec
