#include <gtest/gtest.h>

#include "cfgdec/evaluate.hpp"
#include "cfgdec/trainer.hpp"
#include "test_support.hpp"

using namespace cfgdec;

namespace {

Grammar example() { return load_grammar_file(test::data_path("grammars/example.cfg")); }

}  // namespace

TEST(Metrics, SyntaxErrorsAreNeverCorrect) {
  Metrics m;
  m.add(true, true);
  m.add(true, false);
  m.add(false, true);
  m.add(false, false);
  EXPECT_EQ(m.total, 4u);
  EXPECT_EQ(m.correct, 1u);
  EXPECT_EQ(m.syntax_errors, 2u);
  EXPECT_DOUBLE_EQ(m.accuracy(), 0.25);
  EXPECT_DOUBLE_EQ(m.syn_error_rate(), 0.5);
  EXPECT_EQ(Metrics{}.accuracy(), 0.0);
  Metrics sum;
  sum += m;
  sum += m;
  EXPECT_EQ(sum.total, 8u);
  EXPECT_LE(sum.correct + sum.syntax_errors, sum.total);
}

TEST(ExactMatch, TokenLevel) {
  EXPECT_TRUE(exact_match({"a", "b"}, {"a", "b"}));
  EXPECT_TRUE(exact_match({"a b"}, {"a", "b"}));
  EXPECT_FALSE(exact_match({"a"}, {"a", "b"}));
  EXPECT_FALSE(exact_match({"A"}, {"a"}));
}

TEST(Validators, GrammarAndShell) {
  const Grammar g = example();
  auto valid = grammar_validator(g);
  EXPECT_TRUE(valid(split_tokens(test::kExampleQuery)));
  EXPECT_FALSE(valid({"SELECT"}));
  EXPECT_TRUE(shell_validator("grep -q SELECT")({"SELECT", "x"}));
  EXPECT_FALSE(shell_validator("grep -q SELECT")({"x"}));
  EXPECT_FALSE(shell_validator("exit 3")({"x"}));
}

TEST(Evaluate, ConstrainedModelHasNoSyntaxErrors) {
  const Grammar g = example();
  const auto pairs = synthesize_exhaustive(g, load_templates_file(test::data_path("templates/example.tpl")), 1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CfgDecoderModel m(g, build_source_vocabulary(pairs), {6, 5, 0.5}, seed);
    Metrics r = evaluate(m, g, pairs, ContextSize::of(2));
    EXPECT_EQ(r.total, 64u);
    EXPECT_EQ(r.syntax_errors, 0u);
  }
}

TEST(Evaluate, OverfitModelIsPerfect) {
  const Grammar g = example();
  auto pairs = synthesize_exhaustive(g, load_templates_file(test::data_path("templates/example.tpl")), 1);
  pairs.resize(8);
  TrainConfig cfg;
  cfg.hidden_dim = 32;
  cfg.embed_dim = 32;
  cfg.init_scale = 0.5;
  CfgDecoderModel m(g, build_source_vocabulary(pairs), cfg.dims(), 4);
  train(m, g, pairs, cfg);
  Metrics r = evaluate(m, g, pairs, ContextSize::unbounded());
  EXPECT_EQ(r.correct, 8u);
  EXPECT_DOUBLE_EQ(r.accuracy(), 1.0);
}

TEST(Evaluate, BudgetExhaustionCountsAsSyntaxError) {
  const Grammar g = load_grammar_file(test::data_path("grammars/chain.cfg"));
  const auto pairs = synthesize(g, load_templates_file(test::data_path("templates/chain.tpl")), 10, 2);
  CfgDecoderModel m(g, build_source_vocabulary(pairs), {4, 3}, 1);
  Metrics r = evaluate(m, g, pairs, ContextSize::unbounded(), {}, 1);
  EXPECT_EQ(r.total, 10u);
  EXPECT_EQ(r.syntax_errors, 10u);
  EXPECT_EQ(r.correct, 0u);
}

TEST(EvaluateBaseline, EmptyOutputIsASyntaxError) {
  const Grammar g = example();
  const auto pairs = synthesize_exhaustive(g, load_templates_file(test::data_path("templates/example.tpl")), 1);
  BaselineModel b(g, build_source_vocabulary(pairs), {6, 5}, 1);
  Metrics r = evaluate_baseline(b, g, pairs, 0);
  EXPECT_EQ(r.syntax_errors, 64u);
  EXPECT_EQ(r.correct, 0u);
}
