#include <gtest/gtest.h>

#include <random>
#include <string>

#include "cfgdec/error.hpp"
#include "cfgdec/grammar.hpp"
#include "test_support.hpp"

using namespace cfgdec;

namespace {

GrammarError::Kind error_kind(const std::string& text) {
  try {
    load_grammar(text);
  } catch (const GrammarError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no GrammarError for:\n" << text;
  return GrammarError::Kind::kSyntax;
}

}  // namespace

TEST(LoadGrammar, ExampleGrammarCounts) {
  const Grammar g = load_grammar_file(test::data_path("grammars/example.cfg"));
  EXPECT_EQ(g.nonterminal_count(), 12u);
  EXPECT_EQ(g.terminal_count(), 9u);
  EXPECT_EQ(g.rule_count(), 15u);
  EXPECT_EQ(g.nonterminal_name(g.start()), "S");
  const std::vector<std::string> expected{"S", "C", "CT", "T", "Dot", "BL", "BR", "SE", "VA", "J", "P", "O"};
  EXPECT_EQ(g.nonterminal_names(), expected);
}

TEST(LoadGrammar, MinimalGrammar) {
  const Grammar g = load_grammar("S -> \"t\"\n");
  EXPECT_EQ(g.nonterminal_count(), 1u);
  EXPECT_EQ(g.terminal_count(), 1u);
  ASSERT_EQ(g.rule_count(), 1u);
  EXPECT_TRUE(g.rule(0).is_terminal_rule());
}

TEST(LoadGrammar, RulesForInFileOrder) {
  const Grammar g = load_grammar_file(test::data_path("grammars/example.cfg"));
  const auto& p = g.rules_for("P");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(g.render_rule(p[0]), "P -> \"p:area\"");
  EXPECT_EQ(g.render_rule(p[1]), "P -> \"p:has_capital\"");
  const auto& s = g.rules_for("S");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(g.render_rule(s[0]), "S -> C BL CT BR");
  EXPECT_THROW(g.rules_for("Nope"), std::out_of_range);
}

TEST(LoadGrammar, CommentsStartDirectiveAndEscapes) {
  const Grammar g = load_grammar(
      "# leading comment\n"
      "%start B\n"
      "A -> \"a\"   # trailing\n"
      "B -> A Q\n"
      "Q -> \"\\\"q\\\\\"\n");
  EXPECT_EQ(g.nonterminal_name(g.start()), "B");
  EXPECT_EQ(g.terminal_name(1), "\"q\\");
}

TEST(LoadGrammar, Errors) {
  EXPECT_EQ(error_kind("S -> C BL \"{\"\nC -> \"c\"\nBL -> \"b\"\n"), GrammarError::Kind::kMixedTail);
  EXPECT_EQ(error_kind("S -> A\n"), GrammarError::Kind::kUndeclaredSymbol);
  EXPECT_EQ(error_kind("S -> \"t\"\nS -> \"t\"\n"), GrammarError::Kind::kDuplicateRule);
  EXPECT_EQ(error_kind("S -> A\nA -> A\n"), GrammarError::Kind::kDeadNonterminal);
  EXPECT_EQ(error_kind("%start X\nS -> \"t\"\n"), GrammarError::Kind::kMissingStart);
  EXPECT_EQ(error_kind("S -> \"a\" \"b\"\n"), GrammarError::Kind::kMixedTail);
  EXPECT_EQ(error_kind("S ->\n"), GrammarError::Kind::kSyntax);
  EXPECT_EQ(error_kind("S \"t\"\n"), GrammarError::Kind::kSyntax);
  EXPECT_EQ(error_kind("S -> \"unterminated\n"), GrammarError::Kind::kSyntax);
  EXPECT_EQ(error_kind("# nothing\n"), GrammarError::Kind::kMissingStart);
}

TEST(LoadGrammar, ErrorsCarryLineNumbers) {
  try {
    load_grammar("S -> A\nA -> \"a\"\nA -> B \"x\"\n");
    FAIL();
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadGrammar, MissingFile) { EXPECT_THROW(load_grammar_file("/nonexistent.cfg"), Error); }

TEST(RenderGrammar, RoundTripsExamples) {
  for (const char* name : {"grammars/example.cfg", "grammars/sparql_frag.cfg", "grammars/lexical.cfg",
                           "grammars/chain.cfg"}) {
    const Grammar g = load_grammar_file(test::data_path(name));
    EXPECT_EQ(load_grammar(render_grammar(g)), g) << name;
    EXPECT_EQ(grammar_hash(load_grammar(render_grammar(g))), grammar_hash(g));
  }
}

TEST(RenderGrammar, RoundTripsRandomGrammars) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Grammar g = test::random_grammar(rng);
    const Grammar back = load_grammar(render_grammar(g));
    ASSERT_EQ(back, g) << render_grammar(g);
  }
}

TEST(GrammarHash, DistinguishesGrammars) {
  const Grammar a = load_grammar_file(test::data_path("grammars/example.cfg"));
  const Grammar b = load_grammar_file(test::data_path("grammars/sparql_frag.cfg"));
  EXPECT_NE(grammar_hash(a), grammar_hash(b));
}

TEST(Yield, ExampleTree) {
  const Grammar g = load_grammar_file(test::data_path("grammars/example.cfg"));
  const ParseTree tree = test::example_tree(g);
  EXPECT_EQ(check_tree(g, tree), std::nullopt);
  EXPECT_EQ(join_tokens(yield_of(g, tree)), test::kExampleQuery);
  EXPECT_EQ(yield_of(g, tree).size(), 11u);
  // First T under CT.
  const ParseTree& first_t = tree.children[2].children[0];
  EXPECT_EQ(join_tokens(yield_of(g, first_t)), "?capital p:area ?area");
}

TEST(Yield, MinimalTree) {
  const Grammar g = load_grammar("S -> \"t\"\n");
  ParseTree t{nonterminal(0), 0, {ParseTree{terminal(0), std::nullopt, {}}}};
  EXPECT_EQ(yield_of(g, t), Tokens{"t"});
}

TEST(CheckTree, DetectsMismatchedChildren) {
  const Grammar g = load_grammar_file(test::data_path("grammars/example.cfg"));
  ParseTree tree = test::example_tree(g);
  std::swap(tree.children[0], tree.children[1]);
  EXPECT_NE(check_tree(g, tree), std::nullopt);
}

TEST(Tokens, SplitAndJoin) {
  EXPECT_EQ(split_tokens("  a \t b\nc "), (Tokens{"a", "b", "c"}));
  EXPECT_EQ(join_tokens({"a", "b"}), "a b");
  EXPECT_TRUE(split_tokens("   ").empty());
}
