#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "cfgdec/earley.hpp"
#include "cfgdec/error.hpp"
#include "test_support.hpp"

using namespace cfgdec;

namespace {

Grammar example() { return load_grammar_file(test::data_path("grammars/example.cfg")); }

ParseError parse_error(const Grammar& g, const std::string& text) {
  try {
    parse(g, split_tokens(text));
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "parsed: " << text;
  return ParseError(ParseError::Kind::kEmptyInput, "", 0);
}

// Rebuilds a tree from rule applications with an explicit stack: pop the
// pending node, give it the rule's children, push nonterminal children left to
// right.
ParseTree replay(const Grammar& g, const std::vector<int>& steps) {
  ParseTree root{nonterminal(g.start()), std::nullopt, {}};
  std::vector<ParseTree*> stack{&root};
  for (int r : steps) {
    EXPECT_FALSE(stack.empty());
    ParseTree* n = stack.back();
    stack.pop_back();
    EXPECT_EQ(n->symbol, nonterminal(g.rule(r).head));
    n->rule = r;
    for (const Symbol& s : g.rule(r).tail) n->children.push_back(ParseTree{s, std::nullopt, {}});
    for (ParseTree& c : n->children) {
      if (c.symbol.is_nonterminal()) stack.push_back(&c);
    }
  }
  EXPECT_TRUE(stack.empty());
  return root;
}

// Every string over `alphabet` of length 1..n.
void all_strings(const std::vector<std::string>& alphabet, std::size_t n,
                 const std::function<void(const Tokens&)>& visit) {
  Tokens cur;
  std::function<void()> rec = [&] {
    if (!cur.empty()) visit(cur);
    if (cur.size() == n) return;
    for (const auto& a : alphabet) {
      cur.push_back(a);
      rec();
      cur.pop_back();
    }
  };
  rec();
}

}  // namespace

TEST(Parse, ExampleQueryGivesExampleTree) {
  const Grammar g = example();
  ParseResult r = parse(g, split_tokens(test::kExampleQuery));
  EXPECT_FALSE(r.ambiguous);
  EXPECT_EQ(r.tree, test::example_tree(g));
  EXPECT_EQ(g.nonterminal_name(r.tree.symbol.id), "S");
  ASSERT_EQ(r.tree.children.size(), 4u);
  EXPECT_EQ(g.render_rule(*r.tree.children[2].rule), "CT -> T Dot T");
}

TEST(Parse, MinimalGrammar) {
  const Grammar g = load_grammar("S -> \"t\"\n");
  ParseResult r = parse(g, {"t"});
  EXPECT_EQ(r.tree.children.size(), 1u);
  EXPECT_TRUE(r.tree.children[0].is_leaf());
}

TEST(Parse, TruncatedInputFailsAtIndex4) {
  ParseError e = parse_error(example(), "SELECT ?area { ?capital");
  EXPECT_EQ(e.kind(), ParseError::Kind::kNoParse);
  EXPECT_EQ(e.position(), 4u);
}

TEST(Parse, WrongTokenReportsItsIndex) {
  ParseError e = parse_error(example(), "SELECT ?area { ?capital p:area ?area } }");
  EXPECT_EQ(e.kind(), ParseError::Kind::kNoParse);
  EXPECT_EQ(e.position(), 6u);
}

TEST(Parse, UnknownTokenAndEmptyInput) {
  ParseError e = parse_error(example(), "SELECT ?area { ?dallas");
  EXPECT_EQ(e.kind(), ParseError::Kind::kUnknownToken);
  EXPECT_EQ(e.position(), 3u);
  EXPECT_NE(std::string(e.what()).find("not in"), std::string::npos);
  EXPECT_EQ(parse_error(example(), "").kind(), ParseError::Kind::kEmptyInput);
  EXPECT_FALSE(accepts(example(), {}));
  EXPECT_FALSE(accepts(example(), {"?dallas"}));
}

TEST(Parse, AmbiguityIsFlagged) {
  const Grammar g = load_grammar("S -> S S\nS -> \"a\"\n");
  ParseResult r = parse(g, {"a", "a", "a"});
  EXPECT_TRUE(r.ambiguous);
  EXPECT_EQ(check_tree(g, r.tree), std::nullopt);
  EXPECT_EQ(yield_of(g, r.tree), (Tokens{"a", "a", "a"}));
  EXPECT_FALSE(parse(g, {"a", "a"}).ambiguous);
}

TEST(Parse, UnitCyclesTerminate) {
  const Grammar g = load_grammar("S -> A\nS -> \"a\"\nA -> S\nA -> B\nB -> \"b\"\n");
  ParseResult r = parse(g, {"a"});
  EXPECT_EQ(check_tree(g, r.tree), std::nullopt);
  EXPECT_TRUE(r.ambiguous);  // S -> "a" and S -> A -> S -> "a" ...
  EXPECT_EQ(yield_of(g, parse(g, {"b"}).tree), Tokens{"b"});
}

TEST(Parse, LeftRecursion) {
  const Grammar g = load_grammar_file(test::data_path("grammars/chain.cfg"));
  const Tokens q = split_tokens(
      "SELECT ?v { dbr:ohio dbo:area ?v . dbr:utah dbo:capital ?v . dbr:texas dbo:area ?v . }");
  ParseResult r = parse(g, q);
  EXPECT_FALSE(r.ambiguous);
  EXPECT_EQ(yield_of(g, r.tree), q);
}

TEST(Parse, MatchesEnumerationOnRandomGrammars) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 60; ++i) {
    const Grammar g = test::random_grammar(rng);
    const auto language = recognize_all(g, 6);
    all_strings({"a", "b", "c"}, 6, [&](const Tokens& s) {
      bool known = std::all_of(s.begin(), s.end(), [&](const auto& t) { return g.find_terminal(t).has_value(); });
      const bool in = language.contains(s);
      ASSERT_EQ(accepts(g, s), in) << render_grammar(g) << join_tokens(s);
      if (in) {
        ASSERT_TRUE(known);
        ParseResult r = parse(g, s);
        ASSERT_EQ(check_tree(g, r.tree), std::nullopt);
        ASSERT_EQ(yield_of(g, r.tree), s);
        ASSERT_EQ(r.tree.symbol, nonterminal(g.start()));
      }
    });
  }
}

TEST(Parse, IsDeterministic) {
  const Grammar g = load_grammar("S -> S S\nS -> \"a\"\nS -> S S S\n");
  const Tokens s{"a", "a", "a", "a", "a"};
  EXPECT_EQ(parse(g, s).tree, parse(g, s).tree);
}

TEST(Derivation, ExampleOrder) {
  const Grammar g = example();
  Derivation d = derivation_of(g, test::example_tree(g));
  std::vector<std::string> heads;
  for (int r : d.steps) heads.push_back(g.nonterminal_name(g.rule(r).head));
  const std::vector<std::string> expected{"S", "BR", "CT", "T", "O", "P", "J", "Dot",
                                          "T", "O", "P", "J", "BL", "C", "VA", "SE"};
  EXPECT_EQ(heads, expected);
  // The first T expanded is the right one.
  EXPECT_EQ(g.render_rule(d.steps[6]), "J -> \"?texas\"");
  EXPECT_EQ(join_tokens(emission_order(g, d)), "} ?capital p:has_capital ?texas . ?area p:area ?capital { ?area SELECT");
}

TEST(Derivation, MinimalTree) {
  const Grammar g = load_grammar("S -> \"t\"\n");
  Derivation d = derivation_of(g, parse(g, {"t"}).tree);
  EXPECT_EQ(d.steps, std::vector<int>{0});
}

TEST(Derivation, ReplayRebuildsTree) {
  const Grammar g = example();
  Derivation d = derivation_of(g, test::example_tree(g));
  EXPECT_EQ(replay(g, d.steps), test::example_tree(g));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 60; ++i) {
    const Grammar rg = test::random_grammar(rng);
    for (const Tokens& s : recognize_all(rg, 5)) {
      const ParseTree t = parse(rg, s).tree;
      Derivation rd = derivation_of(rg, t);
      ASSERT_EQ(replay(rg, rd.steps), t);
      Tokens reversed(s.rbegin(), s.rend());
      ASSERT_EQ(emission_order(rg, rd), reversed);
    }
  }
}

TEST(Derivation, RejectsMalformedTree) {
  const Grammar g = example();
  ParseTree t = test::example_tree(g);
  t.children.pop_back();
  EXPECT_THROW(derivation_of(g, t), Error);
}

TEST(RecognizeAll, ExampleHas64Strings) {
  const Grammar g = example();
  const auto all = recognize_all(g, 14);
  EXPECT_EQ(all.size(), 64u);
  EXPECT_TRUE(all.contains(split_tokens(test::kExampleQuery)));
  EXPECT_TRUE(recognize_all(g, 10).empty());
}

TEST(RecognizeAll, MinimalGrammar) {
  const Grammar g = load_grammar("S -> \"t\"\n");
  EXPECT_EQ(recognize_all(g, 1), (std::set<Tokens>{{"t"}}));
  EXPECT_TRUE(recognize_all(g, 0).empty());
  EXPECT_THROW(recognize_all(g, 21), std::invalid_argument);
}
