#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "cfgdec/grammar.hpp"

namespace cfgdec {

struct ParseResult {
  ParseTree tree;
  // More than one tree yields the input; `tree` is the one that takes the
  // lowest file-order rule at the leftmost point of choice.
  bool ambiguous = false;
};

// Earley parse of a complete token sequence against g. Throws ParseError for
// empty input, a token outside the terminal set, or input not in L(g).
ParseResult parse(const Grammar& g, const Tokens& tokens);

// Recognition only; never throws. Unknown tokens are simply rejected.
bool accepts(const Grammar& g, const Tokens& tokens);

// Rule applications of a tree in the order a stack-driven generator expands
// them: pop the top nonterminal, push its tail left to right, so the rightmost
// child is expanded first and terminals appear right to left.
struct Derivation {
  std::vector<int> steps;
  ParseTree tree;
};

// Throws Error on a malformed tree.
Derivation derivation_of(const Grammar& g, const ParseTree& tree);

// Terminals in the order the derivation emits them (the query reversed).
Tokens emission_order(const Grammar& g, const Derivation& d);

// Brute-force enumeration of every string in L(g) of length <= max_len, by a
// bounded fixpoint over per-nonterminal string sets. Independent of the Earley
// recognizer; used as its oracle. Throws std::invalid_argument if
// max_len > 20 and Error once more than 10^6 strings accumulate.
std::set<Tokens> recognize_all(const Grammar& g, std::size_t max_len);

}  // namespace cfgdec
