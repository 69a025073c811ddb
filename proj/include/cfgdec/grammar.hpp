#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cfgdec {

enum class SymbolKind : std::uint8_t { kNonterminal, kTerminal };

// Symbols are interned per grammar: `id` indexes either the nonterminal or
// the terminal name table depending on `kind`.
struct Symbol {
  SymbolKind kind = SymbolKind::kNonterminal;
  int id = 0;

  bool is_terminal() const { return kind == SymbolKind::kTerminal; }
  bool is_nonterminal() const { return kind == SymbolKind::kNonterminal; }

  friend bool operator==(const Symbol&, const Symbol&) = default;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

inline Symbol nonterminal(int id) { return {SymbolKind::kNonterminal, id}; }
inline Symbol terminal(int id) { return {SymbolKind::kTerminal, id}; }

enum class RuleKind : std::uint8_t { kTerminalRule, kNonterminalRule };

struct Rule {
  int head = 0;
  std::vector<Symbol> tail;
  RuleKind kind = RuleKind::kNonterminalRule;

  bool is_terminal_rule() const { return kind == RuleKind::kTerminalRule; }
  std::size_t size() const { return tail.size(); }

  friend bool operator==(const Rule&, const Rule&) = default;
};

// Total classification of a tail: a single terminal is a terminal rule, an
// all-nonterminal sequence is a nonterminal rule, anything else is invalid.
std::optional<RuleKind> classify_tail(const std::vector<Symbol>& tail);

// A token sequence: whole terminal tokens, e.g. "SELECT", "?capital", "{".
using Tokens = std::vector<std::string>;

// One rule as written in source form, before interning.
struct RuleSpec {
  struct Item {
    std::string name;
    bool terminal = false;
  };
  std::string head;
  std::vector<Item> tail;
  std::size_t line = 0;  // source line for diagnostics, 0 if synthetic
};

// Immutable context-free grammar (V, Sigma, R, S0) whose rules are partitioned
// into terminal rules X -> t and nonterminal rules X -> Y1 ... Ym.
class Grammar {
 public:
  // Validates and interns. Throws GrammarError. If `start` is empty the head of
  // the first rule is the start symbol.
  static Grammar from_rules(const std::vector<RuleSpec>& rules,
                            const std::string& start = {});

  std::size_t nonterminal_count() const { return nonterminals_.size(); }
  std::size_t terminal_count() const { return terminals_.size(); }
  std::size_t rule_count() const { return rules_.size(); }

  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(int index) const { return rules_.at(static_cast<std::size_t>(index)); }
  int start() const { return start_; }

  const std::string& name(const Symbol& s) const;
  const std::string& nonterminal_name(int id) const { return nonterminals_.at(static_cast<std::size_t>(id)); }
  const std::string& terminal_name(int id) const { return terminals_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& nonterminal_names() const { return nonterminals_; }
  const std::vector<std::string>& terminal_names() const { return terminals_; }

  std::optional<int> find_nonterminal(std::string_view name) const;
  std::optional<int> find_terminal(std::string_view token) const;

  // Indices of the rules headed by `x`, in file order. Never empty.
  const std::vector<int>& rules_for(int x) const;
  // Throws std::out_of_range on an unknown name.
  const std::vector<int>& rules_for(std::string_view x) const;

  // "HEAD -> SYM ..." rendering of one rule.
  std::string render_rule(int index) const;

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.nonterminals_ == b.nonterminals_ && a.terminals_ == b.terminals_ &&
           a.rules_ == b.rules_ && a.start_ == b.start_;
  }

 private:
  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::unordered_map<std::string, int> nonterminal_ids_;
  std::unordered_map<std::string, int> terminal_ids_;
  std::vector<Rule> rules_;
  std::vector<std::vector<int>> by_head_;
  int start_ = 0;
};

// Parses the line-oriented grammar format:
//
//   # comment
//   %start S            (optional; defaults to the first rule's head)
//   S  -> C BL CT BR
//   SE -> "SELECT"
//
// Terminals are double-quoted tokens (\" and \\ escapes, no whitespace),
// nonterminals bare identifiers [A-Za-z_][A-Za-z0-9_]*.
Grammar load_grammar(std::string_view text);
Grammar load_grammar_file(const std::string& path);

// Inverse of load_grammar: load_grammar(render_grammar(g)) == g.
std::string render_grammar(const Grammar& g);

// FNV-1a over the rendered grammar; identifies the grammar a model was
// trained against.
std::uint64_t grammar_hash(const Grammar& g);

struct ParseTree {
  Symbol symbol;
  std::optional<int> rule;  // absent at terminal leaves
  std::vector<ParseTree> children;

  bool is_leaf() const { return children.empty(); }
  friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

// Left-to-right terminal leaves.
Tokens yield_of(const Grammar& g, const ParseTree& tree);

// Checks the structural invariants: children match each rule's tail, leaves are
// terminals. Returns an explanation on failure.
std::optional<std::string> check_tree(const Grammar& g, const ParseTree& tree);

// Indented text rendering, one node per line.
std::string render_tree(const Grammar& g, const ParseTree& tree);

Tokens split_tokens(std::string_view text);
std::string join_tokens(const Tokens& tokens);

}  // namespace cfgdec
