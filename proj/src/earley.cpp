#include "cfgdec/earley.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>

#include "cfgdec/error.hpp"

namespace cfgdec {

namespace {

struct Item {
  int rule;
  int dot;
  int origin;
};

std::uint64_t item_key(const Item& it) {
  return (static_cast<std::uint64_t>(it.rule) << 40) |
         (static_cast<std::uint64_t>(it.dot) << 20) | static_cast<std::uint64_t>(it.origin);
}

class EarleyChart {
 public:
  EarleyChart(const Grammar& g, const std::vector<int>& input) : g_(g), input_(input) {
    const std::size_t n = input.size();
    sets_.resize(n + 1);
    keys_.resize(n + 1);
    predicted_.assign(n + 1, std::vector<char>(g.nonterminal_count(), 0));
    completed_.assign(g.rule_count(), std::vector<std::vector<char>>(n + 1, std::vector<char>(n + 1, 0)));
    derives_.assign(g.nonterminal_count(), std::vector<std::vector<char>>(n + 1, std::vector<char>(n + 1, 0)));
    run();
  }

  bool accepted() const {
    return derives_[static_cast<std::size_t>(g_.start())][0][input_.size()] != 0;
  }

  // Largest k such that some item survives after reading k tokens.
  std::size_t furthest() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (!sets_[i].empty()) k = i;
    }
    return k;
  }

  bool rule_spans(int rule, std::size_t i, std::size_t j) const {
    return completed_[static_cast<std::size_t>(rule)][i][j] != 0;
  }
  bool derives(int x, std::size_t i, std::size_t j) const {
    return derives_[static_cast<std::size_t>(x)][i][j] != 0;
  }
  int token(std::size_t i) const { return input_[i]; }

 private:
  void add(std::size_t k, const Item& it) {
    if (keys_[k].insert(item_key(it)).second) sets_[k].push_back(it);
  }

  void run() {
    const int start = g_.start();
    for (int r : g_.rules_for(start)) add(0, {r, 0, 0});
    predicted_[0][static_cast<std::size_t>(start)] = 1;

    for (std::size_t k = 0; k < sets_.size(); ++k) {
      // sets_[k] grows while we iterate; index rather than iterate.
      for (std::size_t idx = 0; idx < sets_[k].size(); ++idx) {
        const Item it = sets_[k][idx];
        const Rule& rule = g_.rule(it.rule);
        if (static_cast<std::size_t>(it.dot) == rule.tail.size()) {
          complete(k, it);
          continue;
        }
        const Symbol next = rule.tail[static_cast<std::size_t>(it.dot)];
        if (next.is_terminal()) {
          if (k < input_.size() && input_[k] == next.id) add(k + 1, {it.rule, it.dot + 1, it.origin});
        } else if (!predicted_[k][static_cast<std::size_t>(next.id)]) {
          predicted_[k][static_cast<std::size_t>(next.id)] = 1;
          for (int r : g_.rules_for(next.id)) add(k, {r, 0, static_cast<int>(k)});
        }
      }
    }
  }

  // No epsilon rules, so origin < k and sets_[origin] is already closed.
  void complete(std::size_t k, const Item& done) {
    const std::size_t origin = static_cast<std::size_t>(done.origin);
    const int head = g_.rule(done.rule).head;
    completed_[static_cast<std::size_t>(done.rule)][origin][k] = 1;
    derives_[static_cast<std::size_t>(head)][origin][k] = 1;
    for (std::size_t idx = 0; idx < sets_[origin].size(); ++idx) {
      const Item waiting = sets_[origin][idx];
      const Rule& rule = g_.rule(waiting.rule);
      if (static_cast<std::size_t>(waiting.dot) < rule.tail.size()) {
        const Symbol next = rule.tail[static_cast<std::size_t>(waiting.dot)];
        if (next.is_nonterminal() && next.id == head) {
          add(k, {waiting.rule, waiting.dot + 1, waiting.origin});
        }
      }
    }
  }

  const Grammar& g_;
  const std::vector<int>& input_;
  std::vector<std::vector<Item>> sets_;
  std::vector<std::unordered_set<std::uint64_t>> keys_;
  std::vector<std::vector<char>> predicted_;
  std::vector<std::vector<std::vector<char>>> completed_;
  std::vector<std::vector<std::vector<char>>> derives_;
};

// Top-down tree extraction over the completed chart. At each node the first
// rule in file order that spans the input is taken, then the smallest split
// for each child from the left.
class TreeBuilder {
 public:
  TreeBuilder(const Grammar& g, const EarleyChart& chart) : g_(g), chart_(chart) {}

  bool ambiguous() const { return ambiguous_; }

  std::optional<ParseTree> build(int x, std::size_t i, std::size_t j, std::vector<int>& unit_path) {
    if (std::find(unit_path.begin(), unit_path.end(), x) != unit_path.end()) {
      ambiguous_ = true;  // a unit cycle means infinitely many trees
      return std::nullopt;
    }
    unit_path.push_back(x);
    std::optional<ParseTree> result;
    int options = 0;
    for (int r : g_.rules_for(x)) {
      if (!chart_.rule_spans(r, i, j)) continue;
      options += count_splits(g_.rule(r).tail, 0, i, j, 2);
      if (result) continue;
      result = build_rule(r, i, j, unit_path);
    }
    if (options > 1) ambiguous_ = true;
    unit_path.pop_back();
    return result;
  }

 private:
  bool covers(const Symbol& s, std::size_t i, std::size_t m) const {
    if (s.is_terminal()) return m == i + 1 && chart_.token(i) == s.id;
    return chart_.derives(s.id, i, m);
  }

  // Number of ways tail[k..] can cover [pos, end), saturating at `cap`.
  int count_splits(const std::vector<Symbol>& tail, std::size_t k, std::size_t pos, std::size_t end,
                   int cap) const {
    const std::size_t remaining = tail.size() - k;
    if (remaining == 0) return pos == end ? 1 : 0;
    if (end - pos < remaining) return 0;
    int ways = 0;
    for (std::size_t m = pos + 1; m + (remaining - 1) <= end && ways < cap; ++m) {
      if (remaining == 1 && m != end) continue;
      if (covers(tail[k], pos, m)) ways += count_splits(tail, k + 1, m, end, cap - ways);
    }
    return std::min(ways, cap);
  }

  std::optional<ParseTree> build_rule(int r, std::size_t i, std::size_t j, std::vector<int>& unit_path) {
    const Rule& rule = g_.rule(r);
    ParseTree node{nonterminal(rule.head), r, {}};
    if (rule.tail.size() == 1) {
      const Symbol s = rule.tail.front();
      if (s.is_terminal()) {
        node.children.push_back(ParseTree{s, std::nullopt, {}});
        return node;
      }
      auto child = build(s.id, i, j, unit_path);
      if (!child) return std::nullopt;
      node.children.push_back(std::move(*child));
      return node;
    }
    std::size_t pos = i;
    for (std::size_t k = 0; k < rule.tail.size(); ++k) {
      const std::size_t remaining = rule.tail.size() - k;
      std::size_t m = pos + 1;
      for (; m + (remaining - 1) <= j; ++m) {
        if (remaining == 1 && m != j) continue;
        if (covers(rule.tail[k], pos, m) && count_splits(rule.tail, k + 1, m, j, 1) > 0) break;
      }
      const Symbol s = rule.tail[k];
      if (s.is_terminal()) {
        node.children.push_back(ParseTree{s, std::nullopt, {}});
      } else {
        std::vector<int> fresh;  // strictly smaller span: no unit cycle possible
        auto child = build(s.id, pos, m, fresh);
        if (!child) return std::nullopt;
        node.children.push_back(std::move(*child));
      }
      pos = m;
    }
    return node;
  }

  const Grammar& g_;
  const EarleyChart& chart_;
  bool ambiguous_ = false;
};

std::optional<std::vector<int>> intern(const Grammar& g, const Tokens& tokens, std::size_t* bad) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto id = g.find_terminal(tokens[i]);
    if (!id) {
      if (bad) *bad = i;
      return std::nullopt;
    }
    ids.push_back(*id);
  }
  return ids;
}

}  // namespace

ParseResult parse(const Grammar& g, const Tokens& tokens) {
  if (tokens.empty()) throw ParseError(ParseError::Kind::kEmptyInput, "empty input", 0);
  std::size_t bad = 0;
  auto ids = intern(g, tokens, &bad);
  if (!ids) {
    throw ParseError(ParseError::Kind::kUnknownToken,
                     "token not in \xCE\xA3 (terminal set): '" + tokens[bad] + "' at index " +
                         std::to_string(bad),
                     bad);
  }
  EarleyChart chart(g, *ids);
  if (!chart.accepted()) {
    const std::size_t k = chart.furthest();
    std::string what = k == tokens.size() ? "unexpected end of input"
                                          : "unexpected token '" + tokens[k] + "'";
    throw ParseError(ParseError::Kind::kNoParse,
                     "no parse: " + what + " at token index " + std::to_string(k), k);
  }
  TreeBuilder builder(g, chart);
  std::vector<int> path;
  auto tree = builder.build(g.start(), 0, tokens.size(), path);
  if (!tree) throw Error("internal error: accepted input has no extractable tree");
  return {std::move(*tree), builder.ambiguous()};
}

bool accepts(const Grammar& g, const Tokens& tokens) {
  if (tokens.empty()) return false;
  auto ids = intern(g, tokens, nullptr);
  if (!ids) return false;
  return EarleyChart(g, *ids).accepted();
}

Derivation derivation_of(const Grammar& g, const ParseTree& tree) {
  if (auto err = check_tree(g, tree)) throw Error("malformed tree: " + *err);
  if (tree.symbol.is_terminal()) throw Error("malformed tree: root is a terminal");
  Derivation d{{}, tree};
  std::vector<const ParseTree*> stack{&tree};
  while (!stack.empty()) {
    const ParseTree* node = stack.back();
    stack.pop_back();
    d.steps.push_back(*node->rule);
    for (const ParseTree& child : node->children) {
      if (child.symbol.is_nonterminal()) stack.push_back(&child);
    }
  }
  return d;
}

Tokens emission_order(const Grammar& g, const Derivation& d) {
  Tokens out;
  for (int r : d.steps) {
    const Rule& rule = g.rule(r);
    if (rule.is_terminal_rule()) out.push_back(g.terminal_name(rule.tail.front().id));
  }
  return out;
}

std::set<Tokens> recognize_all(const Grammar& g, std::size_t max_len) {
  if (max_len > 20) throw std::invalid_argument("recognize_all: max_len must be <= 20");
  constexpr std::size_t kLimit = 1'000'000;
  using Str = std::vector<int>;
  std::vector<std::set<Str>> lang(g.nonterminal_count());
  std::size_t total = 0;

  for (bool changed = true; changed;) {
    changed = false;
    for (const Rule& rule : g.rules()) {
      std::set<Str> partial{Str{}};
      for (std::size_t k = 0; k < rule.tail.size() && !partial.empty(); ++k) {
        // Every remaining symbol needs at least one token.
        const std::size_t budget = max_len - std::min(max_len, rule.tail.size() - k - 1);
        std::set<Str> next;
        const Symbol s = rule.tail[k];
        auto extend = [&](const Str& prefix, const Str& piece) {
          if (prefix.size() + piece.size() > budget) return;
          Str joined = prefix;
          joined.insert(joined.end(), piece.begin(), piece.end());
          next.insert(std::move(joined));
        };
        for (const Str& prefix : partial) {
          if (s.is_terminal()) {
            extend(prefix, Str{s.id});
          } else {
            for (const Str& piece : lang[static_cast<std::size_t>(s.id)]) extend(prefix, piece);
          }
        }
        partial = std::move(next);
      }
      auto& target = lang[static_cast<std::size_t>(rule.head)];
      for (const Str& s : partial) {
        if (target.insert(s).second) {
          changed = true;
          if (++total > kLimit) throw Error("recognize_all: more than 10^6 strings");
        }
      }
    }
  }

  std::set<Tokens> out;
  for (const Str& s : lang[static_cast<std::size_t>(g.start())]) {
    Tokens t;
    for (int id : s) t.push_back(g.terminal_name(id));
    out.insert(std::move(t));
  }
  return out;
}

}  // namespace cfgdec
