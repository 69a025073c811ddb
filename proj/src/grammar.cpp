#include "cfgdec/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cfgdec/error.hpp"

namespace cfgdec {

GrammarError::GrammarError(Kind kind, const std::string& message,
                           std::size_t line, std::size_t column)
    : Error(line == 0 ? message
                      : "line " + std::to_string(line) + ", column " +
                            std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

std::optional<RuleKind> classify_tail(const std::vector<Symbol>& tail) {
  if (tail.empty()) return std::nullopt;
  if (tail.size() == 1 && tail.front().is_terminal()) return RuleKind::kTerminalRule;
  if (std::all_of(tail.begin(), tail.end(),
                  [](const Symbol& s) { return s.is_nonterminal(); })) {
    return RuleKind::kNonterminalRule;
  }
  return std::nullopt;
}

namespace {

using Kind = GrammarError::Kind;

std::string where(const RuleSpec& spec) {
  return spec.head + " -> ...";
}

[[noreturn]] void fail(Kind kind, const std::string& message,
                       const RuleSpec& spec) {
  throw GrammarError(kind, message, spec.line, spec.line == 0 ? 0 : 1);
}

}  // namespace

Grammar Grammar::from_rules(const std::vector<RuleSpec>& specs,
                            const std::string& start) {
  if (specs.empty()) {
    throw GrammarError(Kind::kMissingStart, "grammar has no rules, so no start symbol");
  }
  Grammar g;
  for (const RuleSpec& spec : specs) {
    if (!g.nonterminal_ids_.contains(spec.head)) {
      g.nonterminal_ids_.emplace(spec.head, static_cast<int>(g.nonterminals_.size()));
      g.nonterminals_.push_back(spec.head);
    }
  }
  g.by_head_.resize(g.nonterminals_.size());

  std::set<std::pair<int, std::vector<Symbol>>> seen;
  for (const RuleSpec& spec : specs) {
    Rule rule;
    rule.head = g.nonterminal_ids_.at(spec.head);
    if (spec.tail.empty()) {
      fail(Kind::kSyntax, "empty tail in " + where(spec) + " (epsilon rules are not supported)", spec);
    }
    for (const RuleSpec::Item& item : spec.tail) {
      if (item.terminal) {
        if (g.nonterminal_ids_.contains(item.name)) {
          fail(Kind::kKindConflict,
               "'" + item.name + "' is used both as a terminal and a nonterminal", spec);
        }
        auto [it, inserted] =
            g.terminal_ids_.emplace(item.name, static_cast<int>(g.terminals_.size()));
        if (inserted) g.terminals_.push_back(item.name);
        rule.tail.push_back(terminal(it->second));
      } else {
        auto it = g.nonterminal_ids_.find(item.name);
        if (it == g.nonterminal_ids_.end()) {
          fail(Kind::kUndeclaredSymbol,
               "undeclared symbol '" + item.name + "' (no rule has it as head)", spec);
        }
        rule.tail.push_back(nonterminal(it->second));
      }
    }
    auto kind = classify_tail(rule.tail);
    if (!kind) {
      fail(Kind::kMixedTail,
           "mixed tail in " + where(spec) +
               ": a tail is either one terminal or a sequence of nonterminals",
           spec);
    }
    rule.kind = *kind;
    if (!seen.emplace(rule.head, rule.tail).second) {
      fail(Kind::kDuplicateRule, "duplicate rule " + where(spec), spec);
    }
    g.by_head_[static_cast<std::size_t>(rule.head)].push_back(static_cast<int>(g.rules_.size()));
    g.rules_.push_back(std::move(rule));
  }
  if (start.empty()) {
    g.start_ = 0;
  } else {
    auto it = g.nonterminal_ids_.find(start);
    if (it == g.nonterminal_ids_.end()) {
      throw GrammarError(Kind::kMissingStart, "start symbol '" + start + "' has no rules");
    }
    g.start_ = it->second;
  }

  // A nonterminal that derives no terminal string would stall generation.
  std::vector<bool> productive(g.nonterminals_.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const Rule& r : g.rules_) {
      if (productive[static_cast<std::size_t>(r.head)]) continue;
      bool ok = std::all_of(r.tail.begin(), r.tail.end(), [&](const Symbol& s) {
        return s.is_terminal() || productive[static_cast<std::size_t>(s.id)];
      });
      if (ok) {
        productive[static_cast<std::size_t>(r.head)] = true;
        changed = true;
      }
    }
  }
  for (std::size_t x = 0; x < productive.size(); ++x) {
    if (!productive[x]) {
      throw GrammarError(Kind::kDeadNonterminal,
                         "dead nonterminal '" + g.nonterminals_[x] +
                             "': it derives no terminal string");
    }
  }
  return g;
}

const std::string& Grammar::name(const Symbol& s) const {
  return s.is_terminal() ? terminal_name(s.id) : nonterminal_name(s.id);
}

std::optional<int> Grammar::find_nonterminal(std::string_view name) const {
  auto it = nonterminal_ids_.find(std::string(name));
  if (it == nonterminal_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Grammar::find_terminal(std::string_view token) const {
  auto it = terminal_ids_.find(std::string(token));
  if (it == terminal_ids_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& Grammar::rules_for(int x) const {
  if (x < 0 || static_cast<std::size_t>(x) >= by_head_.size()) {
    throw std::out_of_range("unknown nonterminal id " + std::to_string(x));
  }
  return by_head_[static_cast<std::size_t>(x)];
}

const std::vector<int>& Grammar::rules_for(std::string_view x) const {
  auto id = find_nonterminal(x);
  if (!id) throw std::out_of_range("unknown nonterminal '" + std::string(x) + "'");
  return rules_for(*id);
}

namespace {

std::string quote(const std::string& token) {
  std::string out = "\"";
  for (char c : token) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string Grammar::render_rule(int index) const {
  const Rule& r = rule(index);
  std::string out = nonterminal_name(r.head) + " ->";
  for (const Symbol& s : r.tail) {
    out += ' ';
    out += s.is_terminal() ? quote(terminal_name(s.id)) : nonterminal_name(s.id);
  }
  return out;
}

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class LineScanner {
 public:
  LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_space() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= line_.size() || line_[pos_] == '#';
  }
  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void error(const std::string& message) const {
    throw GrammarError(Kind::kSyntax, message, line_no_, column());
  }

  std::string identifier() {
    skip_space();
    if (pos_ >= line_.size() || !ident_start(line_[pos_])) error("expected identifier");
    std::size_t begin = pos_;
    while (pos_ < line_.size() && ident_char(line_[pos_])) ++pos_;
    return std::string(line_.substr(begin, pos_ - begin));
  }

  void arrow() {
    skip_space();
    if (line_.substr(pos_, 2) != "->") error("expected '->'");
    pos_ += 2;
  }

  RuleSpec::Item item() {
    skip_space();
    if (line_[pos_] != '"') {
      if (!ident_start(line_[pos_])) error(std::string("unexpected character '") + line_[pos_] + "'");
      return {identifier(), false};
    }
    std::size_t open = pos_++;
    std::string token;
    while (true) {
      if (pos_ >= line_.size()) {
        pos_ = open;
        error("unterminated terminal");
      }
      char c = line_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= line_.size()) error("dangling escape");
        c = line_[pos_++];
        if (c != '"' && c != '\\') error("unknown escape");
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        --pos_;
        error("whitespace inside terminal");
      }
      token += c;
    }
    if (token.empty()) {
      pos_ = open;
      error("empty terminal");
    }
    if (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_])) &&
        line_[pos_] != '#') {
      error("expected whitespace after terminal");
    }
    return {token, true};
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

Grammar load_grammar(std::string_view text) {
  std::vector<RuleSpec> specs;
  std::string start;
  std::size_t line_no = 0;
  std::size_t start_line = 0;
  while (!text.empty()) {
    ++line_no;
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    LineScanner scan(line, line_no);
    if (scan.at_end()) continue;
    std::string_view rest = line.substr(line.find_first_not_of(" \t"));
    if (rest.starts_with("%start")) {
      LineScanner directive(rest.substr(6), line_no);
      if (!start.empty()) scan.error("duplicate %start directive");
      start = directive.identifier();
      start_line = line_no;
      if (!directive.at_end()) directive.error("trailing input after %start");
      continue;
    }
    RuleSpec spec;
    spec.line = line_no;
    spec.head = scan.identifier();
    scan.arrow();
    while (!scan.at_end()) spec.tail.push_back(scan.item());
    if (spec.tail.empty()) scan.error("empty tail (epsilon rules are not supported)");
    specs.push_back(std::move(spec));
  }
  try {
    return Grammar::from_rules(specs, start);
  } catch (const GrammarError& e) {
    if (e.kind() == Kind::kMissingStart && start_line != 0) {
      throw GrammarError(e.kind(), "start symbol '" + start + "' has no rules", start_line, 1);
    }
    throw;
  }
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grammar file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_grammar(buffer.str());
}

std::string render_grammar(const Grammar& g) {
  std::string out;
  if (g.start() != g.rule(0).head) out += "%start " + g.nonterminal_name(g.start()) + "\n";
  for (std::size_t i = 0; i < g.rule_count(); ++i) {
    out += g.render_rule(static_cast<int>(i));
    out += '\n';
  }
  return out;
}

std::uint64_t grammar_hash(const Grammar& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : render_grammar(g)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void collect_yield(const Grammar& g, const ParseTree& t, Tokens& out) {
  if (t.is_leaf()) {
    out.push_back(g.name(t.symbol));
    return;
  }
  for (const ParseTree& child : t.children) collect_yield(g, child, out);
}

void render_node(const Grammar& g, const ParseTree& t, int depth, std::string& out) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += t.symbol.is_terminal() ? quote(g.name(t.symbol)) : g.name(t.symbol);
  out += '\n';
  for (const ParseTree& child : t.children) render_node(g, child, depth + 1, out);
}

}  // namespace

Tokens yield_of(const Grammar& g, const ParseTree& tree) {
  Tokens out;
  collect_yield(g, tree, out);
  return out;
}

std::optional<std::string> check_tree(const Grammar& g, const ParseTree& t) {
  if (t.symbol.is_terminal()) {
    if (!t.children.empty() || t.rule) return "terminal node with children or rule";
    if (static_cast<std::size_t>(t.symbol.id) >= g.terminal_count()) return "terminal out of range";
    return std::nullopt;
  }
  if (!t.rule) return "nonterminal " + g.name(t.symbol) + " without rule";
  if (*t.rule < 0 || static_cast<std::size_t>(*t.rule) >= g.rule_count()) return "rule index out of range";
  const Rule& r = g.rule(*t.rule);
  if (r.head != t.symbol.id) return "rule head does not match node " + g.name(t.symbol);
  if (r.tail.size() != t.children.size()) return "child count mismatch at " + g.name(t.symbol);
  for (std::size_t i = 0; i < r.tail.size(); ++i) {
    if (t.children[i].symbol != r.tail[i]) return "child symbol mismatch at " + g.name(t.symbol);
    if (auto err = check_tree(g, t.children[i])) return err;
  }
  return std::nullopt;
}

std::string render_tree(const Grammar& g, const ParseTree& tree) {
  std::string out;
  render_node(g, tree, 0, out);
  return out;
}

Tokens split_tokens(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > begin) out.emplace_back(text.substr(begin, i - begin));
  }
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace cfgdec
