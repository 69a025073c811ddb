#include "cfgdec/corpus.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "cfgdec/error.hpp"

namespace cfgdec {

namespace {

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Tokens tokenize_source(std::string_view text) {
  std::string spaced;
  spaced.reserve(text.size() + 8);
  for (char c : text) {
    if (c == '?') {
      spaced += " ? ";
    } else {
      spaced += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return split_tokens(spaced);
}

Example make_example(const Grammar& g, std::string_view source, std::string_view target) {
  Example ex;
  ex.source = tokenize_source(source);
  if (ex.source.empty()) throw CorpusError("empty source sentence");
  ex.target = split_tokens(target);
  ParseResult parsed = parse(g, ex.target);
  ex.derivation = derivation_of(g, parsed.tree);
  return ex;
}

Corpus load_corpus(std::string_view text, const Grammar& g, bool allow_skip) {
  Corpus corpus;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw CorpusError("malformed line: expected exactly one TAB between source and target", line_no);
    }
    std::string_view source = line.substr(0, tab);
    std::string_view target = line.substr(tab + 1);
    if (tokenize_source(source).empty()) throw CorpusError("empty source field", line_no);
    if (split_tokens(target).empty()) throw CorpusError("empty target field", line_no);
    try {
      corpus.examples.push_back(make_example(g, source, target));
    } catch (const ParseError& e) {
      ++corpus.rejected;
      corpus.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.rejected > 0 && !allow_skip) {
    throw CorpusError(std::to_string(corpus.rejected) + " target(s) rejected; first: " + corpus.diagnostics.front());
  }
  return corpus;
}

Corpus load_corpus_file(const std::string& path, const Grammar& g, bool allow_skip) {
  return load_corpus(read_file(path, "corpus file"), g, allow_skip);
}

std::string write_corpus(const std::vector<Example>& examples) {
  std::string out;
  for (const Example& ex : examples) {
    out += join_tokens(ex.source);
    out += '\t';
    out += join_tokens(ex.target);
    out += '\n';
  }
  return out;
}

Vocabulary build_source_vocabulary(const std::vector<Example>& examples) {
  Vocabulary v;
  for (const Example& ex : examples) {
    for (const auto& w : ex.source) v.add(w);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Templates and synthesis

Templates load_templates(std::string_view text) {
  Templates t;
  std::size_t line_no = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw CorpusError("template line without '='", line_no);
    std::string_view lhs = trim(line.substr(0, eq));
    std::string rhs(trim(line.substr(eq + 1)));
    if (lhs == "pattern") {
      if (rhs.empty()) throw CorpusError("empty pattern", line_no);
      t.patterns.push_back(rhs);
      continue;
    }
    std::size_t q1 = lhs.find('"');
    std::size_t q2 = lhs.rfind('"');
    if (q1 == std::string_view::npos || q2 == q1 || q2 != lhs.size() - 1) {
      throw CorpusError("expected HEAD \"terminal\" = words", line_no);
    }
    std::string head(trim(lhs.substr(0, q1)));
    std::string terminal(lhs.substr(q1 + 1, q2 - q1 - 1));
    if (head.empty() || terminal.empty()) throw CorpusError("expected HEAD \"terminal\" = words", line_no);
    if (!t.fragments.emplace(std::make_pair(head, terminal), rhs).second) {
      throw CorpusError("duplicate fragment for " + head + " \"" + terminal + "\"", line_no);
    }
  }
  return t;
}

Templates load_templates_file(const std::string& path) { return load_templates(read_file(path, "template file")); }

namespace {

struct Lexical {
  std::string head;
  std::string terminal;
};

void collect_lexical(const Grammar& g, const ParseTree& t, std::vector<Lexical>& out) {
  if (t.rule && g.rule(*t.rule).is_terminal_rule()) {
    out.push_back({g.nonterminal_name(t.symbol.id), g.name(t.children.front().symbol)});
    return;
  }
  for (const ParseTree& c : t.children) collect_lexical(g, c, out);
}

const std::string* fragment_for(const Templates& t, const Lexical& lex) {
  auto it = t.fragments.find({lex.head, lex.terminal});
  return it == t.fragments.end() ? nullptr : &it->second;
}

[[noreturn]] void missing(const Lexical& lex) {
  throw CorpusError("templates incomplete: no fragment for " + lex.head + " -> \"" + lex.terminal + "\"");
}

// Fills a pattern, or returns false if one of its slots does not exist in
// this query. Throws when a referenced slot has no fragment.
bool fill_pattern(const std::string& pattern, const Templates& t, const std::vector<Lexical>& lexical,
                  std::string& out) {
  out.clear();
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    std::size_t close = pattern.find('}', i);
    std::size_t dot = pattern.rfind('.', close);
    if (close == std::string::npos || dot == std::string::npos || dot < i) {
      throw CorpusError("malformed slot in pattern '" + pattern + "'");
    }
    std::string head = pattern.substr(i + 1, dot - i - 1);
    std::size_t n = std::stoul(pattern.substr(dot + 1, close - dot - 1));
    const Lexical* found = nullptr;
    std::size_t seen = 0;
    for (const Lexical& lex : lexical) {
      if (lex.head == head && ++seen == n) {
        found = &lex;
        break;
      }
    }
    if (!found) return false;
    const std::string* frag = fragment_for(t, *found);
    if (!frag) missing(*found);
    out += *frag;
    i = close + 1;
  }
  return true;
}

template <typename Rng>
std::string render_sentence(const Grammar& g, const Templates& t, const ParseTree& tree, Rng& rng) {
  std::vector<Lexical> lexical;
  collect_lexical(g, tree, lexical);
  if (t.patterns.empty()) {
    std::string out;
    for (const Lexical& lex : lexical) {
      const std::string* frag = fragment_for(t, lex);
      if (!frag) missing(lex);
      if (frag->empty()) continue;
      if (!out.empty()) out += ' ';
      out += *frag;
    }
    return out;
  }
  std::vector<std::string> filled;
  std::string buffer;
  for (const std::string& p : t.patterns) {
    if (fill_pattern(p, t, lexical, buffer)) filled.push_back(buffer);
  }
  if (filled.empty()) throw CorpusError("templates incomplete: no pattern applies to '" + join_tokens(yield_of(g, tree)) + "'");
  std::uniform_int_distribution<std::size_t> pick(0, filled.size() - 1);
  return filled[pick(rng)];
}

template <typename Rng>
ParseTree sample_tree(const Grammar& g, int x, std::size_t depth, std::size_t max_depth, Rng& rng) {
  if (depth > max_depth) {
    throw CorpusError("derivation depth bound of " + std::to_string(max_depth) + " exceeded while sampling");
  }
  const std::vector<int>& rules = g.rules_for(x);
  std::uniform_int_distribution<std::size_t> pick(0, rules.size() - 1);
  const int r = rules[pick(rng)];
  ParseTree node{nonterminal(x), r, {}};
  for (const Symbol& s : g.rule(r).tail) {
    if (s.is_terminal()) {
      node.children.push_back(ParseTree{s, std::nullopt, {}});
    } else {
      node.children.push_back(sample_tree(g, s.id, depth + 1, max_depth, rng));
    }
  }
  return node;
}

std::vector<ParseTree> all_trees(const Grammar& g, int x, std::size_t depth, const SynthesisOptions& options) {
  if (depth > options.max_depth) {
    throw CorpusError("derivation depth bound of " + std::to_string(options.max_depth) +
                      " exceeded in exhaustive synthesis (recursive grammar?)");
  }
  std::vector<ParseTree> out;
  for (int r : g.rules_for(x)) {
    std::vector<ParseTree> partial{ParseTree{nonterminal(x), r, {}}};
    for (const Symbol& s : g.rule(r).tail) {
      std::vector<ParseTree> options_for_child;
      if (s.is_terminal()) {
        options_for_child.push_back(ParseTree{s, std::nullopt, {}});
      } else {
        options_for_child = all_trees(g, s.id, depth + 1, options);
      }
      std::vector<ParseTree> next;
      for (const ParseTree& p : partial) {
        for (const ParseTree& c : options_for_child) {
          ParseTree extended = p;
          extended.children.push_back(c);
          next.push_back(std::move(extended));
          if (next.size() > options.max_exhaustive) {
            throw CorpusError("exhaustive synthesis exceeds " + std::to_string(options.max_exhaustive) + " trees");
          }
        }
      }
      partial = std::move(next);
    }
    out.insert(out.end(), partial.begin(), partial.end());
    if (out.size() > options.max_exhaustive) {
      throw CorpusError("exhaustive synthesis exceeds " + std::to_string(options.max_exhaustive) + " trees");
    }
  }
  return out;
}

template <typename Rng>
Example example_from_tree(const Grammar& g, const Templates& t, const ParseTree& tree, Rng& rng) {
  std::string sentence = render_sentence(g, t, tree, rng);
  if (tokenize_source(sentence).empty()) {
    throw CorpusError("templates render an empty sentence for '" + join_tokens(yield_of(g, tree)) + "'");
  }
  return make_example(g, sentence, join_tokens(yield_of(g, tree)));
}

}  // namespace

std::vector<Example> synthesize(const Grammar& g, const Templates& templates, std::size_t n, std::uint64_t seed,
                                const SynthesisOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParseTree tree = sample_tree(g, g.start(), 0, options.max_depth, rng);
    out.push_back(example_from_tree(g, templates, tree, rng));
  }
  return out;
}

std::vector<Example> synthesize_exhaustive(const Grammar& g, const Templates& templates, std::uint64_t seed,
                                           const SynthesisOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out;
  for (const ParseTree& tree : all_trees(g, g.start(), 0, options)) {
    out.push_back(example_from_tree(g, templates, tree, rng));
  }
  return out;
}

}  // namespace cfgdec
