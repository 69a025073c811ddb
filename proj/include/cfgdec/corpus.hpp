#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cfgdec/earley.hpp"
#include "cfgdec/grammar.hpp"
#include "cfgdec/vocabulary.hpp"

namespace cfgdec {

// One (sentence, query) pair. The derivation is computed once at ingestion.
struct Example {
  Tokens source;
  Tokens target;
  Derivation derivation;
};

struct Corpus {
  std::vector<Example> examples;
  std::size_t rejected = 0;
  std::vector<std::string> diagnostics;  // one per rejected line
};

// Lowercases, splits on whitespace and splits '?' into its own token.
Tokens tokenize_source(std::string_view text);

// Builds the pair; throws CorpusError (empty source) or ParseError (target not
// in L(g), token not in the terminal set).
Example make_example(const Grammar& g, std::string_view source, std::string_view target);

// TSV corpus: `source<TAB>target` per line, '#' comment lines and blank lines
// ignored. A malformed line is always an error; a target that fails to parse
// is rejected and counted, and the load fails unless allow_skip is set.
Corpus load_corpus(std::string_view text, const Grammar& g, bool allow_skip = false);
Corpus load_corpus_file(const std::string& path, const Grammar& g, bool allow_skip = false);

std::string write_corpus(const std::vector<Example>& examples);

// Source vocabulary from the training sentences only.
Vocabulary build_source_vocabulary(const std::vector<Example>& examples);

// NL templates for synthesis:
//
//   J "?capital" = the capital          lexical fragment for rule J -> "?capital"
//   BL "{" =                            empty fragment
//   pattern = what is {P.1} of {J.1}    sentence pattern
//
// A slot {X.n} is the fragment of the n-th lexical rule headed by X, counting
// left to right in the query. With no pattern lines, a sentence is the
// fragments of all lexical rules in query order.
struct Templates {
  std::map<std::pair<std::string, std::string>, std::string> fragments;  // (head, terminal) -> words
  std::vector<std::string> patterns;
};

Templates load_templates(std::string_view text);
Templates load_templates_file(const std::string& path);

struct SynthesisOptions {
  std::size_t max_depth = 32;        // sampled trees deeper than this are an error
  std::size_t max_exhaustive = 100'000;
};

// n pairs from derivations sampled with uniform rule choice at every node.
// Throws CorpusError when a template is missing or the depth bound is hit.
std::vector<Example> synthesize(const Grammar& g, const Templates& templates, std::size_t n, std::uint64_t seed,
                                const SynthesisOptions& options = {});

// One pair per distinct tree of g (non-recursive grammars only).
std::vector<Example> synthesize_exhaustive(const Grammar& g, const Templates& templates, std::uint64_t seed,
                                           const SynthesisOptions& options = {});

}  // namespace cfgdec
