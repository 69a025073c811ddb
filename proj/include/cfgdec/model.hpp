#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfgdec/grammar.hpp"
#include "cfgdec/neural/network.hpp"
#include "cfgdec/vocabulary.hpp"

namespace cfgdec {

using Real = double;
using Pair = neural::EncDecPair<Real>;
using Vec = neural::Vector<Real>;

struct ModelDims {
  int embed_dim = 300;
  int hidden_dim = 200;
  // Half-width of the uniform initialization; not stored in checkpoints.
  double init_scale = 0.08;
};

// Output symbols of the decoder owned by one nonterminal X: the distinct
// symbols occurring in tails of X's rules, in order of first appearance, then
// the stop element at index size() - 1.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const Grammar& g, int nonterminal);

  std::optional<int> index_of(const Symbol& s) const;
  const Symbol& symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  int stop() const { return static_cast<int>(symbols_.size()); }
  int size() const { return static_cast<int>(symbols_.size()) + 1; }

 private:
  std::vector<Symbol> symbols_;
};

// Encoder input ids: the source vocabulary first (reserved ids included),
// then one id per grammar terminal, so sentence words and context terminals
// share one embedding table without colliding.
class EncoderVocab {
 public:
  EncoderVocab() = default;
  EncoderVocab(Vocabulary source, std::size_t terminal_count)
      : source_(std::move(source)), terminal_count_(terminal_count) {}

  const Vocabulary& source() const { return source_; }
  std::size_t size() const { return source_.size() + terminal_count_; }
  int terminal_id(int terminal) const { return static_cast<int>(source_.size()) + terminal; }
  std::vector<int> sentence_ids(const Tokens& words) const { return source_.encode(words); }
  std::vector<int> context_ids(std::span<const int> terminals) const;

 private:
  Vocabulary source_;
  std::size_t terminal_count_ = 0;
};

// The encoder CFG-decoder: one encoder-decoder pair per nonterminal.
class CfgDecoderModel {
 public:
  CfgDecoderModel() = default;
  // Randomly initialized from `seed`, pairs in nonterminal order.
  CfgDecoderModel(const Grammar& g, Vocabulary source, ModelDims dims, std::uint64_t seed);

  std::uint64_t grammar_hash() const { return grammar_hash_; }
  const ModelDims& dims() const { return dims_; }
  const EncoderVocab& vocab() const { return vocab_; }
  std::size_t nonterminal_count() const { return pairs_.size(); }

  Pair& pair(int nonterminal) { return pairs_.at(static_cast<std::size_t>(nonterminal)); }
  const Pair& pair(int nonterminal) const { return pairs_.at(static_cast<std::size_t>(nonterminal)); }
  const OutputSet& outputs(int nonterminal) const { return outputs_.at(static_cast<std::size_t>(nonterminal)); }

  // Throws ModelMismatchError unless g is the grammar the model was built for.
  void check_grammar(const Grammar& g) const;

  friend bool operator==(const CfgDecoderModel& a, const CfgDecoderModel& b);

 private:
  friend class CheckpointAccess;
  std::uint64_t grammar_hash_ = 0;
  ModelDims dims_;
  EncoderVocab vocab_;
  std::vector<Pair> pairs_;
  std::vector<OutputSet> outputs_;
};

// Ordinary encoder-decoder over the full terminal vocabulary plus <eos>; no
// grammar constraint at decoding time.
class BaselineModel {
 public:
  BaselineModel() = default;
  BaselineModel(const Grammar& g, Vocabulary source, ModelDims dims, std::uint64_t seed);

  std::uint64_t grammar_hash() const { return grammar_hash_; }
  const ModelDims& dims() const { return dims_; }
  const EncoderVocab& vocab() const { return vocab_; }
  Pair& pair() { return pair_; }
  const Pair& pair() const { return pair_; }
  int eos() const { return static_cast<int>(pair_.decoder.output_count()) - 1; }

  void check_grammar(const Grammar& g) const;

  friend bool operator==(const BaselineModel& a, const BaselineModel& b);

 private:
  friend class CheckpointAccess;
  std::uint64_t grammar_hash_ = 0;
  ModelDims dims_;
  EncoderVocab vocab_;
  Pair pair_;
};

// Binary checkpoint, little-endian; layout in docs/formats.md.
enum class ModelKind : std::uint32_t { kCfgDecoder = 1, kBaseline = 2 };

void save_checkpoint(const CfgDecoderModel& model, const std::string& path);
void save_checkpoint(const BaselineModel& model, const std::string& path);
ModelKind checkpoint_kind(const std::string& path);
// Both verify the stored grammar hash against g.
CfgDecoderModel load_cfg_checkpoint(const std::string& path, const Grammar& g);
BaselineModel load_baseline_checkpoint(const std::string& path, const Grammar& g);

}  // namespace cfgdec
