#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfgdec/neural/lstm.hpp"
#include "cfgdec/vocabulary.hpp"

namespace cfgdec::neural {

// Reads `sentence <sep> context <eos>` and returns the final hidden state as
// the encoding c. Sentence and context ids share one embedding table.
template <typename Scalar>
struct EncoderNet {
  Matrix<Scalar> embedding;  // embed_dim x vocab_size, one column per id
  LstmParams<Scalar> lstm;

  EncoderNet() = default;
  EncoderNet(Index vocab_size, Index embed_dim, Index hidden_dim)
      : embedding(Matrix<Scalar>::Zero(embed_dim, vocab_size)), lstm(embed_dim, hidden_dim) {}

  Index vocab_size() const { return embedding.cols(); }
  Index hidden_dim() const { return lstm.hidden_dim(); }

  void views(std::vector<TensorView<Scalar>>& out, const std::string& prefix) {
    append_view(out, prefix + ".embedding", embedding);
    lstm.views(out, prefix + ".lstm");
  }
};

// Distribution over a fixed output set of size K. Input ids are 0..K-1 (the
// previously chosen output) plus K for <bos>. The encoding c is concatenated to
// the input embedding at every step.
template <typename Scalar>
struct DecoderNet {
  Matrix<Scalar> embedding;  // embed_dim x (K + 1)
  LstmParams<Scalar> lstm;   // input embed_dim + context_dim
  Matrix<Scalar> projection;  // K x hidden_dim
  Vector<Scalar> projection_bias;

  DecoderNet() = default;
  DecoderNet(Index output_count, Index embed_dim, Index context_dim, Index hidden_dim)
      : embedding(Matrix<Scalar>::Zero(embed_dim, output_count + 1)),
        lstm(embed_dim + context_dim, hidden_dim),
        projection(Matrix<Scalar>::Zero(output_count, hidden_dim)),
        projection_bias(Vector<Scalar>::Zero(output_count)) {}

  Index output_count() const { return projection.rows(); }
  int bos() const { return static_cast<int>(output_count()); }
  Index embed_dim() const { return embedding.rows(); }
  Index context_dim() const { return lstm.input_dim() - embed_dim(); }

  void views(std::vector<TensorView<Scalar>>& out, const std::string& prefix) {
    append_view(out, prefix + ".embedding", embedding);
    lstm.views(out, prefix + ".lstm");
    append_view(out, prefix + ".projection", projection);
    append_view(out, prefix + ".projection_bias", projection_bias);
  }
};

// The encoder-decoder pair owned by one nonterminal (or by the whole baseline
// model). `version` increments on every parameter update so stale tapes can be
// detected.
template <typename Scalar>
struct EncDecPair {
  int owner = -1;
  EncoderNet<Scalar> encoder;
  DecoderNet<Scalar> decoder;
  std::uint64_t version = 0;

  EncDecPair() = default;
  EncDecPair(int owner_id, Index encoder_vocab, Index output_count, Index embed_dim, Index hidden_dim)
      : owner(owner_id),
        encoder(encoder_vocab, embed_dim, hidden_dim),
        decoder(output_count, embed_dim, hidden_dim, hidden_dim) {}

  // Same shapes, all zeros: the gradient accumulator for this pair.
  EncDecPair zeros_like() const {
    EncDecPair z = *this;
    for (auto& v : z.views()) std::fill(v.values.begin(), v.values.end(), Scalar(0));
    z.version = 0;
    return z;
  }

  std::vector<TensorView<Scalar>> views() {
    std::vector<TensorView<Scalar>> out;
    encoder.views(out, "encoder");
    decoder.views(out, "decoder");
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto& v : views()) n += v.values.size();
    return n;
  }
};

// Uniform(-scale, scale) weights and embeddings, zero biases except the forget
// gate bias, which starts at forget_bias.
template <typename Scalar, typename Rng>
void initialize(EncDecPair<Scalar>& pair, Rng& rng, Scalar scale = Scalar(0.08),
                Scalar forget_bias = Scalar(1)) {
  std::uniform_real_distribution<Scalar> uniform(-scale, scale);
  auto fill = [&](auto& m) {
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
  };
  fill(pair.encoder.embedding);
  fill(pair.encoder.lstm.weights);
  fill(pair.decoder.embedding);
  fill(pair.decoder.lstm.weights);
  fill(pair.decoder.projection);
  for (auto* lstm : {&pair.encoder.lstm, &pair.decoder.lstm}) {
    lstm->bias.setZero();
    lstm->gate_bias(kForgetGate).setConstant(forget_bias);
  }
  pair.decoder.projection_bias.setZero();
}

template <typename Scalar>
struct EncoderTape {
  std::vector<int> inputs;
  std::vector<LstmStep<Scalar>> steps;
};

inline std::vector<int> encoder_sequence(std::span<const int> sentence, std::span<const int> context) {
  std::vector<int> seq(sentence.begin(), sentence.end());
  seq.push_back(reserved::kSep);
  seq.insert(seq.end(), context.begin(), context.end());
  seq.push_back(reserved::kEos);
  return seq;
}

template <typename Scalar>
Vector<Scalar> encode(const EncoderNet<Scalar>& e, std::span<const int> sentence,
                      std::span<const int> context, EncoderTape<Scalar>* tape = nullptr) {
  if (sentence.empty()) throw std::invalid_argument("encode: empty sentence");
  const std::vector<int> seq = encoder_sequence(sentence, context);
  const Index h = e.hidden_dim();
  Vector<Scalar> hidden = Vector<Scalar>::Zero(h);
  Vector<Scalar> cell = Vector<Scalar>::Zero(h);
  if (tape) {
    tape->inputs = seq;
    tape->steps.clear();
    tape->steps.reserve(seq.size());
  }
  for (int id : seq) {
    if (id < 0 || id >= e.vocab_size()) {
      throw std::out_of_range("encode: id " + std::to_string(id) + " outside encoder vocabulary");
    }
    LstmStep<Scalar> s = lstm_step(e.lstm, e.embedding.col(id), hidden, cell);
    hidden = s.hidden;
    cell = s.cell;
    if (tape) tape->steps.push_back(std::move(s));
  }
  return hidden;
}

template <typename Scalar>
Vector<Scalar> softmax(const ConstRef<Scalar>& logits) {
  Vector<Scalar> p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

template <typename Scalar>
struct DecoderStep {
  int input = 0;
  LstmStep<Scalar> lstm;
  Vector<Scalar> probabilities;
};

// One decoder step: input id `prev` (an output index, or bos()) conditioned on
// the encoding c, from state (hidden, cell).
template <typename Scalar>
DecoderStep<Scalar> decode_step(const DecoderNet<Scalar>& d, const ConstRef<Scalar>& c,
                                int prev, const ConstRef<Scalar>& hidden,
                                const ConstRef<Scalar>& cell) {
  if (prev < 0 || prev > d.bos()) {
    throw std::out_of_range("decode_step: unknown symbol id " + std::to_string(prev));
  }
  if (c.size() != d.context_dim()) throw std::invalid_argument("decode_step: encoding dimension mismatch");
  Vector<Scalar> x(d.embed_dim() + c.size());
  x << d.embedding.col(prev), c;
  DecoderStep<Scalar> s;
  s.input = prev;
  s.lstm = lstm_step(d.lstm, x, hidden, cell);
  s.probabilities = softmax<Scalar>(d.projection * s.lstm.hidden + d.projection_bias);
  return s;
}

// Stateful greedy/teacher-forced driver over decode_step.
template <typename Scalar>
class DecoderRun {
 public:
  DecoderRun(const DecoderNet<Scalar>& d, Vector<Scalar> c)
      : d_(&d),
        c_(std::move(c)),
        hidden_(Vector<Scalar>::Zero(d.lstm.hidden_dim())),
        cell_(Vector<Scalar>::Zero(d.lstm.hidden_dim())) {}

  const Vector<Scalar>& feed(int prev) {
    last_ = decode_step(*d_, c_, prev, hidden_, cell_);
    hidden_ = last_.lstm.hidden;
    cell_ = last_.lstm.cell;
    return last_.probabilities;
  }
  const DecoderStep<Scalar>& last() const { return last_; }

 private:
  const DecoderNet<Scalar>* d_;
  Vector<Scalar> c_;
  Vector<Scalar> hidden_, cell_;
  DecoderStep<Scalar> last_;
};

inline constexpr double kProbabilityFloor = 1e-12;

// Mean negative log-probability of the gold ids. Probabilities below 1e-12
// are clamped; `clamped` (if given) counts how many.
template <typename Scalar>
Scalar nll_loss(std::span<const Vector<Scalar>> predicted, std::span<const int> gold, int* clamped = nullptr) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("nll_loss: length mismatch");
  if (gold.empty()) return Scalar(0);
  Scalar total = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] < 0 || gold[t] >= predicted[t].size()) throw std::out_of_range("nll_loss: gold id outside support");
    Scalar p = predicted[t](gold[t]);
    if (p < Scalar(kProbabilityFloor)) {
      p = Scalar(kProbabilityFloor);
      if (clamped) ++*clamped;
    }
    total -= std::log(p);
  }
  return total / static_cast<Scalar>(gold.size());
}

// Forward record of one teacher-forced pass: encoder over (sentence, context),
// decoder fed <bos>, gold[0], ..., gold[T-2] and scored against gold.
template <typename Scalar>
struct PairTape {
  const EncDecPair<Scalar>* pair = nullptr;
  std::uint64_t version = 0;
  EncoderTape<Scalar> encoder;
  Vector<Scalar> encoding;
  std::vector<DecoderStep<Scalar>> decoder;
  std::vector<int> gold;
  Scalar loss = 0;
  int clamped = 0;
};

template <typename Scalar>
Scalar forward(const EncDecPair<Scalar>& pair, std::span<const int> sentence, std::span<const int> context,
               std::span<const int> gold, PairTape<Scalar>& tape) {
  if (gold.empty()) throw std::invalid_argument("forward: empty gold sequence");
  tape.pair = &pair;
  tape.version = pair.version;
  tape.encoding = encode(pair.encoder, sentence, context, &tape.encoder);
  tape.gold.assign(gold.begin(), gold.end());
  tape.decoder.clear();
  DecoderRun<Scalar> run(pair.decoder, tape.encoding);
  std::vector<Vector<Scalar>> dists;
  int prev = pair.decoder.bos();
  for (int g : gold) {
    if (g < 0 || g >= pair.decoder.bos()) throw std::out_of_range("forward: gold id outside output set");
    dists.push_back(run.feed(prev));
    tape.decoder.push_back(run.last());
    prev = g;
  }
  tape.clamped = 0;
  tape.loss = nll_loss<Scalar>(dists, gold, &tape.clamped);
  return tape.loss;
}

// Exact gradient of tape.loss w.r.t. every parameter of the pair, by
// backpropagation through the decoder steps, into the encoding, and back
// through the encoder steps. Accumulates into `grad`.
template <typename Scalar>
void backward(const EncDecPair<Scalar>& pair, const PairTape<Scalar>& tape, EncDecPair<Scalar>& grad) {
  if (tape.pair != &pair || tape.decoder.empty()) throw std::logic_error("backward: tape missing");
  if (tape.version != pair.version) throw std::logic_error("backward: stale tape (parameters changed)");
  const DecoderNet<Scalar>& dec = pair.decoder;
  const Index h = dec.lstm.hidden_dim();
  const Index embed = dec.embed_dim();
  const Scalar scale = Scalar(1) / static_cast<Scalar>(tape.gold.size());

  Vector<Scalar> d_hidden_next = Vector<Scalar>::Zero(h);
  Vector<Scalar> d_cell_next = Vector<Scalar>::Zero(h);
  Vector<Scalar> d_encoding = Vector<Scalar>::Zero(dec.context_dim());
  for (std::size_t t = tape.decoder.size(); t-- > 0;) {
    const DecoderStep<Scalar>& step = tape.decoder[t];
    Vector<Scalar> d_logits = step.probabilities * scale;
    // Clamped probabilities have zero gradient through the floor.
    if (step.probabilities(tape.gold[t]) >= Scalar(kProbabilityFloor)) d_logits(tape.gold[t]) -= scale;
    else d_logits.setZero();
    grad.decoder.projection.noalias() += d_logits * step.lstm.hidden.transpose();
    grad.decoder.projection_bias += d_logits;
    Vector<Scalar> d_hidden = dec.projection.transpose() * d_logits + d_hidden_next;
    LstmStepGrad<Scalar> g = lstm_step_backward(dec.lstm, step.lstm, d_hidden, d_cell_next, grad.decoder.lstm);
    grad.decoder.embedding.col(step.input) += g.d_input.head(embed);
    d_encoding += g.d_input.tail(dec.context_dim());
    d_hidden_next = std::move(g.d_hidden_prev);
    d_cell_next = std::move(g.d_cell_prev);
  }

  const EncoderNet<Scalar>& enc = pair.encoder;
  Vector<Scalar> d_hidden = d_encoding;
  Vector<Scalar> d_cell = Vector<Scalar>::Zero(enc.hidden_dim());
  for (std::size_t t = tape.encoder.steps.size(); t-- > 0;) {
    LstmStepGrad<Scalar> g = lstm_step_backward(enc.lstm, tape.encoder.steps[t], d_hidden, d_cell, grad.encoder.lstm);
    grad.encoder.embedding.col(tape.encoder.inputs[t]) += g.d_input;
    d_hidden = std::move(g.d_hidden_prev);
    d_cell = std::move(g.d_cell_prev);
  }
}

}  // namespace cfgdec::neural
