#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfgdec/neural/lstm.hpp"
#include "cfgdec/neural/network.hpp"
#include "cfgdec/neural/sgd.hpp"

using namespace cfgdec::neural;
using V = Vector<double>;

namespace {

EncDecPair<double> random_pair(std::uint64_t seed, int vocab = 9, int outputs = 3, int embed = 4, int hidden = 5) {
  EncDecPair<double> p(0, vocab, outputs, embed, hidden);
  std::mt19937_64 rng(seed);
  initialize(p, rng, 0.5, 1.0);
  // Nonzero biases so their gradients are exercised too.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto* b : {&p.encoder.lstm.bias, &p.decoder.lstm.bias, &p.decoder.projection_bias}) {
    for (Index i = 0; i < b->size(); ++i) (*b)(i) += u(rng);
  }
  return p;
}

// Scalar re-derivation of one LSTM step, gate by gate.
void reference_step(const LstmParams<double>& p, const V& x, const V& h, const V& c, V& h_out, V& c_out) {
  const Index H = p.hidden_dim();
  const Index I = p.input_dim();
  h_out.resize(H);
  c_out.resize(H);
  for (Index k = 0; k < H; ++k) {
    double pre[4];
    for (int gate = 0; gate < 4; ++gate) {
      const Index row = gate * H + k;
      double s = p.bias(row);
      for (Index j = 0; j < I; ++j) s += p.weights(row, j) * x(j);
      for (Index j = 0; j < H; ++j) s += p.weights(row, I + j) * h(j);
      pre[gate] = s;
    }
    const double i = 1 / (1 + std::exp(-pre[0]));
    const double f = 1 / (1 + std::exp(-pre[1]));
    const double o = 1 / (1 + std::exp(-pre[2]));
    const double g = std::tanh(pre[3]);
    c_out(k) = f * c(k) + i * g;
    h_out(k) = o * std::tanh(c_out(k));
  }
}

}  // namespace

TEST(Lstm, ZeroWeightsGiveHalfGatesAndZeroCandidate) {
  LstmParams<double> p(3, 2);
  LstmStep<double> s = lstm_step(p, V::Zero(3), V::Zero(2), V::Zero(2));
  EXPECT_TRUE(s.input_gate.isApproxToConstant(0.5));
  EXPECT_TRUE(s.forget_gate.isApproxToConstant(0.5));
  EXPECT_TRUE(s.output_gate.isApproxToConstant(0.5));
  EXPECT_TRUE(s.candidate.isZero());
  EXPECT_TRUE(s.hidden.isZero());
  EXPECT_TRUE(s.cell.isZero());
}

TEST(Lstm, ZeroWeightsHalveTheCell) {
  LstmParams<double> p(3, 2);
  V c(2);
  c << 2.0, -4.0;
  LstmStep<double> s = lstm_step(p, V::Zero(3), V::Zero(2), c);
  EXPECT_DOUBLE_EQ(s.cell(0), 1.0);
  EXPECT_DOUBLE_EQ(s.cell(1), -2.0);
  EXPECT_DOUBLE_EQ(s.hidden(0), 0.5 * std::tanh(1.0));
}

TEST(Lstm, MatchesScalarReference) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  LstmParams<double> p(4, 3);
  for (Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = u(rng);
  for (Index i = 0; i < p.bias.size(); ++i) p.bias(i) = u(rng);
  V x = V::NullaryExpr(4, [&] { return u(rng); });
  V h = V::NullaryExpr(3, [&] { return u(rng); });
  V c = V::NullaryExpr(3, [&] { return u(rng); });
  LstmStep<double> s = lstm_step(p, x, h, c);
  V h_ref, c_ref;
  reference_step(p, x, h, c, h_ref, c_ref);
  EXPECT_LT((s.hidden - h_ref).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((s.cell - c_ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lstm, RejectsDimensionMismatch) {
  LstmParams<double> p(3, 2);
  EXPECT_THROW(lstm_step(p, V::Zero(4), V::Zero(2), V::Zero(2)), std::invalid_argument);
}

TEST(Lstm, TemplatedOnScalar) {
  LstmParams<float> p(2, 2);
  LstmStep<float> s = lstm_step(p, Vector<float>::Ones(2), Vector<float>::Zero(2), Vector<float>::Zero(2));
  EXPECT_FLOAT_EQ(s.input_gate(0), 0.5f);
}

TEST(Initialize, RangesAndForgetBias) {
  EncDecPair<double> p(0, 10, 4, 6, 5);
  std::mt19937_64 rng(1);
  initialize(p, rng);
  EXPECT_LE(p.encoder.lstm.weights.cwiseAbs().maxCoeff(), 0.08);
  EXPECT_LE(p.decoder.embedding.cwiseAbs().maxCoeff(), 0.08);
  EXPECT_TRUE(p.encoder.lstm.gate_bias(kForgetGate).isApproxToConstant(1.0));
  EXPECT_TRUE(p.encoder.lstm.gate_bias(kInputGate).isZero());
  EXPECT_TRUE(p.decoder.projection_bias.isZero());
}

TEST(Encode, ReadsSentenceSeparatorContextEos) {
  const std::vector<int> sentence{5, 6};
  const std::vector<int> context{7};
  EXPECT_EQ(encoder_sequence(sentence, context), (std::vector<int>{5, 6, cfgdec::reserved::kSep, 7,
                                                                   cfgdec::reserved::kEos}));
  EncDecPair<double> p = random_pair(3);
  EncoderTape<double> tape;
  V c = encode(p.encoder, sentence, context, &tape);
  EXPECT_EQ(tape.steps.size(), 5u);
  EXPECT_EQ(c.size(), 5);
  EXPECT_TRUE(c.isApprox(tape.steps.back().hidden));
}

TEST(Encode, RejectsEmptySentenceAndUnknownIds) {
  EncDecPair<double> p = random_pair(3);
  EXPECT_THROW(encode<double>(p.encoder, {}, {}), std::invalid_argument);
  const std::vector<int> bad{42};
  EXPECT_THROW(encode<double>(p.encoder, bad, {}), std::out_of_range);
}

TEST(Decode, ZeroProjectionIsUniform) {
  DecoderNet<double> d(2, 3, 4, 4);
  V c = V::Ones(4);
  DecoderStep<double> s = decode_step(d, c, d.bos(), V::Zero(4), V::Zero(4));
  ASSERT_EQ(s.probabilities.size(), 2);
  EXPECT_DOUBLE_EQ(s.probabilities(0), 0.5);
  DecoderNet<double> d3(3, 3, 4, 4);
  DecoderStep<double> s3 = decode_step(d3, c, d3.bos(), V::Zero(4), V::Zero(4));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(s3.probabilities(k), 1.0 / 3.0, 1e-15);
}

TEST(Decode, RejectsOutOfRangeInput) {
  DecoderNet<double> d(2, 3, 4, 4);
  EXPECT_THROW(decode_step(d, V::Ones(4), 3, V::Zero(4), V::Zero(4)), std::out_of_range);
}

TEST(Loss, UniformOverThreeIsLn3) {
  std::vector<V> dists{V::Constant(3, 1.0 / 3), V::Constant(3, 1.0 / 3)};
  const std::vector<int> gold{0, 2};
  EXPECT_NEAR(nll_loss<double>(dists, gold), std::log(3.0), 1e-15);
}

TEST(Loss, ClampsAtFloor) {
  V d(2);
  d << 1.0, 0.0;
  std::vector<V> dists{d};
  const std::vector<int> gold{1};
  int clamped = 0;
  EXPECT_NEAR(nll_loss<double>(dists, gold, &clamped), -std::log(1e-12), 1e-9);
  EXPECT_EQ(clamped, 1);
}

TEST(Backward, MatchesCentralDifferences) {
  EncDecPair<double> p = random_pair(11);
  const std::vector<int> sentence{5, 6, 7, 5};
  const std::vector<int> context{8, 6};
  const std::vector<int> gold{1, 0, 2};
  PairTape<double> tape;
  forward(p, sentence, context, gold, tape);
  EncDecPair<double> grad = p.zeros_like();
  backward(p, tape, grad);

  auto params = p.views();
  auto grads = grad.views();
  const double eps = 1e-5;
  double worst = 0;
  std::size_t checked = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) {
      double& w = params[t].values[i];
      const double saved = w;
      PairTape<double> scratch;
      w = saved + eps;
      const double up = forward(p, sentence, context, gold, scratch);
      w = saved - eps;
      const double down = forward(p, sentence, context, gold, scratch);
      w = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[t].values[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
      ++checked;
    }
  }
  EXPECT_GE(checked, 200u);
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, RejectsStaleTape) {
  EncDecPair<double> p = random_pair(2);
  const std::vector<int> sentence{5};
  const std::vector<int> gold{0};
  PairTape<double> tape;
  forward(p, sentence, {}, gold, tape);
  ++p.version;
  EncDecPair<double> grad = p.zeros_like();
  EXPECT_THROW(backward(p, tape, grad), std::logic_error);
  PairTape<double> empty;
  EXPECT_THROW(backward(p, empty, grad), std::logic_error);
}

TEST(Sgd, LearningRateSchedule) {
  SgdSchedule<double> s;
  EXPECT_DOUBLE_EQ(s.learning_rate(0), 1.0);
  EXPECT_DOUBLE_EQ(s.learning_rate(1), 0.95);
  EXPECT_NEAR(s.learning_rate(10), std::pow(0.95, 10), 1e-15);
}

TEST(Sgd, ZeroGradientLeavesParameters) {
  EncDecPair<double> p = random_pair(4);
  EncDecPair<double> before = p;
  EncDecPair<double> g = p.zeros_like();
  auto r = sgd_update(p, g, 0, SgdSchedule<double>{});
  EXPECT_EQ(r.status, UpdateStatus::kApplied);
  EXPECT_EQ(p.encoder.embedding, before.encoder.embedding);
  EXPECT_EQ(p.decoder.projection, before.decoder.projection);
  EXPECT_EQ(p.version, before.version + 1);
}

TEST(Sgd, ClipsToNorm) {
  EncDecPair<double> p = random_pair(4);
  EncDecPair<double> before = p;
  EncDecPair<double> g = p.zeros_like();
  g.decoder.projection_bias(0) = 50.0;
  auto r = sgd_update(p, g, 0, SgdSchedule<double>{});
  EXPECT_EQ(r.status, UpdateStatus::kClipped);
  EXPECT_DOUBLE_EQ(r.grad_norm, 50.0);
  EXPECT_NEAR(before.decoder.projection_bias(0) - p.decoder.projection_bias(0), 5.0, 1e-12);
}

TEST(Sgd, SkipsNonFinite) {
  EncDecPair<double> p = random_pair(4);
  EncDecPair<double> before = p;
  EncDecPair<double> g = p.zeros_like();
  g.encoder.embedding(0, 0) = std::nan("");
  auto r = sgd_update(p, g, 0, SgdSchedule<double>{});
  EXPECT_EQ(r.status, UpdateStatus::kSkippedNonFinite);
  EXPECT_EQ(p.encoder.embedding, before.encoder.embedding);
  EXPECT_EQ(p.version, before.version);
}

TEST(Encode, ZeroParametersGiveZeroEncoding) {
  EncDecPair<double> p(0, 9, 3, 4, 5);
  const std::vector<int> sentence{5, 6};
  EXPECT_TRUE(encode<double>(p.encoder, sentence, {}).isZero());
}

TEST(Encode, ContextChangesEncoding) {
  EncDecPair<double> p = random_pair(5);
  const std::vector<int> sentence{5, 6};
  const std::vector<int> a{7};
  const std::vector<int> b{8};
  EXPECT_FALSE(encode<double>(p.encoder, sentence, a).isApprox(encode<double>(p.encoder, sentence, b)));
}

TEST(Decode, SoftmaxIsADistribution) {
  EncDecPair<double> p = random_pair(6, 9, 7);
  DecoderRun<double> run(p.decoder, V::Constant(5, 0.3));
  for (int prev : {p.decoder.bos(), 2, 6}) {
    const V& probs = run.feed(prev);
    EXPECT_GE(probs.minCoeff(), 0.0);
    EXPECT_NEAR(probs.sum(), 1.0, 1e-9);
  }
}

TEST(Loss, OneHotCorrectIsZero) {
  V d = V::Zero(3);
  d(1) = 1.0;
  std::vector<V> dists{d};
  const std::vector<int> gold{1};
  EXPECT_EQ(nll_loss<double>(dists, gold), 0.0);
}

TEST(Backward, UnusedEmbeddingsGetNoGradient) {
  EncDecPair<double> p = random_pair(8);
  const std::vector<int> sentence{5, 6};
  const std::vector<int> gold{0, 2};
  PairTape<double> tape;
  forward(p, sentence, {}, gold, tape);
  EncDecPair<double> grad = p.zeros_like();
  backward(p, tape, grad);
  EXPECT_TRUE(grad.encoder.embedding.col(7).isZero());  // never read
  EXPECT_FALSE(grad.encoder.embedding.col(5).isZero());
  EXPECT_TRUE(grad.decoder.embedding.col(2).isZero());  // last gold is never fed back
  EXPECT_FALSE(grad.decoder.embedding.col(0).isZero());
}
