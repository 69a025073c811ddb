#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace cfgdec::neural {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;
// Non-deducing so that expressions and plain vectors bind alike.
template <typename Scalar>
using ConstRef = std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>;

// Flat view of one parameter tensor, used by optimizers and gradient checks.
template <typename Scalar>
struct TensorView {
  std::string name;
  std::span<Scalar> values;
};

template <typename Scalar, typename Derived>
void append_view(std::vector<TensorView<Scalar>>& out, std::string name,
                 Eigen::PlainObjectBase<Derived>& tensor) {
  out.push_back({std::move(name), std::span<Scalar>(tensor.data(), static_cast<std::size_t>(tensor.size()))});
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// Single-layer LSTM. The four gates share one stacked weight matrix whose row
// blocks are, in order: input gate, forget gate, output gate, candidate. Each
// block is hidden x (input + hidden) and acts on the concatenation [x; h_prev].
template <typename Scalar>
struct LstmParams {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;

  LstmParams() = default;
  LstmParams(Index input_dim, Index hidden_dim)
      : weights(Matrix<Scalar>::Zero(4 * hidden_dim, input_dim + hidden_dim)),
        bias(Vector<Scalar>::Zero(4 * hidden_dim)) {}

  Index hidden_dim() const { return bias.size() / 4; }
  Index input_dim() const { return weights.cols() - hidden_dim(); }

  auto gate_weights(int gate) { return weights.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto gate_weights(int gate) const { return weights.middleRows(gate * hidden_dim(), hidden_dim()); }
  auto gate_bias(int gate) { return bias.segment(gate * hidden_dim(), hidden_dim()); }
  auto gate_bias(int gate) const { return bias.segment(gate * hidden_dim(), hidden_dim()); }

  void views(std::vector<TensorView<Scalar>>& out, const std::string& prefix) {
    append_view(out, prefix + ".weights", weights);
    append_view(out, prefix + ".bias", bias);
  }
};

enum Gate : int { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };

// Everything the backward pass needs from one forward step.
template <typename Scalar>
struct LstmStep {
  Vector<Scalar> input;  // [x; h_prev]
  Vector<Scalar> cell_prev;
  Vector<Scalar> input_gate, forget_gate, output_gate, candidate;
  Vector<Scalar> cell;
  Vector<Scalar> tanh_cell;
  Vector<Scalar> hidden;
};

template <typename Scalar>
LstmStep<Scalar> lstm_step(const LstmParams<Scalar>& p, const ConstRef<Scalar>& x,
                           const ConstRef<Scalar>& h_prev,
                           const ConstRef<Scalar>& c_prev) {
  const Index h = p.hidden_dim();
  if (x.size() != p.input_dim() || h_prev.size() != h || c_prev.size() != h) {
    throw std::invalid_argument("lstm_step: dimension mismatch (input " + std::to_string(x.size()) +
                                " vs " + std::to_string(p.input_dim()) + ", hidden " +
                                std::to_string(h_prev.size()) + "/" + std::to_string(c_prev.size()) +
                                " vs " + std::to_string(h) + ")");
  }
  LstmStep<Scalar> s;
  s.input.resize(x.size() + h);
  s.input << x, h_prev;
  s.cell_prev = c_prev;
  Vector<Scalar> pre = p.weights * s.input + p.bias;
  s.input_gate = pre.segment(0, h).unaryExpr([](Scalar v) { return sigmoid(v); });
  s.forget_gate = pre.segment(h, h).unaryExpr([](Scalar v) { return sigmoid(v); });
  s.output_gate = pre.segment(2 * h, h).unaryExpr([](Scalar v) { return sigmoid(v); });
  s.candidate = pre.segment(3 * h, h).array().tanh();
  s.cell = s.forget_gate.cwiseProduct(c_prev) + s.input_gate.cwiseProduct(s.candidate);
  s.tanh_cell = s.cell.array().tanh();
  s.hidden = s.output_gate.cwiseProduct(s.tanh_cell);
  return s;
}

template <typename Scalar>
struct LstmStepGrad {
  Vector<Scalar> d_input;  // w.r.t. x
  Vector<Scalar> d_hidden_prev;
  Vector<Scalar> d_cell_prev;
};

// Accumulates parameter gradients of one step into `grad` and returns the
// gradients flowing to the step's inputs.
template <typename Scalar>
LstmStepGrad<Scalar> lstm_step_backward(const LstmParams<Scalar>& p, const LstmStep<Scalar>& s,
                                        const ConstRef<Scalar>& d_hidden,
                                        const ConstRef<Scalar>& d_cell,
                                        LstmParams<Scalar>& grad) {
  const Index h = p.hidden_dim();
  const auto one = Vector<Scalar>::Ones(h).array();
  Vector<Scalar> dc = d_cell + (d_hidden.array() * s.output_gate.array() *
                                (one - s.tanh_cell.array().square())).matrix();
  Vector<Scalar> d_pre(4 * h);
  d_pre.segment(0, h) = (dc.array() * s.candidate.array() * s.input_gate.array() *
                         (one - s.input_gate.array())).matrix();
  d_pre.segment(h, h) = (dc.array() * s.cell_prev.array() * s.forget_gate.array() *
                         (one - s.forget_gate.array())).matrix();
  d_pre.segment(2 * h, h) = (d_hidden.array() * s.tanh_cell.array() * s.output_gate.array() *
                             (one - s.output_gate.array())).matrix();
  d_pre.segment(3 * h, h) = (dc.array() * s.input_gate.array() *
                             (one - s.candidate.array().square())).matrix();

  grad.weights.noalias() += d_pre * s.input.transpose();
  grad.bias += d_pre;
  Vector<Scalar> d_concat = p.weights.transpose() * d_pre;

  LstmStepGrad<Scalar> out;
  out.d_input = d_concat.head(p.input_dim());
  out.d_hidden_prev = d_concat.tail(h);
  out.d_cell_prev = dc.cwiseProduct(s.forget_gate);
  return out;
}

}  // namespace cfgdec::neural
