#pragma once

#include <cmath>
#include <stdexcept>

#include "cfgdec/neural/network.hpp"

namespace cfgdec::neural {

// lr(epoch) = start * decay^epoch, with gradient-norm clipping before the step.
template <typename Scalar>
struct SgdSchedule {
  Scalar lr_start = Scalar(1);
  Scalar lr_decay = Scalar(0.95);
  Scalar clip_norm = Scalar(5);

  Scalar learning_rate(int epoch) const { return lr_start * std::pow(lr_decay, static_cast<Scalar>(epoch)); }
};

enum class UpdateStatus { kApplied, kClipped, kSkippedNonFinite };

template <typename Scalar>
struct UpdateResult {
  UpdateStatus status = UpdateStatus::kApplied;
  Scalar grad_norm = 0;
  Scalar learning_rate = 0;
};

// p <- p - lr(epoch) * g, after rescaling g to clip_norm if its global norm
// exceeds it. A non-finite gradient leaves the parameters untouched.
template <typename Scalar>
UpdateResult<Scalar> sgd_update(EncDecPair<Scalar>& params, EncDecPair<Scalar>& grads, int epoch,
                                const SgdSchedule<Scalar>& schedule) {
  auto p = params.views();
  auto g = grads.views();
  if (p.size() != g.size()) throw std::invalid_argument("sgd_update: shape mismatch");
  Scalar sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].values.size() != g[i].values.size()) throw std::invalid_argument("sgd_update: shape mismatch in " + p[i].name);
    for (Scalar v : g[i].values) sq += v * v;
  }
  UpdateResult<Scalar> result;
  result.grad_norm = std::sqrt(sq);
  result.learning_rate = schedule.learning_rate(epoch);
  if (!std::isfinite(result.grad_norm)) {
    result.status = UpdateStatus::kSkippedNonFinite;
    return result;
  }
  Scalar step = result.learning_rate;
  if (schedule.clip_norm > 0 && result.grad_norm > schedule.clip_norm) {
    step *= schedule.clip_norm / result.grad_norm;
    result.status = UpdateStatus::kClipped;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    Eigen::Map<Vector<Scalar>> pv(p[i].values.data(), static_cast<Index>(p[i].values.size()));
    Eigen::Map<const Vector<Scalar>> gv(g[i].values.data(), static_cast<Index>(g[i].values.size()));
    pv -= step * gv;
  }
  ++params.version;
  return result;
}

}  // namespace cfgdec::neural
