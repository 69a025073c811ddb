#include "cfgdec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cfgdec/error.hpp"

namespace cfgdec {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must be in (0, 1]");
  if (hidden_dim < 1 || embed_dim < 1) throw std::invalid_argument("dimensions must be positive");
  if (!(lr_start > 0.0)) throw std::invalid_argument("lr_start must be positive");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be positive");
}

Pair& TrainingWorkspace::gradients_for(const Pair& pair) {
  const auto x = static_cast<std::size_t>(std::max(pair.owner, 0));
  if (grads_.size() <= x) grads_.resize(x + 1);
  Pair& g = grads_[x];
  if (g.owner != pair.owner || g.encoder.embedding.size() != pair.encoder.embedding.size() ||
      g.decoder.projection.size() != pair.decoder.projection.size()) {
    g = pair.zeros_like();
  } else {
    for (auto& v : g.views()) std::fill(v.values.begin(), v.values.end(), 0.0);
  }
  return g;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Forward, backward and one SGD step on a single pair.
double fit_step(Pair& pair, std::span<const int> sentence, std::span<const int> context, std::span<const int> gold,
                int epoch, const neural::SgdSchedule<Real>& schedule, TrainingWorkspace& workspace,
                PairTraining& acc) {
  neural::PairTape<Real> tape;
  const double loss = neural::forward(pair, sentence, context, gold, tape);
  acc.clamped += static_cast<std::size_t>(tape.clamped);
  if (!std::isfinite(loss)) return loss;
  Pair& grads = workspace.gradients_for(pair);
  neural::backward(pair, tape, grads);
  auto result = neural::sgd_update(pair, grads, epoch, schedule);
  if (result.status == neural::UpdateStatus::kSkippedNonFinite) ++acc.skipped_updates;
  return loss;
}

}  // namespace

PairTraining train_pair(CfgDecoderModel& model, const Grammar& g, std::span<const int> sentence,
                        const Derivation& derivation, ContextSize ctx, int epoch,
                        const neural::SgdSchedule<Real>& schedule, TrainingWorkspace& workspace) {
  PairTraining out;
  Context context(ctx);
  for (int r : derivation.steps) {
    const Rule& rule = g.rule(r);
    const OutputSet& outputs = model.outputs(rule.head);
    VisitRecord visit{rule.head, r, context.as_vector(), {}, 0.0};
    for (const Symbol& s : rule.tail) visit.gold.push_back(*outputs.index_of(s));
    visit.gold.push_back(outputs.stop());

    std::vector<int> ctx_ids = model.vocab().context_ids(visit.context);
    visit.loss = fit_step(model.pair(rule.head), sentence, ctx_ids, visit.gold, epoch, schedule, workspace, out);
    out.total_loss += visit.loss;
    out.visits.push_back(std::move(visit));

    if (rule.is_terminal_rule()) context.push(rule.tail.front().id);
  }
  return out;
}

PairTraining train_pair(CfgDecoderModel& model, const Grammar& g, const Tokens& sentence, const Tokens& query,
                        ContextSize ctx, int epoch, const neural::SgdSchedule<Real>& schedule) {
  model.check_grammar(g);
  Derivation d = derivation_of(g, parse(g, query).tree);
  TrainingWorkspace ws;
  std::vector<int> ids = model.vocab().sentence_ids(sentence);
  return train_pair(model, g, ids, d, ctx, epoch, schedule, ws);
}

namespace {

template <typename Body>
TrainReport run_epochs(std::size_t corpus_size, const TrainConfig& cfg, const EpochCallback& on_epoch, Body&& body) {
  cfg.validate();
  if (corpus_size == 0) throw TrainingError("empty training corpus");
  TrainReport report;
  std::mt19937_64 order_rng(derive_seed(cfg.seed, 0x5eed));
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), 0);
  const auto t_start = Clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::shuffle(order.begin(), order.end(), order_rng);
    PairTraining acc;
    std::size_t visits = 0;
    for (std::size_t idx : order) {
      PairTraining pt = body(idx, epoch);
      visits += pt.visits.empty() ? 1 : pt.visits.size();
      acc.total_loss += pt.total_loss;
      acc.skipped_updates += pt.skipped_updates;
      acc.clamped += pt.clamped;
    }
    EpochRecord rec{epoch, acc.total_loss / static_cast<double>(visits), cfg.schedule().learning_rate(epoch),
                    seconds_since(t0), acc.skipped_updates, acc.clamped};
    if (!std::isfinite(rec.mean_loss)) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + " (" +
                          std::to_string(acc.skipped_updates) + " skipped updates)");
    }
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  report.total_seconds = seconds_since(t_start);
  return report;
}

}  // namespace

TrainReport train(CfgDecoderModel& model, const Grammar& g, const std::vector<Example>& corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  model.check_grammar(g);
  std::vector<std::vector<int>> sentences;
  sentences.reserve(corpus.size());
  for (const Example& ex : corpus) sentences.push_back(model.vocab().sentence_ids(ex.source));
  TrainingWorkspace ws;
  const auto schedule = cfg.schedule();
  return run_epochs(corpus.size(), cfg, on_epoch, [&](std::size_t i, int epoch) {
    return train_pair(model, g, sentences[i], corpus[i].derivation, cfg.ctx, epoch, schedule, ws);
  });
}

TrainReport train_baseline(BaselineModel& model, const Grammar& g, const std::vector<Example>& corpus,
                           const TrainConfig& cfg, const EpochCallback& on_epoch) {
  model.check_grammar(g);
  std::vector<std::vector<int>> sentences;
  std::vector<std::vector<int>> golds;
  for (const Example& ex : corpus) {
    sentences.push_back(model.vocab().sentence_ids(ex.source));
    std::vector<int> gold;
    for (const auto& t : ex.target) gold.push_back(*g.find_terminal(t));
    gold.push_back(model.eos());
    golds.push_back(std::move(gold));
  }
  TrainingWorkspace ws;
  const auto schedule = cfg.schedule();
  return run_epochs(corpus.size(), cfg, on_epoch, [&](std::size_t i, int epoch) {
    PairTraining pt;
    const double loss = fit_step(model.pair(), sentences[i], {}, golds[i], epoch, schedule, ws, pt);
    pt.total_loss = loss;
    pt.visits.push_back({-1, -1, {}, golds[i], loss});
    return pt;
  });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (n < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("corpus of " + std::to_string(n) + " pairs is smaller than " + std::to_string(folds) +
                                " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0xf01d));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  const std::size_t base = n / static_cast<std::size_t>(folds);
  const std::size_t extra = n % static_cast<std::size_t>(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < out.size(); ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

CrossValReport cross_validate(const Grammar& g, const std::vector<Example>& corpus, const TrainConfig& cfg,
                              const std::function<void(const FoldResult&)>& on_fold) {
  cfg.validate();
  auto partition = fold_partition(corpus.size(), cfg.folds, cfg.seed);
  CrossValReport report;
  report.ctx = cfg.ctx;
  for (std::size_t f = 0; f < partition.size(); ++f) {
    std::vector<bool> held_out(corpus.size(), false);
    for (std::size_t i : partition[f]) held_out[i] = true;
    std::vector<Example> train_set;
    std::vector<Example> test_set;
    for (std::size_t i = 0; i < corpus.size(); ++i) (held_out[i] ? test_set : train_set).push_back(corpus[i]);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, f + 1);
    CfgDecoderModel model(g, build_source_vocabulary(train_set), fold_cfg.dims(), fold_cfg.seed);
    TrainReport tr = train(model, g, train_set, fold_cfg);
    FoldResult result{static_cast<int>(f),
                      train_set.size(),
                      test_set.size(),
                      evaluate(model, g, test_set, cfg.ctx),
                      tr.total_seconds,
                      tr.epochs.back().mean_loss};
    report.mean_accuracy += result.metrics.accuracy();
    report.mean_syn_error_rate += result.metrics.syn_error_rate();
    report.train_seconds += result.train_seconds;
    if (on_fold) on_fold(result);
    report.folds.push_back(result);
  }
  report.mean_accuracy /= static_cast<double>(report.folds.size());
  report.mean_syn_error_rate /= static_cast<double>(report.folds.size());
  return report;
}

}  // namespace cfgdec
