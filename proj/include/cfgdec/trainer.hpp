#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfgdec/controller.hpp"
#include "cfgdec/corpus.hpp"
#include "cfgdec/evaluate.hpp"
#include "cfgdec/model.hpp"
#include "cfgdec/neural/sgd.hpp"

namespace cfgdec {

struct TrainConfig {
  int epochs = 100;
  ContextSize ctx = ContextSize::unbounded();
  int hidden_dim = 200;
  int embed_dim = 300;
  double init_scale = 0.08;
  double lr_start = 1.0;
  double lr_decay = 0.95;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  int folds = 10;

  // Throws std::invalid_argument: epochs >= 1, folds >= 2, 0 < lr_decay <= 1,
  // positive dimensions.
  void validate() const;
  ModelDims dims() const { return {embed_dim, hidden_dim, init_scale}; }
  neural::SgdSchedule<Real> schedule() const { return {lr_start, lr_decay, clip_norm}; }
};

// One expansion of the derivation as seen by the trainer.
struct VisitRecord {
  int nonterminal;
  int rule;
  std::vector<int> context;  // window before the expansion, newest first
  std::vector<int> gold;     // decoder targets: tail output indices then stop
  double loss;
};

struct PairTraining {
  std::vector<VisitRecord> visits;
  double total_loss = 0;
  std::size_t skipped_updates = 0;  // non-finite gradients
  std::size_t clamped = 0;          // gold probabilities clamped at 1e-12

  double mean_loss() const { return visits.empty() ? 0.0 : total_loss / static_cast<double>(visits.size()); }
};

// Reusable gradient buffers, one per nonterminal, allocated on first use.
class TrainingWorkspace {
 public:
  Pair& gradients_for(const Pair& pair);

 private:
  std::vector<Pair> grads_;
};

// Walks the derivation in stack order. Each expansion X -> Y1..Ym gets a
// teacher-forced pass of <E_X, D_X> against Y1..Ym followed by the stop
// element, then an immediate SGD step on that pair; a terminal rule also
// pushes its terminal into the context.
PairTraining train_pair(CfgDecoderModel& model, const Grammar& g, std::span<const int> sentence,
                        const Derivation& derivation, ContextSize ctx, int epoch,
                        const neural::SgdSchedule<Real>& schedule, TrainingWorkspace& workspace);

// Convenience form: parses the query first (throws ParseError).
PairTraining train_pair(CfgDecoderModel& model, const Grammar& g, const Tokens& sentence, const Tokens& query,
                        ContextSize ctx, int epoch = 0, const neural::SgdSchedule<Real>& schedule = {});

struct EpochRecord {
  int epoch;
  double mean_loss;
  double learning_rate;
  double seconds;
  std::size_t skipped_updates;
  std::size_t clamped;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t skipped_pairs = 0;
  double total_seconds = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// cfg.epochs passes over the corpus in a per-epoch order shuffled from
// cfg.seed. Throws TrainingError on an empty corpus or a non-finite loss.
TrainReport train(CfgDecoderModel& model, const Grammar& g, const std::vector<Example>& corpus, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// The unconstrained baseline, trained on target tokens followed by <eos>.
TrainReport train_baseline(BaselineModel& model, const Grammar& g, const std::vector<Example>& corpus,
                           const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Test-index sets for each fold: one seeded shuffle, then contiguous slices.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int folds, std::uint64_t seed);

// Seed for an independent stream derived from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct FoldResult {
  int fold;
  std::size_t train_size;
  std::size_t test_size;
  Metrics metrics;
  double train_seconds;
  double final_loss;
};

struct CrossValReport {
  ContextSize ctx = ContextSize::unbounded();
  std::vector<FoldResult> folds;
  double mean_accuracy = 0;
  double mean_syn_error_rate = 0;
  double train_seconds = 0;
};

// Fresh model per fold, trained on the other folds with a vocabulary built
// from them, evaluated on the held-out fold.
CrossValReport cross_validate(const Grammar& g, const std::vector<Example>& corpus, const TrainConfig& cfg,
                              const std::function<void(const FoldResult&)>& on_fold = {});

}  // namespace cfgdec
