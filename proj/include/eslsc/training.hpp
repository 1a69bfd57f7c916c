#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eslsc/error.hpp"
#include "eslsc/qdata.hpp"
#include "eslsc/seq2seq.hpp"
#include "eslsc/tensor.hpp"
#include "eslsc/tokenizer.hpp"

namespace eslsc {

struct TrainConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 32;
  int epochs = 1;
  /// Stop after this many optimizer steps; 0 means no limit.
  long max_steps = 0;
  double mask_rate = 0.15;
  std::uint64_t seed = 1234;
  /// Weight positive fine-tuning examples by m - 1 to offset the 1 : m-1 imbalance.
  bool positive_class_weight = false;

  void validate() const;
  AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
};

/// A masked copy of a sequence and the positions that were masked.
struct PretrainExample {
  std::vector<int> corrupted;
  std::vector<int> original;
  std::vector<int> positions;
};

struct FinetuneExample {
  std::vector<int> ids;
  int label = 0;
  std::string question_id;
  int option_index = 0;
  int num_options = 2;
};

struct FinetuneDataset {
  std::vector<FinetuneExample> examples;
  int skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Replaces each non-special position with MASK independently with
/// probability `mask_rate`; if none was chosen, one is forced.
PretrainExample corrupt(std::span<const int> ids, double mask_rate, std::mt19937_64& rng);

/// One example per option of every keyed, fully fillable question, in
/// question then option order. Other questions are skipped and reported.
/// Throws if nothing remains.
FinetuneDataset make_finetune_dataset(const std::vector<ScQuestion>& questions, const Vocab& vocab, int max_len);

using StepLog = std::function<void(long step, double loss)>;

/// Owns the optimizer state for one model. Steps run one example per tape
/// and accumulate gradients in example order, so results are bit-for-bit
/// reproducible for a fixed seed and precision.
template <typename Scalar>
class Trainer {
 public:
  Trainer(Seq2Seq<Scalar>& model, TrainConfig cfg) : model_(model), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    params_ = model_.parameter_ptrs();
  }

  long steps() const { return state_.step; }
  std::mt19937_64& rng() { return rng_; }

  /// Token-level mean cross-entropy of the LM logits at the corrupted
  /// positions, followed by one Adam update. Returns the loss.
  Scalar pretrain_step(std::span<const PretrainExample> batch) {
    if (batch.empty()) throw RangeError("pretrain_step: empty batch");
    std::size_t total = 0;
    for (const auto& ex : batch) {
      if (ex.corrupted.size() != ex.original.size() || ex.positions.empty()) {
        throw ShapeError("pretrain_step: malformed example");
      }
      total += ex.positions.size();
    }
    model_.zero_grad();
    Scalar loss = 0;
    for (const auto& ex : batch) {
      Tape<Scalar> tape;
      auto f = model_.forward(tape, ex.corrupted, dropout_rng());
      auto rows = gather_rows(f.states, std::span<const int>(ex.positions));
      std::vector<int> targets;
      targets.reserve(ex.positions.size());
      for (int p : ex.positions) targets.push_back(ex.original[static_cast<std::size_t>(p)]);
      auto ce = cross_entropy(model_.lm_logits(tape, rows), std::span<const int>(targets));
      const Scalar share = Scalar(static_cast<double>(ex.positions.size()) / static_cast<double>(total));
      loss += ce.item() * share;
      tape.backward(ce, share);
    }
    finish_step(loss, "pretrain");
    return loss;
  }

  /// Mean binary cross-entropy of the head logits against the labels,
  /// followed by one Adam update. Returns the loss.
  Scalar finetune_step(std::span<const FinetuneExample> batch) {
    if (batch.empty()) throw RangeError("finetune_step: empty batch");
    std::vector<Scalar> weights;
    weights.reserve(batch.size());
    for (const auto& ex : batch) {
      if (ex.label != 0 && ex.label != 1) throw RangeError("finetune_step: label must be 0 or 1");
      const bool up = cfg_.positive_class_weight && ex.label == 1;
      weights.push_back(up ? Scalar(std::max(1, ex.num_options - 1)) : Scalar(1));
    }
    const Scalar wsum = std::accumulate(weights.begin(), weights.end(), Scalar(0));
    model_.zero_grad();
    Scalar loss = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tape<Scalar> tape;
      auto logits = model_.sequence_logits(tape, batch[i].ids, dropout_rng());
      const int label = batch[i].label;
      auto ce = cross_entropy(logits, std::span<const int>(&label, 1));
      const Scalar share = weights[i] / wsum;
      loss += ce.item() * share;
      tape.backward(ce, share);
    }
    finish_step(loss, "finetune");
    return loss;
  }

  /// Epoch loop over encoded sentences with fresh corruption every epoch.
  std::vector<Scalar> pretrain(const std::vector<std::vector<int>>& corpus, const StepLog& log = {}) {
    if (corpus.empty()) throw RangeError("pretrain: empty corpus");
    std::vector<Scalar> losses;
    std::vector<std::size_t> order(corpus.size());
    for (int epoch = 0; epoch < cfg_.epochs && !done(); ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t start = 0; start < order.size() && !done(); start += static_cast<std::size_t>(cfg_.batch_size)) {
        std::vector<PretrainExample> batch;
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size));
        for (std::size_t i = start; i < end; ++i) batch.push_back(corrupt(corpus[order[i]], cfg_.mask_rate, rng_));
        losses.push_back(pretrain_step(batch));
        if (log) log(steps(), static_cast<double>(losses.back()));
      }
    }
    return losses;
  }

  std::vector<Scalar> finetune(const std::vector<FinetuneExample>& data, const StepLog& log = {}) {
    if (data.empty()) throw RangeError("finetune: empty dataset");
    std::vector<Scalar> losses;
    std::vector<std::size_t> order(data.size());
    for (int epoch = 0; epoch < cfg_.epochs && !done(); ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t start = 0; start < order.size() && !done(); start += static_cast<std::size_t>(cfg_.batch_size)) {
        std::vector<FinetuneExample> batch;
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size));
        for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
        losses.push_back(finetune_step(batch));
        if (log) log(steps(), static_cast<double>(losses.back()));
      }
    }
    return losses;
  }

 private:
  bool done() const { return cfg_.max_steps > 0 && state_.step >= cfg_.max_steps; }

  typename Seq2Seq<Scalar>::Rng* dropout_rng() { return model_.config().dropout > 0.0 ? &rng_ : nullptr; }

  void finish_step(Scalar loss, const char* what) {
    if (!std::isfinite(static_cast<double>(loss))) {
      throw NumericError(std::string(what) + " loss is not finite at step " + std::to_string(state_.step + 1));
    }
    adam_step(std::span<Parameter<Scalar>* const>(params_), state_, cfg_.adam());
  }

  Seq2Seq<Scalar>& model_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Parameter<Scalar>*> params_;
  AdamState<Scalar> state_;
};

}  // namespace eslsc
