#include "eslsc/training.hpp"

namespace eslsc {

void TrainConfig::validate() const {
  if (!(lr > 0)) throw RangeError("train config: lr must be positive");
  if (batch_size <= 0) throw RangeError("train config: batch_size must be positive");
  if (epochs < 0 || max_steps < 0) throw RangeError("train config: epochs and max_steps must be >= 0");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw RangeError("train config: mask_rate must lie in (0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw RangeError("train config: betas must lie in [0, 1)");
  }
  if (!(eps > 0)) throw RangeError("train config: eps must be positive");
}

PretrainExample corrupt(std::span<const int> ids, double mask_rate, std::mt19937_64& rng) {
  if (mask_rate < 0.0 || mask_rate > 1.0) throw RangeError("corrupt: mask_rate outside [0, 1]");
  PretrainExample ex;
  ex.original.assign(ids.begin(), ids.end());
  ex.corrupted = ex.original;
  std::vector<int> maskable;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= SpecialIds::kCount || ids[i] == SpecialIds::kUnk) maskable.push_back(static_cast<int>(i));
  }
  if (maskable.empty()) throw RangeError("corrupt: sequence has no maskable position");
  std::bernoulli_distribution pick(mask_rate);
  for (int pos : maskable) {
    if (pick(rng)) ex.positions.push_back(pos);
  }
  if (ex.positions.empty()) {
    std::uniform_int_distribution<std::size_t> any(0, maskable.size() - 1);
    ex.positions.push_back(maskable[any(rng)]);
  }
  for (int pos : ex.positions) ex.corrupted[static_cast<std::size_t>(pos)] = SpecialIds::kMask;
  return ex;
}

FinetuneDataset make_finetune_dataset(const std::vector<ScQuestion>& questions, const Vocab& vocab, int max_len) {
  FinetuneDataset out;
  for (const auto& q : questions) {
    if (!q.keyed()) {
      ++out.skipped;
      out.diagnostics.push_back("question '" + q.id() + "': no answer key");
      continue;
    }
    try {
      std::vector<FinetuneExample> rows;
      for (const auto& cand : expand(q)) {
        FinetuneExample ex;
        ex.ids = encode(cand.sentence, vocab, max_len);
        ex.label = *cand.label ? 1 : 0;
        ex.question_id = q.id();
        ex.option_index = cand.option_index;
        ex.num_options = q.num_options();
        rows.push_back(std::move(ex));
      }
      for (auto& r : rows) out.examples.push_back(std::move(r));
    } catch (const Error& e) {
      ++out.skipped;
      out.diagnostics.push_back(e.what());
    }
  }
  if (out.examples.empty()) throw ArtifactError("fine-tuning dataset is empty after expansion");
  return out;
}

}  // namespace eslsc
