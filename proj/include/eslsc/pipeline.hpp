#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "eslsc/evalkit.hpp"
#include "eslsc/run_config.hpp"
#include "eslsc/seq2seq.hpp"
#include "eslsc/solver.hpp"
#include "eslsc/syngen.hpp"
#include "eslsc/tokenizer.hpp"
#include "eslsc/training.hpp"

namespace eslsc {

/// Texts that define the token inventory: plain sentences plus every filled
/// candidate of the given questions. Labels play no part.
inline std::vector<std::string> vocab_texts(const std::vector<std::string>& sentences,
                                            const std::vector<ScQuestion>& questions) {
  std::vector<std::string> out = sentences;
  for (const auto& q : questions) {
    for (int i = 0; i < q.num_options(); ++i) {
      if (q.fillable(i)) out.push_back(fill(q.stem(), q.segments(i), q.format()));
    }
  }
  return out;
}

/// One sentence per non-empty line.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!normalize_whitespace(line).empty()) out.push_back(line);
  }
  return out;
}

inline std::vector<std::vector<int>> encode_all(const std::vector<std::string>& sentences, const Vocab& vocab,
                                                int max_len) {
  std::vector<std::vector<int>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(encode(s, vocab, max_len));
  return out;
}

template <typename Scalar>
struct PipelineResult {
  GeneratedData data;
  Vocab vocab;
  Seq2Seq<Scalar> model;
  std::vector<Scalar> pretrain_losses;
  std::vector<Scalar> finetune_losses;
  std::vector<std::optional<Prediction>> predictions;
  EvalReport report;
};

/// generate -> vocab -> pretrain on the corpus -> fine-tune on train -> evaluate on test.
template <typename Scalar>
PipelineResult<Scalar> run_pipeline(const RunConfig& cfg, const StepLog& pretrain_log = {},
                                    const StepLog& finetune_log = {}) {
  GeneratedData data = generate(cfg.gen);
  const std::vector<std::string> sentences = corpus(cfg.gen);
  std::vector<ScQuestion> all = data.train;
  all.insert(all.end(), data.test.begin(), data.test.end());
  Vocab vocab = build_vocab(vocab_texts(sentences, all));

  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  Seq2Seq<Scalar> model(mc);

  Trainer<Scalar> pre(model, cfg.pretrain);
  auto pre_losses = pre.pretrain(encode_all(sentences, vocab, mc.max_len), pretrain_log);

  const FinetuneDataset ft = make_finetune_dataset(data.train, vocab, mc.max_len);
  Trainer<Scalar> tune(model, cfg.finetune);
  auto ft_losses = tune.finetune(ft.examples, finetune_log);

  auto predictions = Solver<Scalar>(model, vocab).solve_all(data.test);
  EvalReport report = evaluate(data.test, predictions);
  return {std::move(data), std::move(vocab), std::move(model), std::move(pre_losses), std::move(ft_losses),
          std::move(predictions), report};
}

}  // namespace eslsc
