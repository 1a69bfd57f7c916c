#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "eslsc/error.hpp"
#include "eslsc/qdata.hpp"
#include "eslsc/seq2seq.hpp"
#include "eslsc/tokenizer.hpp"

namespace eslsc {

/// Per-option right-probabilities of one question and the selected option.
struct Prediction {
  std::string question_id;
  std::vector<double> p_right;
  int chosen_index = -1;
  double confidence = 0.0;
  /// One entry per option that could not be scored.
  std::vector<std::string> diagnostics;
};

/// Answered iff confidence >= threshold; the prediction is always kept.
struct Decision {
  Prediction prediction;
  double threshold = 0.0;
  bool answered = false;
};

/// Smallest argmax of `p_right`, confidence = its value.
Prediction make_prediction(std::string question_id, std::vector<double> p_right);

/// Throws RangeError when tau lies outside [0, 1].
Decision decide(Prediction prediction, double tau);

/// One line-delimited record: id, chosen, probabilities, confidence,
/// decision and, for keyed questions, correctness.
std::string decision_record(const Decision& d, const std::optional<int>& answer_index);

/// Scores filled candidates with a fixed model. Unfillable or over-long
/// options get probability 0 and a diagnostic rather than an error.
template <typename Scalar>
class Solver {
 public:
  Solver(const Seq2Seq<Scalar>& model, const Vocab& vocab) : model_(model), vocab_(vocab) {
    if (vocab_.size() != model_.config().vocab_size) {
      throw ArtifactError("vocabulary has " + std::to_string(vocab_.size()) + " tokens but the model expects " +
                          std::to_string(model_.config().vocab_size));
    }
  }

  /// p_right for option i; 0 with a diagnostic when the option cannot be scored.
  double score_option(const ScQuestion& q, int i, std::string* diagnostic = nullptr) const {
    try {
      const std::string sentence = fill(q.stem(), q.segments(i), q.format());
      const auto ids = encode(sentence, vocab_, model_.config().max_len);
      return static_cast<double>(model_.classify(ids).p_right);
    } catch (const FillError& e) {
      if (diagnostic) *diagnostic = "option " + std::to_string(i) + ": " + e.what();
    } catch (const RangeError& e) {
      if (diagnostic) *diagnostic = "option " + std::to_string(i) + ": " + e.what();
    }
    return 0.0;
  }

  /// Throws FillError when no option can be scored.
  Prediction solve(const ScQuestion& q) const {
    std::vector<double> p(static_cast<std::size_t>(q.num_options()), 0.0);
    std::vector<std::string> diags;
    for (int i = 0; i < q.num_options(); ++i) {
      std::string diag;
      p[static_cast<std::size_t>(i)] = score_option(q, i, &diag);
      if (!diag.empty()) diags.push_back(std::move(diag));
    }
    if (static_cast<int>(diags.size()) == q.num_options()) {
      throw FillError("question '" + q.id() + "': no option can be scored");
    }
    Prediction pred = make_prediction(q.id(), std::move(p));
    pred.diagnostics = std::move(diags);
    return pred;
  }

  Decision solve_with_threshold(const ScQuestion& q, double tau) const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw RangeError("threshold must lie in [0, 1]");
    return decide(solve(q), tau);
  }

  /// Predictions for every question, computed on up to `threads` workers.
  /// Entries are empty for questions whose options are all unscorable.
  std::vector<std::optional<Prediction>> solve_all(const std::vector<ScQuestion>& questions,
                                                   unsigned threads = std::thread::hardware_concurrency()) const {
    std::vector<std::optional<Prediction>> out(questions.size());
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          out[i] = solve(questions[i]);
        } catch (const FillError&) {
          out[i].reset();
        }
      }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(questions.size())));
    if (threads <= 1) {
      work(0, questions.size());
      return out;
    }
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (questions.size() + threads - 1) / threads;
      for (std::size_t b = 0; b < questions.size(); b += chunk) {
        pool.emplace_back(work, b, std::min(questions.size(), b + chunk));
      }
    }
    return out;
  }

 private:
  const Seq2Seq<Scalar>& model_;
  const Vocab& vocab_;
};

}  // namespace eslsc
