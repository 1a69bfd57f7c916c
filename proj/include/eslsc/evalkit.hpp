#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eslsc/qdata.hpp"
#include "eslsc/solver.hpp"

namespace eslsc {

struct AccuracyCount {
  long n = 0;
  long correct = 0;

  /// 0 for an empty cell.
  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
};

/// Accuracy overall and per category. Questions without a key or without a
/// prediction are counted in `skipped` and nowhere else.
struct EvalReport {
  std::array<AccuracyCount, 4> per_category{};
  AccuracyCount overall;
  long skipped = 0;

  const AccuracyCount& operator[](Category c) const { return per_category[static_cast<std::size_t>(category_index(c))]; }
};

/// `predictions[i]` belongs to `questions[i]`. Correct means an exact index match.
EvalReport evaluate(const std::vector<ScQuestion>& questions,
                    const std::vector<std::optional<Prediction>>& predictions);

struct PrPoint {
  double threshold = 0.0;
  long solvable = 0;
  long solvable_correct = 0;
  long total = 0;
  /// Absent when nothing clears the threshold.
  std::optional<double> precision;
  double recall = 0.0;
};

using PrCurve = std::vector<PrPoint>;

/// recall = solvable / total, precision = (solvable and correct) / solvable,
/// where a question is solvable when its confidence is >= the threshold.
/// Thresholds must be sorted ascending and lie in [0, 1].
PrCurve pr_sweep(const std::vector<ScQuestion>& questions, const std::vector<std::optional<Prediction>>& predictions,
                 const std::vector<double>& thresholds);

/// 0, step, 2 step, ... up to and including 1.
std::vector<double> threshold_grid(double step = 0.01);

/// Human-readable tables.
void print_report(std::ostream& os, const EvalReport& report);
void print_curve(std::ostream& os, const PrCurve& curve);

/// Machine records: "split\tcategory\tn\taccuracy" and
/// "tau\tprecision\trecall\tsolvable\tcorrect" (precision "NA" when absent).
void write_report_records(std::ostream& os, const std::string& split, const EvalReport& report);
void write_curve_records(std::ostream& os, const PrCurve& curve);

/// Convenience overloads that run the solver first.
template <typename Scalar>
EvalReport evaluate(const Seq2Seq<Scalar>& model, const Vocab& vocab, const std::vector<ScQuestion>& questions) {
  return evaluate(questions, Solver<Scalar>(model, vocab).solve_all(questions));
}

template <typename Scalar>
PrCurve pr_sweep(const Seq2Seq<Scalar>& model, const Vocab& vocab, const std::vector<ScQuestion>& questions,
                 const std::vector<double>& thresholds) {
  return pr_sweep(questions, Solver<Scalar>(model, vocab).solve_all(questions), thresholds);
}

}  // namespace eslsc
