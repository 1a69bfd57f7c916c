#include "eslsc/evalkit.hpp"

#include <cmath>
#include <iomanip>

#include "eslsc/error.hpp"

namespace eslsc {

namespace {

void check_alignment(const std::vector<ScQuestion>& questions, const std::vector<std::optional<Prediction>>& predictions) {
  if (questions.empty()) throw RangeError("evaluation needs at least one question");
  if (questions.size() != predictions.size()) {
    throw ShapeError("evaluation: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(questions.size()) + " questions");
  }
}

bool usable(const ScQuestion& q, const std::optional<Prediction>& p) { return q.keyed() && p.has_value(); }

}  // namespace

EvalReport evaluate(const std::vector<ScQuestion>& questions, const std::vector<std::optional<Prediction>>& predictions) {
  check_alignment(questions, predictions);
  EvalReport r;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& q = questions[i];
    if (!usable(q, predictions[i])) {
      ++r.skipped;
      continue;
    }
    const bool ok = predictions[i]->chosen_index == *q.answer_index();
    auto& cell = r.per_category[static_cast<std::size_t>(category_index(q.category()))];
    ++cell.n;
    ++r.overall.n;
    if (ok) {
      ++cell.correct;
      ++r.overall.correct;
    }
  }
  return r;
}

PrCurve pr_sweep(const std::vector<ScQuestion>& questions, const std::vector<std::optional<Prediction>>& predictions,
                 const std::vector<double>& thresholds) {
  check_alignment(questions, predictions);
  if (thresholds.empty()) throw RangeError("pr_sweep needs at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) throw RangeError("thresholds must lie in [0, 1]");
    if (i > 0 && thresholds[i] < thresholds[i - 1]) throw RangeError("thresholds must be sorted ascending");
  }
  struct Cached {
    double confidence;
    bool correct;
  };
  std::vector<Cached> cache;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!usable(questions[i], predictions[i])) continue;
    cache.push_back({predictions[i]->confidence, predictions[i]->chosen_index == *questions[i].answer_index()});
  }
  PrCurve curve;
  curve.reserve(thresholds.size());
  for (double tau : thresholds) {
    PrPoint p;
    p.threshold = tau;
    p.total = static_cast<long>(cache.size());
    for (const auto& c : cache) {
      if (c.confidence >= tau) {
        ++p.solvable;
        if (c.correct) ++p.solvable_correct;
      }
    }
    if (p.solvable > 0) p.precision = static_cast<double>(p.solvable_correct) / static_cast<double>(p.solvable);
    p.recall = p.total == 0 ? 0.0 : static_cast<double>(p.solvable) / static_cast<double>(p.total);
    curve.push_back(p);
  }
  return curve;
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw RangeError("grid step must lie in (0, 1]");
  const long n = std::lround(std::floor(1.0 / step + 1e-9));
  std::vector<double> out;
  for (long i = 0; i <= n; ++i) out.push_back(std::min(1.0, static_cast<double>(i) * step));
  if (out.back() < 1.0) out.push_back(1.0);
  return out;
}

void print_report(std::ostream& os, const EvalReport& report) {
  os << std::left << std::setw(10) << "category" << std::right << std::setw(8) << "n" << std::setw(10) << "correct"
     << std::setw(11) << "accuracy" << '\n';
  auto row = [&](std::string_view name, const AccuracyCount& a) {
    os << std::left << std::setw(10) << name << std::right << std::setw(8) << a.n << std::setw(10) << a.correct
       << std::setw(11) << std::fixed << std::setprecision(4) << a.accuracy() << '\n';
  };
  for (Category c : kAllCategories) row(to_string(c), report[c]);
  row("overall", report.overall);
  os << "skipped " << report.skipped << '\n';
}

void print_curve(std::ostream& os, const PrCurve& curve) {
  os << std::setw(6) << "tau" << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(10)
     << "solvable" << std::setw(9) << "correct" << '\n';
  for (const auto& p : curve) {
    os << std::fixed << std::setprecision(2) << std::setw(6) << p.threshold << std::setprecision(4);
    if (p.precision) {
      os << std::setw(11) << *p.precision;
    } else {
      os << std::setw(11) << "NA";
    }
    os << std::setw(9) << p.recall << std::setw(10) << p.solvable << std::setw(9) << p.solvable_correct << '\n';
  }
}

void write_report_records(std::ostream& os, const std::string& split, const EvalReport& report) {
  os << std::setprecision(17);
  for (Category c : kAllCategories) {
    os << split << '\t' << to_string(c) << '\t' << report[c].n << '\t' << report[c].accuracy() << '\n';
  }
  os << split << '\t' << "overall" << '\t' << report.overall.n << '\t' << report.overall.accuracy() << '\n';
}

void write_curve_records(std::ostream& os, const PrCurve& curve) {
  os << std::setprecision(17);
  for (const auto& p : curve) {
    os << p.threshold << '\t';
    if (p.precision) {
      os << *p.precision;
    } else {
      os << "NA";
    }
    os << '\t' << p.recall << '\t' << p.solvable << '\t' << p.solvable_correct << '\n';
  }
}

}  // namespace eslsc
