#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "eslsc/error.hpp"
#include "eslsc/evalkit.hpp"

using namespace eslsc;

namespace {

const char* kStems[4] = {"She ___ to school every day.", "Tomorrow, he ___ the letter.",
                         "Tom lost ___ keys, so ___ stayed home.",
                         "Yesterday, he ___ the car, but tomorrow she ___ the bike."};

ScQuestion make(int i, Category c, int key) {
  const int k = category_index(c);
  std::vector<std::string> opts;
  for (int j = 0; j < 4; ++j) {
    const std::string w = std::to_string(j);
    if (k == 0) opts.push_back("w" + w);
    if (k == 1) opts.push_back("will w" + w);
    if (k == 2) opts.push_back("a" + w + "; b" + w);
    if (k == 3) opts.push_back("had a" + w + "; will b" + w);
  }
  return ScQuestion("q" + std::to_string(i), kStems[k], opts, key);
}

struct Fixture {
  std::vector<ScQuestion> qs;
  std::vector<std::optional<Prediction>> preds;
};

// Ten questions, eight answered correctly. Confidences are chosen so that
// tau = 0.5 keeps six questions, all of them correct.
Fixture ten() {
  const double conf[10] = {0.95, 0.9, 0.8, 0.7, 0.6, 0.55, 0.45, 0.4, 0.3, 0.35};
  const bool right[10] = {true, true, true, true, true, true, true, true, false, false};
  Fixture f;
  for (int i = 0; i < 10; ++i) {
    const Category c = kAllCategories[std::size_t(i % 4)];
    const int key = i % 4;
    f.qs.push_back(make(i, c, key));
    const int chosen = right[i] ? key : (key + 1) % 4;
    std::vector<double> p(4, 0.01);
    p[std::size_t(chosen)] = conf[i];
    f.preds.push_back(make_prediction(f.qs.back().id(), p));
  }
  return f;
}

}  // namespace

TEST(Evaluate, CountsPerCategory) {
  const auto f = ten();
  for (const auto& q : f.qs) EXPECT_EQ(q.category(), kAllCategories[std::size_t(std::stoi(q.id().substr(1)) % 4)]);
  const auto r = evaluate(f.qs, f.preds);
  EXPECT_EQ(r.overall.n, 10);
  EXPECT_EQ(r.overall.correct, 8);
  EXPECT_DOUBLE_EQ(r.overall.accuracy(), 0.8);
  EXPECT_EQ(r[Category::C1].n, 3);
  EXPECT_EQ(r[Category::C3].n, 2);
  EXPECT_EQ(r[Category::C1].correct, 2);
  EXPECT_EQ(r.skipped, 0);
  long sum = 0;
  for (Category c : kAllCategories) sum += r[c].n;
  EXPECT_EQ(sum, r.overall.n);
}

TEST(Evaluate, SkipsUnkeyedAndMissing) {
  auto f = ten();
  f.preds[0].reset();
  f.qs[1] = ScQuestion("u", kStems[0], {"w0", "w1"});
  f.preds[1] = make_prediction("u", {0.5, 0.4});
  const auto r = evaluate(f.qs, f.preds);
  EXPECT_EQ(r.skipped, 2);
  EXPECT_EQ(r.overall.n, 8);
  EXPECT_EQ(r.overall.correct, 6);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate({}, {}), RangeError);
  auto f = ten();
  f.preds.pop_back();
  EXPECT_THROW(evaluate(f.qs, f.preds), ShapeError);
}

TEST(PrSweep, FixturePoint) {
  const auto f = ten();
  const auto curve = pr_sweep(f.qs, f.preds, {0.5});
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].solvable, 6);
  EXPECT_EQ(curve[0].solvable_correct, 6);
  EXPECT_EQ(*curve[0].precision, 1.0);
  EXPECT_EQ(curve[0].recall, 0.6);
}

TEST(PrSweep, MatchesBruteForce) {
  const auto f = ten();
  const auto grid = threshold_grid();
  const auto curve = pr_sweep(f.qs, f.preds, grid);
  ASSERT_EQ(curve.size(), grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    long solvable = 0, correct = 0;
    for (std::size_t i = 0; i < f.qs.size(); ++i) {
      if (f.preds[i]->confidence >= grid[k]) {
        ++solvable;
        if (f.preds[i]->chosen_index == *f.qs[i].answer_index()) ++correct;
      }
    }
    EXPECT_EQ(curve[k].solvable, solvable);
    EXPECT_EQ(curve[k].solvable_correct, correct);
    EXPECT_EQ(curve[k].recall, double(solvable) / 10.0);
    if (solvable > 0) {
      EXPECT_EQ(*curve[k].precision, double(correct) / double(solvable));
    } else {
      EXPECT_FALSE(curve[k].precision);
    }
  }
}

TEST(PrSweep, ZeroThresholdIdentities) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> key(0, 3);
  std::vector<ScQuestion> qs;
  std::vector<std::optional<Prediction>> preds;
  for (int i = 0; i < 300; ++i) {
    qs.push_back(make(i, kAllCategories[std::size_t(i % 4)], key(rng)));
    preds.push_back(make_prediction(qs.back().id(), {u(rng), u(rng), u(rng), u(rng)}));
  }
  const auto curve = pr_sweep(qs, preds, threshold_grid());
  EXPECT_EQ(curve.front().recall, 1.0);
  EXPECT_EQ(*curve.front().precision, evaluate(qs, preds).overall.accuracy());
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_LE(curve[k].recall, curve[k - 1].recall);
}

TEST(PrSweep, NothingSolvable) {
  const auto f = ten();
  const auto curve = pr_sweep(f.qs, f.preds, {0.99});
  EXPECT_FALSE(curve[0].precision);
  EXPECT_EQ(curve[0].recall, 0.0);
}

TEST(PrSweep, Errors) {
  const auto f = ten();
  EXPECT_THROW(pr_sweep(f.qs, f.preds, {}), RangeError);
  EXPECT_THROW(pr_sweep(f.qs, f.preds, {0.5, 0.4}), RangeError);
  EXPECT_THROW(pr_sweep(f.qs, f.preds, {1.5}), RangeError);
  EXPECT_THROW(pr_sweep(f.qs, f.preds, {-0.1}), RangeError);
}

// Accuracy is the solvable-weighted mix of precisions on either side of tau.
TEST(PrSweep, WeightedIdentity) {
  const auto f = ten();
  const auto r = evaluate(f.qs, f.preds);
  for (double tau : threshold_grid(0.05)) {
    const auto above = pr_sweep(f.qs, f.preds, {tau})[0];
    const long below = above.total - above.solvable;
    long below_correct = 0;
    for (std::size_t i = 0; i < f.qs.size(); ++i) {
      if (f.preds[i]->confidence < tau && f.preds[i]->chosen_index == *f.qs[i].answer_index()) ++below_correct;
    }
    EXPECT_EQ(above.solvable_correct + below_correct, r.overall.correct);
    EXPECT_EQ(above.solvable + below, r.overall.n);
  }
}

TEST(Baseline, AlwaysFirstOptionNearChance) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> key(0, 3);
  std::vector<ScQuestion> qs;
  std::vector<std::optional<Prediction>> preds;
  for (int i = 0; i < 1000; ++i) {
    qs.push_back(make(i, kAllCategories[std::size_t(i % 4)], key(rng)));
    preds.push_back(make_prediction(qs.back().id(), {1.0, 0.0, 0.0, 0.0}));
  }
  EXPECT_NEAR(evaluate(qs, preds).overall.accuracy(), 0.25, 0.05);
}

TEST(Grid, Points) {
  const auto g = threshold_grid();
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(threshold_grid(0.25), (std::vector<double>{0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(threshold_grid(0.3).back(), 1.0);
  EXPECT_THROW(threshold_grid(0), RangeError);
}

TEST(Writers, Records) {
  const auto f = ten();
  std::ostringstream rep;
  write_report_records(rep, "test", evaluate(f.qs, f.preds));
  EXPECT_NE(rep.str().find("test\tC1\t3\t"), std::string::npos);
  EXPECT_NE(rep.str().find("test\toverall\t10\t0.80000000000000004\n"), std::string::npos);
  std::ostringstream cur;
  write_curve_records(cur, pr_sweep(f.qs, f.preds, {0.5, 0.99}));
  EXPECT_EQ(cur.str(), "0.5\t1\t0.59999999999999998\t6\t6\n0.98999999999999999\tNA\t0\t0\t0\n");
  std::ostringstream human;
  print_report(human, evaluate(f.qs, f.preds));
  EXPECT_NE(human.str().find("overall"), std::string::npos);
}
