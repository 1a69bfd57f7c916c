#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "eslsc/error.hpp"
#include "eslsc/solver.hpp"
#include "eslsc/syngen.hpp"
#include "eslsc/training.hpp"
#include "fixtures.hpp"

using namespace eslsc;

namespace {

ModelConfig tiny(int vocab, int max_len = 48) {
  ModelConfig c;
  c.d_model = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn_width = 32;
  c.vocab_size = vocab;
  c.max_len = max_len;
  c.seed = 11;
  return c;
}

std::vector<ScQuestion> questions(int per_category, std::uint64_t seed = 1234) {
  GenConfig g;
  g.counts = {per_category, per_category, per_category, per_category};
  g.test_fraction = 0;
  g.seed = seed;
  return generate(g).train;
}

Vocab vocab_for(const std::vector<ScQuestion>& qs) {
  std::vector<std::string> texts;
  for (const auto& q : qs)
    for (const auto& c : expand(q)) texts.push_back(c.sentence);
  return build_vocab(texts);
}

}  // namespace

TEST(Prediction, ArgmaxAndConfidence) {
  const auto p = make_prediction("q", {0.1, 0.9, 0.3, 0.2});
  EXPECT_EQ(p.chosen_index, 1);
  EXPECT_EQ(p.confidence, 0.9);
  EXPECT_EQ(make_prediction("t", {0.5, 0.5}).chosen_index, 0);
  EXPECT_EQ(make_prediction("t", {0.2, 0.7, 0.7}).chosen_index, 1);
}

TEST(Decide, Threshold) {
  const auto p = make_prediction("q", {0.1, 0.9});
  EXPECT_TRUE(decide(p, 0.0).answered);
  EXPECT_TRUE(decide(p, 0.9).answered);
  const auto d = decide(p, 0.95);
  EXPECT_FALSE(d.answered);
  EXPECT_EQ(d.prediction.chosen_index, 1);
  EXPECT_THROW(decide(p, -0.01), RangeError);
  EXPECT_THROW(decide(p, 1.01), RangeError);
}

TEST(Decide, AbstentionMonotoneInTau) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const auto p = make_prediction("q", {u(rng), u(rng), u(rng)});
    bool answered = true;
    for (int k = 0; k <= 100; ++k) {
      const bool now = decide(p, k / 100.0).answered;
      EXPECT_FALSE(now && !answered);
      answered = now;
    }
  }
}

TEST(DecisionRecord, Fields) {
  auto p = make_prediction("q7", {0.2, 0.8});
  p.diagnostics = {"option 2: too long"};
  const auto j = nlohmann::json::parse(decision_record(decide(p, 0.5), 1));
  EXPECT_EQ(j["id"], "q7");
  EXPECT_EQ(j["chosen"], 1);
  EXPECT_EQ(j["probs"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["confidence"].get<double>(), 0.8);
  EXPECT_EQ(j["decision"], "answered");
  EXPECT_DOUBLE_EQ(j["threshold"].get<double>(), 0.5);
  EXPECT_EQ(j["correct"], true);
  EXPECT_EQ(j["diagnostics"].size(), 1u);
  const auto u = nlohmann::json::parse(decision_record(decide(p, 0.9), std::nullopt));
  EXPECT_EQ(u["decision"], "abstained");
  EXPECT_FALSE(u.contains("correct"));
  EXPECT_FALSE(nlohmann::json::parse(decision_record(decide(p, 0.9), 0))["correct"].get<bool>());
}

TEST(Solver, VocabMismatch) {
  const Vocab v = build_vocab({"a b c"});
  Seq2Seq<double> m(tiny(v.size() + 1));
  EXPECT_THROW((Solver<double>(m, v)), ArtifactError);
}

TEST(Solver, ProbabilitiesValidAndDuplicatesTie) {
  const auto qs = questions(3);
  const Vocab v = vocab_for(qs);
  Seq2Seq<double> m(tiny(v.size()));
  Solver<double> s(m, v);
  for (const auto& q : qs) {
    const auto p = s.solve(q);
    ASSERT_EQ(int(p.p_right.size()), q.num_options());
    for (double x : p.p_right) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
    EXPECT_TRUE(p.diagnostics.empty());
  }
  // the same filled sentence reached from two questions scores identically
  const ScQuestion a("a", "She ___ to school every day.", {"goes", "go"}, 0);
  const ScQuestion b("b", "She ___ to school every day.", {"went", "goes", "going"}, 1);
  EXPECT_EQ(s.solve(a).p_right[0], s.solve(b).p_right[1]);
}

TEST(Solver, UnscorableOptions) {
  const Vocab v = build_vocab({"she goes to school every day ."});
  Seq2Seq<double> m(tiny(v.size(), 10));
  Solver<double> s(m, v);
  const std::string long_option = "goes goes goes goes goes goes goes goes";
  const ScQuestion partly("p", "She ___ to school every day.", {"goes", long_option}, 0);
  const auto p = s.solve(partly);
  EXPECT_EQ(p.p_right[1], 0.0);
  EXPECT_GT(p.p_right[0], 0.0);
  ASSERT_EQ(p.diagnostics.size(), 1u);
  EXPECT_NE(p.diagnostics[0].find("option 1"), std::string::npos);
  const ScQuestion none("n", "She ___ to school every day.", {long_option, long_option + " goes"}, 0);
  EXPECT_THROW(s.solve(none), FillError);
  const auto all = s.solve_all({partly, none});
  EXPECT_TRUE(all[0].has_value());
  EXPECT_FALSE(all[1].has_value());
}

TEST(Solver, SolveWithThreshold) {
  const Vocab v = build_vocab({"she goes to school every day ."});
  Seq2Seq<double> m(tiny(v.size()));
  Solver<double> s(m, v);
  const ScQuestion q("q", "She ___ to school every day.", {"goes", "go"}, 0);
  EXPECT_TRUE(s.solve_with_threshold(q, 0.0).answered);
  EXPECT_FALSE(s.solve_with_threshold(q, 1.0).answered && s.solve(q).confidence < 1.0);
  EXPECT_THROW(s.solve_with_threshold(q, 2.0), RangeError);
}

TEST(Solver, PermutationInvariant) {
  const auto qs = questions(2);
  const Vocab v = vocab_for(qs);
  Seq2Seq<double> m(tiny(v.size()));
  Solver<double> s(m, v);
  for (const auto& q : qs) {
    const auto base = s.solve(q);
    std::vector<std::string> rev(q.options().rbegin(), q.options().rend());
    const int n = q.num_options();
    const ScQuestion r(q.id(), q.stem(), rev, n - 1 - *q.answer_index());
    const auto p = s.solve(r);
    for (int i = 0; i < n; ++i) EXPECT_EQ(p.p_right[std::size_t(n - 1 - i)], base.p_right[std::size_t(i)]);
  }
}

TEST(Solver, SolveAllMatchesSequential) {
  const auto qs = questions(5);
  const Vocab v = vocab_for(qs);
  Seq2Seq<float> m(tiny(v.size()));
  Solver<float> s(m, v);
  const auto par = s.solve_all(qs, 4);
  const auto seq = s.solve_all(qs, 1);
  ASSERT_EQ(par.size(), qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    ASSERT_TRUE(par[i] && seq[i]);
    EXPECT_EQ(par[i]->p_right, seq[i]->p_right);
    EXPECT_EQ(par[i]->p_right, s.solve(qs[i]).p_right);
  }
}

TEST(Solver, OverfitEightExamples) {
  const auto qs = questions(1, 77);
  std::vector<ScQuestion> two(qs.begin(), qs.begin() + 2);
  const Vocab v = vocab_for(two);
  const auto ds = make_finetune_dataset(two, v, 48);
  ASSERT_EQ(ds.examples.size(), 8u);
  Seq2Seq<float> m(tiny(v.size()));
  TrainConfig cfg;
  cfg.lr = 3e-3;
  Trainer<float> tr(m, cfg);
  float loss = 1e9f;
  for (int step = 0; step < 500 && loss >= 0.05f; ++step) loss = tr.finetune_step(ds.examples);
  ASSERT_LT(loss, 0.05f);
  Solver<float> s(m, v);
  for (const auto& q : two) {
    const auto p = s.solve(q);
    EXPECT_EQ(p.chosen_index, *q.answer_index());
    for (int i = 0; i < q.num_options(); ++i) {
      if (i == *q.answer_index()) {
        EXPECT_GT(p.p_right[std::size_t(i)], 0.9);
      } else {
        EXPECT_LT(p.p_right[std::size_t(i)], 0.1);
      }
    }
  }
}
