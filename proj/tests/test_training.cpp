#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "eslsc/error.hpp"
#include "eslsc/syngen.hpp"
#include "eslsc/training.hpp"
#include "fixtures.hpp"

using namespace eslsc;

namespace {

ModelConfig tiny(int vocab) {
  ModelConfig c;
  c.d_model = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn_width = 32;
  c.vocab_size = vocab;
  c.max_len = 16;
  c.seed = 3;
  return c;
}

std::vector<ScQuestion> ten_questions() {
  GenConfig g;
  g.counts = {3, 3, 2, 2};
  g.test_fraction = 0;
  return generate(g).train;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mask_rate = 0;
  EXPECT_THROW(c.validate(), RangeError);
  c = {};
  c.lr = 0;
  EXPECT_THROW(c.validate(), RangeError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), RangeError);
}

TEST(Corrupt, Boundaries) {
  std::mt19937_64 rng(1);
  const std::vector<int> ids{SpecialIds::kBos, 7, 8, 9, 10, SpecialIds::kUnk, SpecialIds::kEos};
  const auto one = corrupt(ids, 1e-12, rng);
  EXPECT_EQ(one.positions.size(), 1u);
  const auto all = corrupt(ids, 1.0, rng);
  EXPECT_EQ(all.positions, (std::vector<int>{1, 2, 3, 4, 5}));
  for (const auto& ex : {one, all}) {
    EXPECT_EQ(ex.original, ids);
    EXPECT_EQ(ex.corrupted.front(), SpecialIds::kBos);
    EXPECT_EQ(ex.corrupted.back(), SpecialIds::kEos);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool masked = std::find(ex.positions.begin(), ex.positions.end(), int(i)) != ex.positions.end();
      EXPECT_EQ(ex.corrupted[i], masked ? SpecialIds::kMask : ids[i]);
    }
  }
  EXPECT_THROW(corrupt(std::vector<int>{SpecialIds::kBos, SpecialIds::kEos}, 0.5, rng), RangeError);
}

TEST(Corrupt, MaskedFraction) {
  std::mt19937_64 rng(2);
  std::vector<int> ids{SpecialIds::kBos};
  for (int i = 0; i < 30; ++i) ids.push_back(5 + i);
  ids.push_back(SpecialIds::kEos);
  double masked = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) masked += double(corrupt(ids, 0.15, rng).positions.size()) / 30.0;
  const double frac = masked / trials;
  EXPECT_GE(frac, 0.13);
  EXPECT_LE(frac, 0.17);
}

TEST(FinetuneDataset, Counting) {
  const auto qs = ten_questions();
  ASSERT_EQ(qs.size(), 10u);
  std::vector<std::string> texts;
  for (const auto& q : qs)
    for (const auto& c : expand(q)) texts.push_back(c.sentence);
  const Vocab v = build_vocab(texts);
  const auto ds = make_finetune_dataset(qs, v, 48);
  EXPECT_EQ(ds.examples.size(), 40u);
  int positives = 0;
  for (const auto& e : ds.examples) positives += e.label;
  EXPECT_EQ(positives, 10);
  EXPECT_EQ(ds.skipped, 0);
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    EXPECT_EQ(ds.examples[i].question_id, qs[i / 4].id());
    EXPECT_EQ(ds.examples[i].option_index, int(i % 4));
  }
}

TEST(FinetuneDataset, ModalSampleAndSkips) {
  const auto t1 = fixtures::modal_sample();
  std::vector<std::string> texts;
  for (const auto& c : expand(t1)) texts.push_back(c.sentence);
  const Vocab v = build_vocab(texts);
  const ScQuestion unkeyed("u", "I ___ happy.", {"am", "is"});
  const ScQuestion broken("b", "She ___ home.", {"goes; well", "went"}, 1);
  const auto ds = make_finetune_dataset({t1, unkeyed, broken}, v, 48);
  ASSERT_EQ(ds.examples.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(ds.examples[i].label, i == 3 ? 1 : 0);
  EXPECT_EQ(ds.skipped, 2);
  ASSERT_EQ(ds.diagnostics.size(), 2u);
  EXPECT_NE(ds.diagnostics[0].find("'u'"), std::string::npos);
  EXPECT_THROW(make_finetune_dataset({unkeyed}, v, 48), ArtifactError);
}

TEST(Pretrain, InitialLossNearUniform) {
  Seq2Seq<double> m(tiny(20));
  Trainer<double> tr(m, {});
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> tok(5, 19);
  std::vector<PretrainExample> batch;
  for (int b = 0; b < 16; ++b) {
    std::vector<int> ids{SpecialIds::kBos};
    for (int i = 0; i < 8; ++i) ids.push_back(tok(rng));
    ids.push_back(SpecialIds::kEos);
    batch.push_back(corrupt(ids, 0.3, rng));
  }
  EXPECT_NEAR(tr.pretrain_step(batch), std::log(20.0), 0.5);
}

TEST(Pretrain, OverfitsOneSentence) {
  const std::string sentence = "the cat sat on the mat because it was warm .";
  const Vocab v = build_vocab({sentence, "a dog ran in the park ."});
  const auto ids = encode(sentence, v);
  // one example per position, each with only that position masked
  std::vector<PretrainExample> batch;
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    PretrainExample ex;
    ex.original = ids;
    ex.corrupted = ids;
    ex.corrupted[i] = SpecialIds::kMask;
    ex.positions = {int(i)};
    batch.push_back(ex);
  }
  Seq2Seq<float> m(tiny(v.size()));
  TrainConfig cfg;
  cfg.lr = 3e-3;
  Trainer<float> tr(m, cfg);
  float loss = 1e9f;
  int steps = 0;
  while (steps < 500 && loss >= 0.05f) {
    loss = tr.pretrain_step(batch);
    ++steps;
  }
  EXPECT_LT(loss, 0.05f) << "after " << steps << " steps";
  for (const auto& ex : batch) {
    const auto logits = m.lm_logits(ex.corrupted);
    Eigen::Index arg;
    logits.row(ex.positions[0]).maxCoeff(&arg);
    EXPECT_EQ(int(arg), ex.original[std::size_t(ex.positions[0])]) << "position " << ex.positions[0];
  }
}

TEST(Finetune, InitialLossNearLn2) {
  Seq2Seq<double> m(tiny(20));
  Trainer<double> tr(m, {});
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> tok(5, 19);
  std::vector<FinetuneExample> batch;
  for (int b = 0; b < 32; ++b) {
    FinetuneExample ex;
    ex.ids = {SpecialIds::kBos, tok(rng), tok(rng), tok(rng), SpecialIds::kEos};
    ex.label = b % 2;
    batch.push_back(ex);
  }
  EXPECT_NEAR(tr.finetune_step(batch), std::log(2.0), 0.1);
}

TEST(Finetune, PositiveClassWeight) {
  Seq2Seq<double> m(tiny(20));
  std::vector<FinetuneExample> batch(3);
  batch[0].ids = {1, 7, 8, 2};
  batch[0].label = 1;
  batch[1].ids = {1, 9, 2};
  batch[2].ids = {1, 10, 11, 12, 2};
  for (auto& e : batch) e.num_options = 4;
  auto ce = [&](const FinetuneExample& e) {
    const auto out = m.classify(e.ids);
    return -std::log(e.label ? out.p_right : out.p_wrong);
  };
  const double expected = (3 * ce(batch[0]) + ce(batch[1]) + ce(batch[2])) / 5;
  TrainConfig cfg;
  cfg.positive_class_weight = true;
  Trainer<double> tr(m, cfg);
  EXPECT_NEAR(tr.finetune_step(batch), expected, 1e-12);
}

TEST(Training, Deterministic) {
  const auto qs = ten_questions();
  std::vector<std::string> texts;
  for (const auto& q : qs)
    for (const auto& c : expand(q)) texts.push_back(c.sentence);
  const Vocab v = build_vocab(texts);
  const auto ds = make_finetune_dataset(qs, v, 48);
  std::vector<std::vector<int>> corpus;
  for (const auto& t : texts) corpus.push_back(encode(t, v, 48));
  auto run = [&] {
    auto cfg = tiny(v.size());
    cfg.max_len = 48;
    Seq2Seq<float> m(cfg);
    TrainConfig tc;
    tc.batch_size = 8;
    Trainer<float> pre(m, tc);
    auto losses = pre.pretrain(corpus);
    Trainer<float> ft(m, tc);
    auto more = ft.finetune(ds.examples);
    losses.insert(losses.end(), more.begin(), more.end());
    return std::make_pair(losses, m.parameters().back().value);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Training, MaxStepsStopsEarly) {
  Seq2Seq<float> m(tiny(20));
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 5;
  cfg.max_steps = 3;
  Trainer<float> tr(m, cfg);
  std::vector<std::vector<int>> corpus(10, std::vector<int>{1, 7, 8, 2});
  EXPECT_EQ(tr.pretrain(corpus).size(), 3u);
  EXPECT_EQ(tr.steps(), 3);
}

TEST(Training, NonFiniteLossAborts) {
  Seq2Seq<float> m(tiny(20));
  TrainConfig cfg;
  cfg.lr = 1e30;
  cfg.batch_size = 2;
  cfg.epochs = 50;
  Trainer<float> tr(m, cfg);
  std::vector<std::vector<int>> corpus(4, std::vector<int>{1, 7, 8, 9, 2});
  EXPECT_THROW(tr.pretrain(corpus), NumericError);
}
