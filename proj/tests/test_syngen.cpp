#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "eslsc/error.hpp"
#include "eslsc/syngen.hpp"
#include "fixtures.hpp"

using namespace eslsc;

namespace {

GenConfig small(int per_category, int m_min = 4, int m_max = 4) {
  GenConfig g;
  g.counts = {per_category, per_category, per_category, per_category};
  g.options_min = m_min;
  g.options_max = m_max;
  g.corpus_size = 500;
  return g;
}

std::vector<ScQuestion> all_of(const GeneratedData& d) {
  auto out = d.train;
  out.insert(out.end(), d.test.begin(), d.test.end());
  return out;
}

}  // namespace

TEST(Generate, ExactCountsAndCategories) {
  auto g = small(10);
  g.test_fraction = 0.2;
  const auto d = generate(g);
  EXPECT_EQ(d.train.size() + d.test.size(), 40u);
  std::array<int, 4> per{};
  for (const auto& q : all_of(d)) {
    ++per[std::size_t(category_index(q.category()))];
    EXPECT_EQ(categorize(q), intended_category(family_of(q))) << q.id();
    EXPECT_EQ(q.num_options(), 4);
    EXPECT_TRUE(q.keyed());
  }
  EXPECT_EQ(per, (std::array<int, 4>{10, 10, 10, 10}));
  for (const auto& q : d.test) EXPECT_EQ(q.split(), "test");
  for (const auto& q : d.train) EXPECT_EQ(q.split(), "train");
  EXPECT_EQ(d.test.size(), 8u);
}

TEST(Generate, Deterministic) {
  const auto a = generate(small(15));
  const auto b = generate(small(15));
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  auto g = small(15);
  g.seed = 99;
  EXPECT_TRUE(generate(g).train != a.train);
}

TEST(Generate, DisjointIdsAndUniqueStems) {
  const auto d = generate(small(100));
  std::set<std::string> train_ids;
  for (const auto& q : d.train) train_ids.insert(q.id());
  for (const auto& q : d.test) EXPECT_FALSE(train_ids.count(q.id())) << q.id();
  std::set<std::string> stems;
  for (const auto& q : all_of(d)) EXPECT_TRUE(stems.insert(q.stem()).second) << q.stem();
}

TEST(Generate, DeskScaleSplit) {
  const auto d = generate(GenConfig{});
  std::array<int, 4> test{};
  for (const auto& q : d.test) ++test[std::size_t(category_index(q.category()))];
  EXPECT_EQ(test, (std::array<int, 4>{100, 100, 100, 100}));
  EXPECT_EQ(d.train.size(), 2000u);
}

TEST(Generate, NeverEmitsModalSampleStem) {
  const auto d = generate(GenConfig{});
  const auto t1 = fixtures::modal_sample();
  for (const auto& q : all_of(d)) EXPECT_NE(q.stem(), t1.stem());
}

class OptionCount : public ::testing::TestWithParam<int> {};

TEST_P(OptionCount, RuleCheckSingleTrueAtKey) {
  const int m = GetParam();
  const auto d = generate(small(25, m, m));
  for (const auto& q : all_of(d)) {
    ASSERT_EQ(q.num_options(), m);
    const auto ok = rule_check(q);
    ASSERT_EQ(int(ok.size()), m);
    EXPECT_EQ(std::count(ok.begin(), ok.end(), true), 1) << render_question(q);
    EXPECT_TRUE(ok[std::size_t(*q.answer_index())]) << render_question(q);
    EXPECT_TRUE(distractors_in_paradigm(q)) << render_question(q);
    std::set<std::string> distinct(q.options().begin(), q.options().end());
    EXPECT_EQ(int(distinct.size()), m);
  }
}

INSTANTIATE_TEST_SUITE_P(Syngen, OptionCount, ::testing::Values(3, 4, 5));

TEST(Generate, MixedOptionCounts) {
  const auto d = generate(small(40, 3, 5));
  std::set<int> seen;
  for (const auto& q : all_of(d)) seen.insert(q.num_options());
  EXPECT_EQ(seen, (std::set<int>{3, 4, 5}));
}

TEST(RuleCheck, HandWrittenAgreement) {
  const ScQuestion q("x-agreement-00000", "She ___ to school every day.", {"goes", "go", "going", "gone"}, 0);
  EXPECT_EQ(rule_check(q), (std::vector<bool>{true, false, false, false}));
  EXPECT_TRUE(distractors_in_paradigm(q));
  const ScQuestion off("x-agreement-00001", "She ___ to school every day.", {"goes", "go", "run", "gone"}, 0);
  EXPECT_FALSE(distractors_in_paradigm(off));
}

TEST(RuleCheck, ModalSample) {
  const auto ok = rule_check(fixtures::modal_sample());
  EXPECT_EQ(ok, (std::vector<bool>{false, false, false, true}));
}

TEST(RuleCheck, UnknownFamilyIsParseError) {
  const ScQuestion q("plain", "She ___ home.", {"goes", "go"}, 0);
  EXPECT_THROW(family_of(q), ParseError);
}

TEST(Corpus, CleanDeterministicAndDisjointFromTest) {
  GenConfig g;
  g.corpus_size = 3000;
  const auto c = corpus(g);
  EXPECT_EQ(c.size(), 3000u);
  EXPECT_EQ(c, corpus(g));
  std::set<std::string> sentences(c.begin(), c.end());
  for (const auto& s : c) EXPECT_EQ(count_blanks(s), 0) << s;
  for (const auto& q : generate(g).test) {
    const auto key = fill(q.stem(), q.segments(*q.answer_index()), q.format());
    EXPECT_FALSE(sentences.count(key)) << key;
  }
  const auto t1 = fixtures::modal_sample();
  const auto t1_sentence = fill(t1.stem(), t1.segments(3), t1.format());
  EXPECT_FALSE(sentences.count(t1_sentence));
}

TEST(GenConfig, Validation) {
  GenConfig g;
  EXPECT_NO_THROW(g.validate());
  g.options_min = 2;
  EXPECT_THROW(g.validate(), RangeError);
  g = {};
  g.options_max = 6;
  EXPECT_THROW(g.validate(), RangeError);
  g = {};
  g.options_min = 5;
  g.options_max = 4;
  EXPECT_THROW(g.validate(), RangeError);
  g = {};
  g.test_fraction = 1.5;
  EXPECT_THROW(g.validate(), RangeError);
  g = {};
  g.counts = {0, 0, 0, 0};
  EXPECT_THROW(g.validate(), RangeError);
  g = {};
  g.counts = {-1, 5, 5, 5};
  EXPECT_THROW(g.validate(), RangeError);
}

TEST(WriteGenerated, FilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "eslsc_syngen_test";
  std::filesystem::remove_all(dir);
  auto g = small(6);
  g.corpus_size = 50;
  write_generated(dir, g);
  const auto d = generate(g);
  EXPECT_EQ(load_dataset(dir / "train.jsonl"), d.train);
  EXPECT_EQ(load_dataset(dir / "test.jsonl"), d.test);
  std::ifstream in(dir / "corpus.txt");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  EXPECT_EQ(lines, corpus(g));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  std::filesystem::remove_all(dir);
}
