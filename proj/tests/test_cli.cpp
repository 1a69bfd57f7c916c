// Drives the built CLI through a miniature pipeline and checks exit codes.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "eslsc_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(ESLSC_CLI_PATH) + " " + args + " > " + (kDir / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string p(const char* name) { return (kDir / name).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    std::ofstream cfg(kDir / "tiny.conf");
    cfg << "seed = 5\n"
           "gen.counts = 12,12,12,12\n"
           "gen.corpus_size = 60\n"
           "model.d_model = 8\nmodel.encoder_layers = 1\nmodel.decoder_layers = 1\nmodel.heads = 2\n"
           "model.ffn_width = 16\n"
           "pretrain.epochs = 1\npretrain.batch_size = 16\n"
           "finetune.epochs = 1\nfinetune.batch_size = 16\n";
  }
  static void TearDownTestSuite() { fs::remove_all(kDir); }
};

}  // namespace

TEST_F(Cli, PipelineAndExitCodes) {
  const std::string conf = "--config " + p("tiny.conf");
  ASSERT_EQ(run("gen-data " + conf + " --out " + p("data")), 0) << slurp(kDir / "last.log");
  ASSERT_TRUE(fs::exists(kDir / "data" / "train.jsonl"));
  ASSERT_TRUE(fs::exists(kDir / "data" / "gen-data.manifest.json"));

  ASSERT_EQ(run("build-vocab --data " + p("data/corpus.txt") + " --data " + p("data/train.jsonl") + " --data " +
                p("data/test.jsonl") + " --out " + p("vocab.txt")),
            0)
      << slurp(kDir / "last.log");
  ASSERT_EQ(run("pretrain " + conf + " --data " + p("data/corpus.txt") + " --vocab " + p("vocab.txt") + " --out " +
                p("pre.bin")),
            0)
      << slurp(kDir / "last.log");
  const std::string metrics = slurp(p("pre.bin.metrics.tsv"));
  EXPECT_EQ(metrics.rfind("1\t", 0), 0u) << metrics;

  ASSERT_EQ(run("finetune " + conf + " --data " + p("data/train.jsonl") + " --vocab " + p("vocab.txt") +
                " --weights " + p("pre.bin") + " --eval-data " + p("data/test.jsonl") + " --out " + p("ft.bin")),
            0)
      << slurp(kDir / "last.log");
  EXPECT_NE(slurp(p("ft.bin.metrics.tsv")).find("eval\t"), std::string::npos);

  const std::string model = " --data " + p("data/test.jsonl") + " --vocab " + p("vocab.txt") + " --weights " + p("ft.bin");
  ASSERT_EQ(run("solve" + model + " --threshold 0 --out " + p("solve.jsonl")), 0) << slurp(kDir / "last.log");
  {
    std::ifstream in(p("solve.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      EXPECT_NE(line.find("\"decision\":\"answered\""), std::string::npos) << line;
    }
    EXPECT_EQ(n, 8);
  }
  ASSERT_EQ(run("eval" + model + " --out " + p("report.tsv")), 0) << slurp(kDir / "last.log");
  EXPECT_NE(slurp(p("report.tsv")).find("test\toverall\t8\t"), std::string::npos) << slurp(p("report.tsv"));
  ASSERT_EQ(run("pr-sweep" + model + " --grid-step 0.25 --out " + p("sweep.tsv")), 0) << slurp(kDir / "last.log");
  EXPECT_EQ(slurp(p("sweep.tsv")).rfind("0\t", 0), 0u);
  EXPECT_TRUE(fs::exists(p("sweep.tsv.manifest.json")));

  // replaying a command reproduces its output byte for byte
  const std::string first = slurp(p("ft.bin"));
  ASSERT_EQ(run("finetune " + conf + " --data " + p("data/train.jsonl") + " --vocab " + p("vocab.txt") +
                " --weights " + p("pre.bin") + " --out " + p("ft2.bin")),
            0);
  EXPECT_EQ(slurp(p("ft2.bin")), first);

  // a vocabulary that does not match the weights
  std::ofstream(kDir / "other.txt") << "just a few other words\n";
  ASSERT_EQ(run("build-vocab --data " + p("other.txt") + " --out " + p("other_vocab.txt")), 0);
  EXPECT_EQ(run("eval --data " + p("data/test.jsonl") + " --vocab " + p("other_vocab.txt") + " --weights " + p("ft.bin")), 2);
  EXPECT_EQ(run("eval --data " + p("data/test.jsonl") + " --vocab " + p("vocab.txt") + " --weights " + p("nope.bin")), 2);
  EXPECT_EQ(run("solve" + model + " --threshold 1.5"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, NumericFailureExitsThree) {
  const std::string conf = "--config " + p("tiny.conf");
  ASSERT_EQ(run("gen-data " + conf + " --out " + p("ndata")), 0);
  ASSERT_EQ(run("build-vocab --data " + p("ndata/corpus.txt") + " --out " + p("nvocab.txt")), 0);
  // an absurd learning rate drives the weights to overflow
  EXPECT_EQ(run("pretrain " + conf + " --set pretrain.lr=1e30 --set pretrain.epochs=3 --data " + p("ndata/corpus.txt") +
                " --vocab " + p("nvocab.txt") + " --out " + p("n.bin")),
            3)
      << slurp(kDir / "last.log");
}
