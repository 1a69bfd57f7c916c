// eslsc: generate data, train, solve and evaluate sentence-completion questions.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eslsc/error.hpp"
#include "eslsc/evalkit.hpp"
#include "eslsc/pipeline.hpp"
#include "eslsc/run_config.hpp"
#include "eslsc/solver.hpp"
#include "eslsc/syngen.hpp"
#include "eslsc/tokenizer.hpp"
#include "eslsc/training.hpp"
#include "eslsc/weights.hpp"

namespace fs = std::filesystem;
using namespace eslsc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kArtifact = 2, kNumeric = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> data;
  std::string vocab;
  std::string weights;
  std::string out;
  std::optional<double> threshold;
  double grid_step = 0.01;
  int min_freq = 1;
  std::string precision;
  std::string eval_data;
  std::vector<std::string> set;
};

RunConfig run_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.set_seed(*o.seed);
  return cfg;
}

std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ArtifactError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex(fnv1a(ss.str()));
}

/// Records what a command read, wrote and with which configuration.
void write_manifest(const fs::path& path, const std::string& command, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs, const RunConfig* cfg,
                    const nlohmann::ordered_json& extra = {}) {
  nlohmann::ordered_json m;
  m["command"] = command;
  auto files = [](const std::vector<fs::path>& ps) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : ps) arr.push_back({{"path", p.string()}, {"fnv1a", file_hash(p)}});
    return arr;
  };
  m["inputs"] = files(inputs);
  m["outputs"] = files(outputs);
  if (cfg) {
    m["config_hash"] = hex(cfg->hash());
    m["config"] = cfg->canonical();
  }
  if (!extra.is_null()) m["details"] = extra;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write '" + path.string() + "'");
  out << m.dump(2) << '\n';
}

fs::path manifest_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ArtifactError(std::string(flag) + " is required");
}

const std::string& single_data(const Options& o) {
  if (o.data.size() != 1) throw ArtifactError("--data takes exactly one path for this command");
  return o.data.front();
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ArtifactError("cannot write '" + p.string() + "'");
  return out;
}

Precision pick_precision(const Options& o, Precision fallback) {
  return o.precision.empty() ? fallback : precision_from_string(o.precision);
}

template <typename Scalar>
void check_vocab(const Seq2Seq<Scalar>& model, const Vocab& vocab) {
  if (model.config().vocab_size != vocab.size()) {
    throw ArtifactError("vocabulary has " + std::to_string(vocab.size()) + " tokens but the weights expect " +
                        std::to_string(model.config().vocab_size));
  }
}

int cmd_gen_data(const Options& o) {
  require(o.out, "--out");
  const RunConfig cfg = run_config(o);
  const fs::path dir = o.out;
  write_generated(dir, cfg.gen);
  write_manifest(dir / "gen-data.manifest.json", "gen-data", {},
                 {dir / "train.jsonl", dir / "test.jsonl", dir / "corpus.txt", dir / "manifest.json"}, &cfg);
  std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_build_vocab(const Options& o) {
  require(o.out, "--out");
  if (o.data.empty()) throw ArtifactError("--data is required");
  std::vector<std::string> sentences;
  std::vector<ScQuestion> questions;
  std::vector<fs::path> inputs;
  for (const auto& d : o.data) {
    inputs.emplace_back(d);
    if (fs::path(d).extension() == ".jsonl") {
      auto qs = load_dataset(d);
      questions.insert(questions.end(), qs.begin(), qs.end());
    } else {
      auto lines = read_lines(d);
      sentences.insert(sentences.end(), lines.begin(), lines.end());
    }
  }
  const Vocab vocab = build_vocab(vocab_texts(sentences, questions), o.min_freq);
  vocab.save(o.out);
  write_manifest(manifest_for(o.out), "build-vocab", inputs, {o.out}, nullptr,
                 {{"min_freq", o.min_freq}, {"size", vocab.size()}});
  std::cout << "vocabulary of " << vocab.size() << " tokens -> " << o.out << '\n';
  return kOk;
}

/// Writes "step\tloss" lines, plus "eval\tstep\taccuracy" after every epoch when asked.
class MetricsLog {
 public:
  explicit MetricsLog(const fs::path& path) : out_(open_out(path)) { out_ << std::setprecision(9); }
  void step(long s, double loss) { out_ << s << '\t' << loss << '\n'; }
  void eval(long s, double accuracy) { out_ << "eval\t" << s << '\t' << accuracy << '\n'; }

 private:
  std::ofstream out_;
};

template <typename Scalar>
int run_pretrain(const Options& o, const RunConfig& cfg, const Vocab& vocab) {
  const auto& data = single_data(o);
  std::optional<Seq2Seq<Scalar>> model;
  if (!o.weights.empty()) {
    model.emplace(load_weights<Scalar>(o.weights));
    check_vocab(*model, vocab);
  } else {
    ModelConfig mc = cfg.model;
    mc.vocab_size = vocab.size();
    model.emplace(mc);
  }
  const auto ids = encode_all(read_lines(data), vocab, model->config().max_len);
  const fs::path metrics = o.out + ".metrics.tsv";
  MetricsLog log(metrics);
  Trainer<Scalar> trainer(*model, cfg.pretrain);
  const auto losses = trainer.pretrain(ids, [&](long s, double l) { log.step(s, l); });
  save_weights(o.out, *model);
  std::vector<fs::path> inputs{data, o.vocab};
  if (!o.weights.empty()) inputs.emplace_back(o.weights);
  write_manifest(manifest_for(o.out), "pretrain", inputs, {o.out, metrics}, &cfg,
                 {{"steps", trainer.steps()}, {"final_loss", losses.empty() ? 0.0 : double(losses.back())}});
  std::cout << "pretrained " << trainer.steps() << " steps";
  if (!losses.empty()) std::cout << ", final loss " << double(losses.back());
  std::cout << " -> " << o.out << '\n';
  return kOk;
}

int cmd_pretrain(const Options& o) {
  require(o.out, "--out");
  require(o.vocab, "--vocab");
  const RunConfig cfg = run_config(o);
  const Vocab vocab = Vocab::load(o.vocab);
  Precision fallback = o.weights.empty() ? Precision::kF32 : read_weights_header(o.weights).precision;
  return pick_precision(o, fallback) == Precision::kF64 ? run_pretrain<double>(o, cfg, vocab)
                                                       : run_pretrain<float>(o, cfg, vocab);
}

template <typename Scalar>
int run_finetune(const Options& o, const RunConfig& cfg, const Vocab& vocab) {
  const auto& data = single_data(o);
  Seq2Seq<Scalar> model = load_weights<Scalar>(o.weights);
  check_vocab(model, vocab);
  const auto questions = load_dataset(data);
  const FinetuneDataset ft = make_finetune_dataset(questions, vocab, model.config().max_len);
  for (const auto& d : ft.diagnostics) std::cerr << "skipped: " << d << '\n';
  std::vector<ScQuestion> held;
  if (!o.eval_data.empty()) held = load_dataset(o.eval_data);

  const fs::path metrics = o.out + ".metrics.tsv";
  MetricsLog log(metrics);
  const long per_epoch =
      (static_cast<long>(ft.examples.size()) + cfg.finetune.batch_size - 1) / cfg.finetune.batch_size;
  Trainer<Scalar> trainer(model, cfg.finetune);
  const auto losses = trainer.finetune(ft.examples, [&](long s, double l) {
    log.step(s, l);
    if (!held.empty() && s % per_epoch == 0) log.eval(s, evaluate(model, vocab, held).overall.accuracy());
  });
  save_weights(o.out, model);
  std::vector<fs::path> inputs{data, o.vocab, o.weights};
  if (!o.eval_data.empty()) inputs.emplace_back(o.eval_data);
  write_manifest(manifest_for(o.out), "finetune", inputs, {o.out, metrics}, &cfg,
                 {{"steps", trainer.steps()},
                  {"examples", ft.examples.size()},
                  {"skipped", ft.skipped},
                  {"final_loss", losses.empty() ? 0.0 : double(losses.back())}});
  std::cout << "fine-tuned " << trainer.steps() << " steps on " << ft.examples.size() << " examples";
  if (!losses.empty()) std::cout << ", final loss " << double(losses.back());
  std::cout << " -> " << o.out << '\n';
  return kOk;
}

int cmd_finetune(const Options& o) {
  require(o.out, "--out");
  require(o.vocab, "--vocab");
  require(o.weights, "--weights");
  const RunConfig cfg = run_config(o);
  const Vocab vocab = Vocab::load(o.vocab);
  return pick_precision(o, read_weights_header(o.weights).precision) == Precision::kF64
             ? run_finetune<double>(o, cfg, vocab)
             : run_finetune<float>(o, cfg, vocab);
}

template <typename Scalar>
std::vector<std::optional<Prediction>> predict(const Options& o, const Vocab& vocab,
                                               const std::vector<ScQuestion>& questions) {
  const Seq2Seq<Scalar> model = load_weights<Scalar>(o.weights);
  return Solver<Scalar>(model, vocab).solve_all(questions);
}

/// Loads vocab, weights and questions and scores every question.
std::vector<std::optional<Prediction>> predict_all(const Options& o, const std::vector<ScQuestion>& questions) {
  require(o.vocab, "--vocab");
  require(o.weights, "--weights");
  const Vocab vocab = Vocab::load(o.vocab);
  const Precision p = pick_precision(o, read_weights_header(o.weights).precision);
  return p == Precision::kF64 ? predict<double>(o, vocab, questions) : predict<float>(o, vocab, questions);
}

int cmd_solve(const Options& o) {
  const auto& data = single_data(o);
  const double tau = o.threshold.value_or(0.0);
  if (!(tau >= 0.0 && tau <= 1.0)) throw RangeError("--threshold must lie in [0, 1]");
  const auto questions = load_dataset(data);
  const auto predictions = predict_all(o, questions);
  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;
  long answered = 0;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (!predictions[i]) {
      std::cerr << "question '" << questions[i].id() << "': no option could be scored\n";
      continue;
    }
    const Decision d = decide(*predictions[i], tau);
    answered += d.answered ? 1 : 0;
    out << decision_record(d, questions[i].answer_index()) << '\n';
  }
  if (!o.out.empty()) {
    file.close();
    write_manifest(manifest_for(o.out), "solve", {data, o.vocab, o.weights}, {o.out}, nullptr,
                   {{"threshold", tau}, {"answered", answered}, {"questions", questions.size()}});
  }
  std::cerr << "answered " << answered << " of " << questions.size() << " at threshold " << tau << '\n';
  return kOk;
}

std::string split_name(const std::vector<ScQuestion>& questions, const fs::path& data) {
  if (!questions.empty() && !questions.front().split().empty()) {
    const auto& s = questions.front().split();
    if (std::all_of(questions.begin(), questions.end(), [&](const ScQuestion& q) { return q.split() == s; })) return s;
  }
  return data.stem().string();
}

int cmd_eval(const Options& o) {
  const auto& data = single_data(o);
  const auto questions = load_dataset(data);
  const auto predictions = predict_all(o, questions);
  const EvalReport report = evaluate(questions, predictions);
  print_report(std::cout, report);
  if (!o.out.empty()) {
    {
      auto out = open_out(o.out);
      write_report_records(out, split_name(questions, data), report);
    }
    write_manifest(manifest_for(o.out), "eval", {data, o.vocab, o.weights}, {o.out}, nullptr);
  }
  return kOk;
}

int cmd_pr_sweep(const Options& o) {
  const auto& data = single_data(o);
  const auto questions = load_dataset(data);
  const auto predictions = predict_all(o, questions);
  const PrCurve curve = pr_sweep(questions, predictions, threshold_grid(o.grid_step));
  print_curve(std::cout, curve);
  if (!o.out.empty()) {
    {
      auto out = open_out(o.out);
      write_curve_records(out, curve);
    }
    write_manifest(manifest_for(o.out), "pr-sweep", {data, o.vocab, o.weights}, {o.out}, nullptr,
                   {{"grid_step", o.grid_step}});
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-completion solver: data generation, training and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Flat key = value run configuration")->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "Root seed; overrides the config file");
    c->add_option("--set", o.set, "Extra key=value overrides applied after --config");
  };
  auto model_inputs = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Input dataset (.jsonl) or sentence file")->required();
    c->add_option("--vocab", o.vocab, "Vocabulary file")->required();
    c->add_option("--weights", o.weights, "Weight file")->required();
    c->add_option("--precision", o.precision, "Compute precision")->check(CLI::IsMember({"f32", "f64"}));
  };

  auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/test questions and a corpus");
  common(gen);
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* vocab = app.add_subcommand("build-vocab", "Build a vocabulary from datasets and sentence files");
  vocab->add_option("--data", o.data, "Input .jsonl datasets or sentence files (repeatable)")->required();
  vocab->add_option("--min-freq", o.min_freq, "Minimum token frequency")->check(CLI::PositiveNumber);
  vocab->add_option("--out", o.out, "Vocabulary file to write")->required();

  auto* pre = app.add_subcommand("pretrain", "Denoising pretraining on a sentence file");
  common(pre);
  pre->add_option("--data", o.data, "Sentence file, one per line")->required();
  pre->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  pre->add_option("--weights", o.weights, "Optional starting weights");
  pre->add_option("--precision", o.precision, "Training precision")->check(CLI::IsMember({"f32", "f64"}));
  pre->add_option("--out", o.out, "Weight file to write")->required();

  auto* ft = app.add_subcommand("finetune", "Right/wrong fine-tuning on keyed questions");
  common(ft);
  ft->add_option("--data", o.data, "Keyed training questions (.jsonl)")->required();
  ft->add_option("--vocab", o.vocab, "Vocabulary file")->required();
  ft->add_option("--weights", o.weights, "Pretrained weights")->required();
  ft->add_option("--precision", o.precision, "Training precision")->check(CLI::IsMember({"f32", "f64"}));
  ft->add_option("--eval-data", o.eval_data, "Questions evaluated after every epoch");
  ft->add_option("--out", o.out, "Weight file to write")->required();

  auto* solve = app.add_subcommand("solve", "Answer questions, abstaining below a threshold");
  model_inputs(solve);
  solve->add_option("--threshold", o.threshold, "Answer only when confidence >= threshold")
      ->check(CLI::Range(0.0, 1.0));
  solve->add_option("--out", o.out, "Decision records (default stdout)");

  auto* eval = app.add_subcommand("eval", "Per-category accuracy");
  model_inputs(eval);
  eval->add_option("--out", o.out, "Machine-readable report");

  auto* sweep = app.add_subcommand("pr-sweep", "Precision and recall over a threshold grid");
  model_inputs(sweep);
  sweep->add_option("--grid-step", o.grid_step, "Threshold grid step")->check(CLI::Range(1e-6, 1.0));
  sweep->add_option("--out", o.out, "Machine-readable curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*vocab) return cmd_build_vocab(o);
    if (*pre) return cmd_pretrain(o);
    if (*ft) return cmd_finetune(o);
    if (*solve) return cmd_solve(o);
    if (*eval) return cmd_eval(o);
    if (*sweep) return cmd_pr_sweep(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kArtifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kArtifact;
  }
  return kUsage;
}
