#include "eslsc/run_config.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "eslsc/error.hpp"

namespace eslsc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (is.fail() || !is.eof()) throw ParseError("config: bad value '" + value + "' for '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("config: bad boolean '" + value + "' for '" + key + "'");
}

void set_train(TrainConfig& t, const std::string& prefix, const std::string& field, const std::string& value) {
  const std::string key = prefix + "." + field;
  if (field == "lr") t.lr = parse_number<double>(key, value);
  else if (field == "beta1") t.beta1 = parse_number<double>(key, value);
  else if (field == "beta2") t.beta2 = parse_number<double>(key, value);
  else if (field == "eps") t.eps = parse_number<double>(key, value);
  else if (field == "batch_size") t.batch_size = parse_number<int>(key, value);
  else if (field == "epochs") t.epochs = parse_number<int>(key, value);
  else if (field == "max_steps") t.max_steps = parse_number<long>(key, value);
  else if (field == "mask_rate") t.mask_rate = parse_number<double>(key, value);
  else if (field == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (field == "positive_class_weight") t.positive_class_weight = parse_bool(key, value);
  else throw ParseError("config: unknown key '" + key + "'");
}

void dump_train(std::map<std::string, std::string>& kv, const std::string& p, const TrainConfig& t) {
  auto num = [](double x) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
  };
  kv[p + ".lr"] = num(t.lr);
  kv[p + ".beta1"] = num(t.beta1);
  kv[p + ".beta2"] = num(t.beta2);
  kv[p + ".eps"] = num(t.eps);
  kv[p + ".batch_size"] = std::to_string(t.batch_size);
  kv[p + ".epochs"] = std::to_string(t.epochs);
  kv[p + ".max_steps"] = std::to_string(t.max_steps);
  kv[p + ".mask_rate"] = num(t.mask_rate);
  kv[p + ".seed"] = std::to_string(t.seed);
  kv[p + ".positive_class_weight"] = t.positive_class_weight ? "true" : "false";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string field = dot == std::string::npos ? key : key.substr(dot + 1);
  if (section.empty()) {
    if (field != "seed") throw ParseError("config: unknown key '" + key + "'");
    set_seed(parse_number<std::uint64_t>(key, value));
    return;
  }
  if (section == "gen") {
    if (field == "counts") {
      std::istringstream is(value);
      std::string part;
      std::size_t i = 0;
      while (std::getline(is, part, ',')) {
        if (i >= gen.counts.size()) throw ParseError("config: gen.counts takes four values");
        gen.counts[i++] = parse_number<int>(key, trim(part));
      }
      if (i != gen.counts.size()) throw ParseError("config: gen.counts takes four values");
    } else if (field == "options_min") gen.options_min = parse_number<int>(key, value);
    else if (field == "options_max") gen.options_max = parse_number<int>(key, value);
    else if (field == "seed") gen.seed = parse_number<std::uint64_t>(key, value);
    else if (field == "test_fraction") gen.test_fraction = parse_number<double>(key, value);
    else if (field == "corpus_size") gen.corpus_size = parse_number<int>(key, value);
    else throw ParseError("config: unknown key '" + key + "'");
  } else if (section == "model") {
    if (field == "d_model") model.d_model = parse_number<int>(key, value);
    else if (field == "encoder_layers") model.encoder_layers = parse_number<int>(key, value);
    else if (field == "decoder_layers") model.decoder_layers = parse_number<int>(key, value);
    else if (field == "heads") model.heads = parse_number<int>(key, value);
    else if (field == "ffn_width") model.ffn_width = parse_number<int>(key, value);
    else if (field == "head_hidden") model.head_hidden = parse_number<int>(key, value);
    else if (field == "max_len") model.max_len = parse_number<int>(key, value);
    else if (field == "dropout") model.dropout = parse_number<double>(key, value);
    else if (field == "seed") model.seed = parse_number<std::uint64_t>(key, value);
    else throw ParseError("config: unknown key '" + key + "'");
  } else if (section == "pretrain") {
    set_train(pretrain, section, field, value);
  } else if (section == "finetune") {
    set_train(finetune, section, field, value);
  } else {
    throw ParseError("config: unknown section in '" + key + "'");
  }
  if (field == "seed") pinned_[section] = true;
}

void RunConfig::set_seed(std::uint64_t root) {
  seed = root;
  if (!pinned_.count("gen")) gen.seed = derive_seed(root, 0);
  if (!pinned_.count("model")) model.seed = derive_seed(root, 1);
  if (!pinned_.count("pretrain")) pretrain.seed = derive_seed(root, 2);
  if (!pinned_.count("finetune")) finetune.seed = derive_seed(root, 3);
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  std::ostringstream counts;
  for (std::size_t i = 0; i < gen.counts.size(); ++i) counts << (i ? "," : "") << gen.counts[i];
  kv["gen.counts"] = counts.str();
  kv["gen.options_min"] = std::to_string(gen.options_min);
  kv["gen.options_max"] = std::to_string(gen.options_max);
  kv["gen.seed"] = std::to_string(gen.seed);
  std::ostringstream tf;
  tf << std::setprecision(std::numeric_limits<double>::max_digits10) << gen.test_fraction;
  kv["gen.test_fraction"] = tf.str();
  kv["gen.corpus_size"] = std::to_string(gen.corpus_size);
  std::istringstream ms(model.serialize());
  std::string item;
  while (ms >> item) {
    const auto eq = item.find('=');
    kv["model." + item.substr(0, eq)] = item.substr(eq + 1);
  }
  dump_train(kv, "pretrain", pretrain);
  dump_train(kv, "finetune", finetune);
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
  return os.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open config '" + path.string() + "'");
  RunConfig c;
  c.set_seed(c.seed);
  std::string line;
  int lineno = 0;
  // The root seed is applied last so explicit sub-seeds win regardless of order.
  std::optional<std::uint64_t> root;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") {
        root = parse_number<std::uint64_t>(key, value);
      } else {
        c.set(key, value);
      }
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (root) c.set_seed(*root);
  return c;
}

}  // namespace eslsc
