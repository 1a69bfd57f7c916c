#include "eslsc/model_config.hpp"

#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "eslsc/error.hpp"

namespace eslsc {

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.head_hidden == 0) c.head_hidden = 4 * c.d_model;
  return c;
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw RangeError("model config: " + what);
  };
  need(d_model > 0, "d_model must be positive");
  need(encoder_layers >= 0 && decoder_layers >= 0, "layer counts must be non-negative");
  need(heads > 0, "heads must be positive");
  need(d_model % heads == 0, "heads must divide d_model");
  need(ffn_width > 0, "ffn_width must be positive");
  need(head_hidden >= 2, "head_hidden must be >= 2");
  need(vocab_size >= 5, "vocab_size must be >= 5");
  need(max_len >= 3, "max_len must be >= 3");
  need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "d_model=" << d_model << " encoder_layers=" << encoder_layers << " decoder_layers=" << decoder_layers
     << " heads=" << heads << " ffn_width=" << ffn_width << " head_hidden=" << head_hidden
     << " vocab_size=" << vocab_size << " max_len=" << max_len << " dropout=" << dropout << " seed=" << seed;
  return os.str();
}

ModelConfig ModelConfig::deserialize(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream is(line);
  std::string item;
  while (is >> item) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ArtifactError("model config: bad entry '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ArtifactError(std::string("model config: missing '") + key + "'");
    return it->second;
  };
  ModelConfig c;
  try {
    c.d_model = std::stoi(get("d_model"));
    c.encoder_layers = std::stoi(get("encoder_layers"));
    c.decoder_layers = std::stoi(get("decoder_layers"));
    c.heads = std::stoi(get("heads"));
    c.ffn_width = std::stoi(get("ffn_width"));
    c.head_hidden = std::stoi(get("head_hidden"));
    c.vocab_size = std::stoi(get("vocab_size"));
    c.max_len = std::stoi(get("max_len"));
    c.dropout = std::stod(get("dropout"));
    c.seed = std::stoull(get("seed"));
  } catch (const std::logic_error& e) {
    throw ArtifactError(std::string("model config: bad number: ") + e.what());
  }
  return c;
}

}  // namespace eslsc
