#pragma once

#include <cstdint>
#include <string>

namespace eslsc {

/// Shape of the encoder-decoder. head_hidden = 0 resolves to 4 * d_model;
/// set it to 1024 for the full-size classification head.
struct ModelConfig {
  int d_model = 32;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int ffn_width = 128;
  int head_hidden = 0;
  int vocab_size = 0;
  int max_len = 48;
  double dropout = 0.0;
  std::uint64_t seed = 1234;

  /// Fills defaults that depend on other fields.
  ModelConfig resolved() const;
  /// Throws RangeError naming the first violated constraint.
  void validate() const;

  /// Single-line "key=value ..." form stored in weight files.
  std::string serialize() const;
  static ModelConfig deserialize(const std::string& line);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace eslsc
