#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "eslsc/model_config.hpp"
#include "eslsc/syngen.hpp"
#include "eslsc/training.hpp"

namespace eslsc {

/// Everything a pipeline run needs, read from a flat "key = value" file.
///
///   seed = 7
///   gen.counts = 600,600,600,600
///   model.d_model = 32
///   pretrain.epochs = 3
///   finetune.lr = 1e-3
///
/// Sub-seeds not set explicitly are derived from the root seed, so one
/// number fixes the whole run.
struct RunConfig {
  RunConfig() { set_seed(seed); }

  std::uint64_t seed = 1234;
  GenConfig gen;
  ModelConfig model;
  TrainConfig pretrain;
  TrainConfig finetune;

  /// Applies one key; throws ParseError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Applies the root seed to every sub-seed not pinned by `set`.
  void set_seed(std::uint64_t root);

  /// Canonical sorted "key=value" lines; the hash is taken over this text.
  std::string canonical() const;
  std::uint64_t hash() const;

  static RunConfig load(const std::filesystem::path& path);

 private:
  std::map<std::string, bool> pinned_;
};

/// splitmix64 of (root, stream); used for sub-seeds.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

}  // namespace eslsc
