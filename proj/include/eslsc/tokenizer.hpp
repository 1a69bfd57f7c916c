#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eslsc {

/// Reserved ids, fixed so weight files stay stable across vocabularies.
struct SpecialIds {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kMask = 4;
  static constexpr int kCount = 5;
};

/// Lowercases ASCII letters, splits on whitespace and detaches punctuation
/// (. , ! ? ; : ' " - and the em dash). Apostrophes between letters stay
/// inside the word ("can't").
std::vector<std::string> tokenize(std::string_view text);

/// Word-level vocabulary; immutable once built.
class Vocab {
 public:
  /// Vocabulary holding only the special tokens.
  Vocab();
  /// Ids are assigned to `tokens` in order starting at SpecialIds::kCount.
  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  /// UNK for out-of-vocabulary tokens.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

/// Keeps tokens seen at least `min_freq` times, ordered by descending
/// frequency then ascending token. Throws on an empty corpus.
Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq = 1);

/// BOS + ids + EOS, OOV mapped to UNK. When `max_len` > 0 a longer result is
/// rejected with RangeError rather than truncated.
std::vector<int> encode(std::string_view text, const Vocab& vocab, int max_len = 0);

/// Drops special ids and joins with single spaces. Throws RangeError on an id
/// outside [0, V).
std::string decode(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace eslsc
