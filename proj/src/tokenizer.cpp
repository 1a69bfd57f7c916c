#include "eslsc/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "eslsc/error.hpp"

namespace eslsc {

namespace {

constexpr std::string_view kEmDash = "\xE2\x80\x94";

bool is_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '\'': case '"': case '-':
      return true;
    default:
      return false;
  }
}

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

const std::vector<std::string> kSpecialTokens = {"<pad>", "<s>", "</s>", "<unk>", "<mask>"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      flush();
    } else if (text.substr(i, kEmDash.size()) == kEmDash) {
      flush();
      out.emplace_back(kEmDash);
      i += kEmDash.size() - 1;
    } else if (c == '\'' && !word.empty() && is_letter(word.back()) && i + 1 < text.size() &&
               is_letter(text[i + 1])) {
      word.push_back(c);
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      word.push_back(lower(c));
    }
  }
  flush();
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> tokens) {
  id_to_token_ = kSpecialTokens;
  for (int i = 0; i < SpecialIds::kCount; ++i) token_to_id_.emplace(id_to_token_[i], i);
  for (auto& t : tokens) {
    if (t.empty() || t.find_first_of(" \t\n\r") != std::string::npos) {
      throw ArtifactError("vocabulary token '" + t + "' is empty or contains whitespace");
    }
    if (!token_to_id_.emplace(t, size()).second) {
      throw ArtifactError("vocabulary token '" + t + "' appears twice");
    }
    id_to_token_.push_back(std::move(t));
  }
}

int Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? SpecialIds::kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) {
    throw RangeError("token id " + std::to_string(id) + " outside [0, " + std::to_string(size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write vocab '" + path.string() + "'");
  out << "VOCAB v1 " << size() << '\n';
  for (int i = SpecialIds::kCount; i < size(); ++i) out << i << '\t' << id_to_token_[i] << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open vocab '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  int declared = -1;
  hs >> magic >> version >> declared;
  if (magic != "VOCAB" || version != "v1" || declared < SpecialIds::kCount) {
    throw ArtifactError("vocab '" + path.string() + "': bad header '" + header + "'");
  }
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ArtifactError("vocab '" + path.string() + "': bad line '" + line + "'");
    int id = std::stoi(line.substr(0, tab));
    if (id != SpecialIds::kCount + static_cast<int>(tokens.size())) {
      throw ArtifactError("vocab '" + path.string() + "': ids not contiguous at " + std::to_string(id));
    }
    tokens.push_back(line.substr(tab + 1));
  }
  Vocab v(std::move(tokens));
  if (v.size() != declared) {
    throw ArtifactError("vocab '" + path.string() + "': header declares " + std::to_string(declared) +
                        " tokens, file has " + std::to_string(v.size()));
  }
  return v;
}

Vocab build_vocab(const std::vector<std::string>& corpus, int min_freq) {
  if (min_freq < 1) throw RangeError("min_freq must be >= 1");
  if (corpus.empty()) throw ArtifactError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, long> freq;
  for (const auto& text : corpus) {
    for (auto& t : tokenize(text)) ++freq[t];
  }
  std::vector<std::pair<std::string, long>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq && std::find(kSpecialTokens.begin(), kSpecialTokens.end(), tok) == kSpecialTokens.end()) {
      kept.emplace_back(tok, n);
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

std::vector<int> encode(std::string_view text, const Vocab& vocab, int max_len) {
  std::vector<int> ids{SpecialIds::kBos};
  for (const auto& t : tokenize(text)) ids.push_back(vocab.id(t));
  ids.push_back(SpecialIds::kEos);
  if (max_len > 0 && static_cast<int>(ids.size()) > max_len) {
    throw RangeError("sequence of " + std::to_string(ids.size()) + " tokens exceeds max_len " +
                     std::to_string(max_len));
  }
  return ids;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& tok = vocab.token(id);
    if (id < SpecialIds::kCount) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace eslsc
