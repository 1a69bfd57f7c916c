#include "eslsc/qdata.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "eslsc/error.hpp"

namespace eslsc {

namespace {

const std::regex& blank_regex(const std::string& pattern) {
  thread_local std::unordered_map<std::string, std::regex> cache;
  auto it = cache.find(pattern);
  if (it == cache.end()) {
    it = cache.emplace(pattern, std::regex(pattern, std::regex::ECMAScript | std::regex::optimize))
             .first;
  }
  return it->second;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::C1: return "C1";
    case Category::C2: return "C2";
    case Category::C3: return "C3";
    case Category::C4: return "C4";
  }
  return "?";
}

Category category_from_string(std::string_view s) {
  for (Category c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  throw ParseError("unknown category '" + std::string(s) + "'");
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

int count_blanks(std::string_view stem, const QuestionFormat& format) {
  const auto& re = blank_regex(format.blank_pattern);
  std::string s(stem);
  return static_cast<int>(
      std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
}

int token_count(std::string_view segment) {
  int n = 0;
  bool in_word = false;
  for (char c : segment) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

OptionSegments split_option(std::string_view option_text, const QuestionFormat& format) {
  if (trim(option_text).empty()) throw StructuralError("option text is empty");
  OptionSegments out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = option_text.find(format.separator, start);
    std::string piece = normalize_whitespace(
        option_text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (piece.empty()) {
      throw StructuralError("option '" + std::string(option_text) + "' has an empty segment at position " +
                            std::to_string(out.segments.size()));
    }
    if (count_blanks(piece, format) > 0) {
      throw StructuralError("option segment '" + piece + "' contains a blank marker");
    }
    out.segments.push_back(std::move(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fill(std::string_view stem, const OptionSegments& option, const QuestionFormat& format) {
  const int blanks = count_blanks(stem, format);
  if (static_cast<int>(option.size()) != blanks) {
    throw FillError("cannot fill " + std::to_string(blanks) + " blank(s) with " +
                    std::to_string(option.size()) + " segment(s)");
  }
  const auto& re = blank_regex(format.blank_pattern);
  std::string s(stem);
  std::string out;
  std::size_t last = 0;
  std::size_t i = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it, ++i) {
    out.append(s, last, static_cast<std::size_t>(it->position()) - last);
    out.push_back(' ');
    out += option.segments[i];
    out.push_back(' ');
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(s, last, std::string::npos);
  return normalize_whitespace(out);
}

namespace {

Category derive_category(int blanks, const std::vector<OptionSegments>& segments) {
  bool any_fillable = false;
  bool many_token = false;
  for (const auto& seg : segments) {
    if (static_cast<int>(seg.size()) != blanks) continue;
    any_fillable = true;
    for (const auto& piece : seg.segments) {
      if (token_count(piece) > 1) many_token = true;
    }
  }
  if (!any_fillable) {
    throw StructuralError("no option matches the stem's " + std::to_string(blanks) + " blank(s)");
  }
  if (blanks == 1) return many_token ? Category::C2 : Category::C1;
  return many_token ? Category::C4 : Category::C3;
}

}  // namespace

ScQuestion::ScQuestion(std::string id, std::string stem, std::vector<std::string> options,
                       std::optional<int> answer_index, std::string split, QuestionFormat format)
    : id_(std::move(id)),
      stem_(std::move(stem)),
      options_(std::move(options)),
      answer_(answer_index),
      split_(std::move(split)),
      format_(std::move(format)) {
  blanks_ = count_blanks(stem_, format_);
  if (blanks_ == 0) throw StructuralError("question '" + id_ + "': stem contains no blank marker");
  if (options_.size() < 2) {
    throw StructuralError("question '" + id_ + "': needs at least 2 options, got " +
                          std::to_string(options_.size()));
  }
  if (answer_ && (*answer_ < 0 || *answer_ >= num_options())) {
    throw StructuralError("question '" + id_ + "': answer " + std::to_string(*answer_) +
                          " outside [0, " + std::to_string(num_options()) + ")");
  }
  std::set<std::string> seen;
  for (const auto& opt : options_) {
    if (!seen.insert(normalize_whitespace(opt)).second) {
      throw StructuralError("question '" + id_ + "': duplicate option '" + opt + "'");
    }
    segments_.push_back(split_option(opt, format_));
  }
  category_ = derive_category(blanks_, segments_);
}

const OptionSegments& ScQuestion::segments(int option) const {
  if (option < 0 || option >= num_options()) {
    throw RangeError("option index " + std::to_string(option) + " out of range");
  }
  return segments_[static_cast<std::size_t>(option)];
}

bool ScQuestion::fillable(int option) const {
  return static_cast<int>(segments(option).size()) == blanks_;
}

bool ScQuestion::has_mismatch() const {
  for (int i = 0; i < num_options(); ++i) {
    if (!fillable(i)) return true;
  }
  return false;
}

Category categorize(const ScQuestion& q) {
  std::vector<OptionSegments> segs;
  for (int i = 0; i < q.num_options(); ++i) segs.push_back(q.segments(i));
  return derive_category(q.blank_count(), segs);
}

std::vector<FilledCandidate> expand(const ScQuestion& q) {
  std::vector<FilledCandidate> out;
  out.reserve(q.options().size());
  for (int i = 0; i < q.num_options(); ++i) {
    FilledCandidate c;
    c.question_id = q.id();
    c.option_index = i;
    try {
      c.sentence = fill(q.stem(), q.segments(i), q.format());
    } catch (const FillError& e) {
      throw FillError("question '" + q.id() + "' option " + std::to_string(i) + ": " + e.what());
    }
    if (q.answer_index()) c.label = (*q.answer_index() == i);
    out.push_back(std::move(c));
  }
  return out;
}

ScQuestion parse_question(std::string_view record, const QuestionFormat& format) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(record);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("record: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record: expected a JSON object");

  auto required_string = [&](const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(std::string("field '") + field + "' is missing");
    if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
  };

  std::string id;
  if (auto it = j.find("id"); it != j.end() && !it->is_null()) id = required_string("id");
  std::string stem = required_string("stem");

  auto opts = j.find("options");
  if (opts == j.end()) throw ParseError("field 'options' is missing");
  if (!opts->is_array()) throw ParseError("field 'options' must be an array");
  std::vector<std::string> options;
  for (std::size_t i = 0; i < opts->size(); ++i) {
    if (!(*opts)[i].is_string()) {
      throw ParseError("field 'options[" + std::to_string(i) + "]' must be a string");
    }
    options.push_back((*opts)[i].get<std::string>());
  }

  std::optional<int> answer;
  if (auto a = j.find("answer"); a != j.end() && !a->is_null()) {
    if (!a->is_number_integer()) throw ParseError("field 'answer' must be an integer");
    answer = a->get<int>();
  }

  std::string split;
  if (auto s = j.find("split"); s != j.end() && !s->is_null()) {
    if (!s->is_string()) throw ParseError("field 'split' must be a string");
    split = s->get<std::string>();
  }

  return ScQuestion(std::move(id), std::move(stem), std::move(options), answer, std::move(split), format);
}

std::string render_question(const ScQuestion& q) {
  nlohmann::ordered_json j;
  if (!q.id().empty()) j["id"] = q.id();
  j["stem"] = q.stem();
  j["options"] = q.options();
  if (q.answer_index()) j["answer"] = *q.answer_index();
  if (!q.split().empty()) j["split"] = q.split();
  return j.dump();
}

std::vector<ScQuestion> load_dataset(const std::filesystem::path& path, const QuestionFormat& format) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open dataset '" + path.string() + "'");
  std::vector<ScQuestion> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize_whitespace(line).empty()) continue;
    try {
      ScQuestion q = parse_question(line, format);
      if (q.id().empty()) {
        q = ScQuestion("line-" + std::to_string(lineno), q.stem(), q.options(), q.answer_index(), q.split(), format);
      }
      out.push_back(std::move(q));
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<ScQuestion>& questions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write dataset '" + path.string() + "'");
  for (const auto& q : questions) out << render_question(q) << '\n';
}

}  // namespace eslsc
