#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eslsc {

/// Difficulty class by blank count x per-segment token count.
enum class Category { C1, C2, C3, C4 };

inline constexpr Category kAllCategories[] = {Category::C1, Category::C2, Category::C3, Category::C4};

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);
inline int category_index(Category c) { return static_cast<int>(c); }

/// Typographic conventions of a dataset: how blanks are marked and how
/// per-blank option segments are separated.
struct QuestionFormat {
  std::string blank_pattern = "_{3,}";
  char separator = ';';

  bool operator==(const QuestionFormat&) const = default;
};

/// One option split into its per-blank pieces.
struct OptionSegments {
  std::vector<std::string> segments;

  std::size_t size() const { return segments.size(); }
  bool operator==(const OptionSegments&) const = default;
};

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Number of non-overlapping blank-marker occurrences.
int count_blanks(std::string_view stem, const QuestionFormat& format = {});

/// Splits on the separator and trims each piece. Throws StructuralError on an
/// empty piece or a piece containing a blank marker.
OptionSegments split_option(std::string_view option_text, const QuestionFormat& format = {});

/// Replaces the i-th blank with the i-th segment, left to right. Throws
/// FillError when the segment count differs from the blank count.
std::string fill(std::string_view stem, const OptionSegments& option,
                 const QuestionFormat& format = {});

/// Whitespace-delimited word count of a segment.
int token_count(std::string_view segment);

/// A multiple-choice sentence-completion question. Immutable after
/// construction; the constructor enforces every structural invariant.
class ScQuestion {
 public:
  ScQuestion(std::string id, std::string stem, std::vector<std::string> options,
             std::optional<int> answer_index = std::nullopt, std::string split = {},
             QuestionFormat format = {});

  const std::string& id() const { return id_; }
  const std::string& stem() const { return stem_; }
  const std::vector<std::string>& options() const { return options_; }
  int num_options() const { return static_cast<int>(options_.size()); }
  const std::optional<int>& answer_index() const { return answer_; }
  bool keyed() const { return answer_.has_value(); }
  const std::string& split() const { return split_; }
  const QuestionFormat& format() const { return format_; }

  int blank_count() const { return blanks_; }
  Category category() const { return category_; }
  const OptionSegments& segments(int option) const;

  /// Whether option i has as many segments as the stem has blanks.
  bool fillable(int option) const;
  /// True when at least one option cannot be filled (the "warning flag").
  bool has_mismatch() const;

  bool operator==(const ScQuestion&) const = default;

 private:
  std::string id_;
  std::string stem_;
  std::vector<std::string> options_;
  std::optional<int> answer_;
  std::string split_;
  QuestionFormat format_;
  int blanks_ = 0;
  std::vector<OptionSegments> segments_;
  Category category_ = Category::C1;
};

/// Recomputes the category from blanks and option segments. A question is
/// "many-token" when any fillable option has any multi-word segment.
Category categorize(const ScQuestion& q);

/// One option substituted into the stem.
struct FilledCandidate {
  std::string question_id;
  int option_index = 0;
  std::string sentence;
  std::optional<bool> label;

  bool operator==(const FilledCandidate&) const = default;
};

/// All m candidates in option order; labels present iff the question is keyed.
/// Throws FillError if any option is unfillable.
std::vector<FilledCandidate> expand(const ScQuestion& q);

/// Parses one dataset line (a flat JSON object). "id" and "split" are
/// optional; load_dataset names id-less records "line-N".
ScQuestion parse_question(std::string_view record, const QuestionFormat& format = {});

/// Serializes to a dataset line; parse_question(render_question(q)) == q.
std::string render_question(const ScQuestion& q);

std::vector<ScQuestion> load_dataset(const std::filesystem::path& path,
                                     const QuestionFormat& format = {});
void save_dataset(const std::filesystem::path& path, const std::vector<ScQuestion>& questions);

}  // namespace eslsc
