#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eslsc/qdata.hpp"

namespace eslsc {

/// Template families. Each maps onto exactly one category:
///   kAgreement    C1  subject-verb agreement, one single-word blank
///   kAspect       C2  time cue -> auxiliary + verb form, one two-word blank
///   kPronounPair  C3  possessive / subject pronouns agreeing with a name
///   kModalPair    C3  paired modals (deduction "must; can't", obligation "must; needn't")
///   kAspectPair   C4  two clauses, each with its own time cue
enum class Family { kAgreement, kAspect, kPronounPair, kModalPair, kAspectPair };

std::string_view to_string(Family f);
Category intended_category(Family f);
/// Family encoded in a generated question id; throws ParseError otherwise.
Family family_of(const ScQuestion& q);

struct GenConfig {
  /// Questions per category (train + test), indexed by Category.
  std::array<int, 4> counts{600, 600, 600, 600};
  /// Options per question drawn uniformly from [options_min, options_max] within [3, 5].
  int options_min = 4;
  int options_max = 4;
  std::uint64_t seed = 1234;
  /// Per-category share routed to the test split (rounded).
  double test_fraction = 1.0 / 6.0;
  /// Sentences produced by corpus().
  int corpus_size = 6000;

  void validate() const;
};

struct GeneratedData {
  std::vector<ScQuestion> train;
  std::vector<ScQuestion> test;
};

/// Keyed questions with exact per-category counts; deterministic in the
/// config, id-disjoint splits, globally unique stems.
GeneratedData generate(const GenConfig& config);

/// Correct filled sentences for pretraining, none equal to a test question's
/// correct sentence.
std::vector<std::string> corpus(const GenConfig& config);

/// Rule checker, written independently of the generator: for each option,
/// whether it satisfies the grammar rule of the question's family, judged
/// from the stem text and the lexicon alone.
std::vector<bool> rule_check(const ScQuestion& q);

/// Whether every segment of every option belongs to the paradigm the key is
/// drawn from (same verb's inflections, same modal or pronoun set).
bool distractors_in_paradigm(const ScQuestion& q);

/// Template versions recorded in manifests.
std::vector<std::pair<std::string, std::string>> template_versions();

/// Writes train.jsonl, test.jsonl, corpus.txt and manifest.json into `dir`.
void write_generated(const std::filesystem::path& dir, const GenConfig& config);

}  // namespace eslsc
