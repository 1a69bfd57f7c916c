#include "eslsc/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "eslsc/error.hpp"
#include "eslsc/tokenizer.hpp"

namespace eslsc {

namespace {

// ---------------------------------------------------------------------------
// Lexicons
// ---------------------------------------------------------------------------

struct Subject {
  const char* text;
  bool third_singular;
};

const std::vector<Subject> kSubjects = {
    {"he", true},           {"she", true},          {"Tom", true},           {"Lucy", true},
    {"my sister", true},    {"my brother", true},   {"the teacher", true},   {"our neighbor", true},
    {"the old man", true},  {"the little girl", true}, {"my father", true},  {"Mary", true},
    {"I", false},           {"you", false},         {"we", false},           {"they", false},
    {"my parents", false},  {"the students", false}, {"Tom and Lucy", false}, {"the children", false},
    {"my friends", false},  {"our teachers", false}, {"you and I", false},   {"the twins", false},
};

enum Form5 { kBase, kThird, kPast, kIng, kParticiple };

struct Verb5 {
  std::array<const char*, 5> forms;  // base, 3sg, past, -ing, participle
  std::vector<const char*> complements;
};

// Verbs whose five forms are pairwise distinct.
const std::vector<Verb5> kAgreementVerbs = {
    {{"go", "goes", "went", "going", "gone"}, {"to school by bike", "to the park after lunch"}},
    {{"eat", "eats", "ate", "eating", "eaten"}, {"an apple after dinner", "rice for lunch"}},
    {{"write", "writes", "wrote", "writing", "written"}, {"letters to old friends", "in a diary"}},
    {{"take", "takes", "took", "taking", "taken"}, {"the bus to work", "photos of birds"}},
    {{"see", "sees", "saw", "seeing", "seen"}, {"the doctor on Fridays", "a film on Saturdays"}},
    {{"drive", "drives", "drove", "driving", "driven"}, {"to the office", "a small car"}},
    {{"ride", "rides", "rode", "riding", "ridden"}, {"a bike to the market", "a horse on the farm"}},
    {{"speak", "speaks", "spoke", "speaking", "spoken"}, {"English at home", "to the manager"}},
    {{"give", "gives", "gave", "giving", "given"}, {"flowers to the nurses", "money to the poor"}},
    {{"do", "does", "did", "doing", "done"}, {"the dishes after dinner", "homework in the evening"}},
    {{"swim", "swims", "swam", "swimming", "swum"}, {"in the lake", "before breakfast"}},
    {{"sing", "sings", "sang", "singing", "sung"}, {"in the choir", "songs at parties"}},
    {{"drink", "drinks", "drank", "drinking", "drunk"}, {"milk in the morning", "green tea"}},
    {{"draw", "draws", "drew", "drawing", "drawn"}, {"pictures of animals", "maps for the class"}},
    {{"fly", "flies", "flew", "flying", "flown"}, {"kites in the park", "to Paris for work"}},
    {{"wear", "wears", "wore", "wearing", "worn"}, {"a blue uniform", "glasses for reading"}},
    {{"grow", "grows", "grew", "growing", "grown"}, {"tomatoes in the garden", "roses near the gate"}},
    {{"throw", "throws", "threw", "throwing", "thrown"}, {"the ball to the dog", "old papers away"}},
    {{"choose", "chooses", "chose", "choosing", "chosen"}, {"the music for the party", "a book to read"}},
    {{"forget", "forgets", "forgot", "forgetting", "forgotten"}, {"the keys", "the password"}},
    {{"begin", "begins", "began", "beginning", "begun"}, {"work at eight", "the lesson with a song"}},
    {{"know", "knows", "knew", "knowing", "known"}, {"the answer", "the way to the station"}},
};

const std::vector<const char*> kPresentCues = {"these days", "nowadays", "every day now", "at present"};

enum class Aspect { kFuture, kProgressive, kPerfect, kPastPerfect, kInvalid };

struct Cue {
  const char* text;  // clause-initial, lower case
  Aspect aspect;
  bool clause_b;     // usable after ", but"
};

const std::vector<Cue> kCues = {
    {"tomorrow", Aspect::kFuture, true},
    {"next week", Aspect::kFuture, true},
    {"next summer", Aspect::kFuture, true},
    {"tomorrow morning", Aspect::kFuture, true},
    {"right now", Aspect::kProgressive, true},
    {"at the moment", Aspect::kProgressive, true},
    {"look", Aspect::kProgressive, false},
    {"at present", Aspect::kProgressive, true},
    {"since last monday", Aspect::kPerfect, true},
    {"so far this year", Aspect::kPerfect, true},
    {"since this morning", Aspect::kPerfect, true},
    {"up to now", Aspect::kPerfect, true},
    {"before we arrived", Aspect::kPastPerfect, true},
    {"by the time we came", Aspect::kPastPerfect, true},
    {"before the bell rang", Aspect::kPastPerfect, true},
    {"by last friday", Aspect::kPastPerfect, true},
};

struct Verb3 {
  const char* base;
  const char* ing;
  const char* participle;
  std::vector<const char*> complements;
};

const std::vector<Verb3> kAspectVerbs = {
    {"play", "playing", "played", {"football", "the piano"}},
    {"clean", "cleaning", "cleaned", {"the kitchen", "the windows"}},
    {"watch", "watching", "watched", {"a film", "the birds"}},
    {"cook", "cooking", "cooked", {"dinner", "some soup"}},
    {"paint", "painting", "painted", {"the fence", "a picture"}},
    {"visit", "visiting", "visited", {"the museum", "her grandma"}},
    {"read", "reading", "read", {"a novel", "the report"}},
    {"build", "building", "built", {"a model plane", "a sandcastle"}},
    {"write", "writing", "written", {"an essay", "a letter"}},
    {"fix", "fixing", "fixed", {"the car", "the old radio"}},
    {"wash", "washing", "washed", {"the dishes", "the dog"}},
    {"study", "studying", "studied", {"for the exam", "maths"}},
    {"practise", "practising", "practised", {"the violin", "English"}},
    {"plan", "planning", "planned", {"the trip", "the party"}},
    {"finish", "finishing", "finished", {"the project", "the homework"}},
};

const std::vector<const char*> kSingularSubjects = {
    "he", "she", "Tom", "Lucy", "my sister", "my brother", "the teacher", "our neighbor",
    "the old man", "the little girl", "my father", "Mary", "the coach", "my aunt"};

enum class Gender { kMale, kFemale, kPlural, kNeuter };

struct Name {
  const char* text;
  Gender gender;
};

const std::vector<Name> kNames = {
    {"Tom", Gender::kMale},    {"Jack", Gender::kMale},   {"Mike", Gender::kMale},   {"Peter", Gender::kMale},
    {"David", Gender::kMale},  {"John", Gender::kMale},   {"Sam", Gender::kMale},    {"Bob", Gender::kMale},
    {"Jim", Gender::kMale},    {"Paul", Gender::kMale},   {"Lucy", Gender::kFemale}, {"Mary", Gender::kFemale},
    {"Lily", Gender::kFemale}, {"Anna", Gender::kFemale}, {"Kate", Gender::kFemale}, {"Linda", Gender::kFemale},
    {"Emma", Gender::kFemale}, {"Sarah", Gender::kFemale}, {"Amy", Gender::kFemale}, {"Jane", Gender::kFemale},
};

struct Pronoun {
  const char* possessive;
  const char* subject;
  const char* object;
  Gender gender;
};

const std::vector<Pronoun> kPronouns = {
    {"his", "he", "him", Gender::kMale},
    {"her", "she", "her", Gender::kFemale},
    {"their", "they", "them", Gender::kPlural},
    {"its", "it", "it", Gender::kNeuter},
};

const Pronoun& pronoun_for(Gender g) {
  for (const auto& p : kPronouns) {
    if (p.gender == g) return p;
  }
  throw Error("no pronoun for gender");
}

enum class Slot { kPossessive, kSubject };

struct PronounTemplate {
  const char* pattern;  // {N} name, {X} filler, ___ blanks
  std::array<Slot, 2> slots;
  std::vector<const char*> fillers;
};

const std::vector<PronounTemplate> kPronounTemplates = {
    {"{N} lost ___ {X} yesterday, so ___ had to buy a new one.", {Slot::kPossessive, Slot::kSubject},
     {"key", "wallet", "umbrella", "phone", "watch", "bag", "ticket"}},
    {"{N} said that ___ would bring ___ own lunch {X}.", {Slot::kSubject, Slot::kPossessive},
     {"today", "on Friday", "for the trip", "to school", "tomorrow"}},
    {"{N} called ___ {X} because ___ felt sick.", {Slot::kPossessive, Slot::kSubject},
     {"mother", "father", "aunt", "grandmother", "teacher", "friend"}},
    {"{N} was late because ___ missed ___ {X}.", {Slot::kSubject, Slot::kPossessive},
     {"bus", "train", "flight", "ferry"}},
    {"{N} cleaned ___ room before ___ went {X}.", {Slot::kPossessive, Slot::kSubject},
     {"out", "to bed", "to the cinema", "shopping", "to work"}},
    {"When {N} got home, ___ found ___ {X} asleep.", {Slot::kSubject, Slot::kPossessive},
     {"dog", "cat", "puppy", "kitten", "baby brother"}},
};

const std::vector<const char*> kModalFirst = {"must", "can", "may"};
const std::vector<const char*> kModalSecond = {"can't", "needn't", "mustn't"};

const std::vector<const char*> kDeductionThings = {"T-shirt", "cap", "bag", "scarf", "jacket",
                                                   "umbrella", "cup", "notebook", "sweater"};

struct Detail {
  const char* on_it;
  const char* liked;
};

const std::vector<Detail> kDeductionDetails = {
    {"a cat", "cats"},       {"Yao Ming's picture", "him"}, {"a football", "football"}, {"a star", "stars"},
    {"a panda", "pandas"},   {"a guitar", "music"},         {"a rocket", "rockets"},
};

const std::vector<const char*> kColors = {"black", "white", "pink", "green", "yellow", "grey"};

const std::vector<const char*> kTasks = {
    "finish the report", "clean the room",   "hand in the homework", "water the flowers",
    "buy the tickets",   "wash the car",     "call the doctor",      "pay the bill",
    "return the books",  "feed the fish",    "fix the bike",         "answer the letter"};
const std::vector<const char*> kNowCues = {"today", "now", "this afternoon"};
const std::vector<const char*> kLaterCues = {"tomorrow", "next week", "this weekend", "later"};

const char* const kModalSampleStem =
    "\xE2\x80\x94 That T-shirt with Yao Ming's picture on it ___ belong to John. He likes him a lot. "
    "\xE2\x80\x94 No, it ___ be his. He hates black color.";

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

struct Draft {
  Family family;
  std::string stem;
  std::vector<std::string> options;
  int key = 0;
};

/// Places the key among m - 1 distractors at a uniformly random position.
Draft finish(Family family, std::string stem, std::string key, std::vector<std::string> pool, int m, Rng& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) < m - 1) {
    throw StructuralError("template '" + std::string(to_string(family)) + "' has only " +
                          std::to_string(pool.size() + 1) + " distinct options, " + std::to_string(m) +
                          " requested");
  }
  Draft d{family, std::move(stem), {}, 0};
  d.options.assign(pool.begin(), pool.begin() + (m - 1));
  std::uniform_int_distribution<int> at(0, m - 1);
  d.key = at(rng);
  d.options.insert(d.options.begin() + d.key, std::move(key));
  return d;
}

/// Keeps `first` (when present in `pool`) as the first candidate distractor.
std::vector<std::string> prefer(std::vector<std::string> pool, const std::string& first, int m, Rng& rng) {
  auto it = std::find(pool.begin(), pool.end(), first);
  if (it == pool.end() || m < 3) return pool;
  pool.erase(it);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(m - 2)));
  pool.push_back(first);
  return pool;
}

std::string aspect_form(Aspect a, const Verb3& v) {
  switch (a) {
    case Aspect::kFuture: return std::string("will ") + v.base;
    case Aspect::kProgressive: return std::string("is ") + v.ing;
    case Aspect::kPerfect: return std::string("has ") + v.participle;
    case Aspect::kPastPerfect: return std::string("had ") + v.participle;
    case Aspect::kInvalid: return std::string("will ") + v.ing;
  }
  return {};
}

constexpr std::array<Aspect, 5> kAllAspects = {Aspect::kFuture, Aspect::kProgressive, Aspect::kPerfect,
                                               Aspect::kPastPerfect, Aspect::kInvalid};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Draft gen_agreement(int m, Rng& rng) {
  const Subject& s = pick(kSubjects, rng);
  const Verb5& v = pick(kAgreementVerbs, rng);
  const char* comp = pick(v.complements, rng);
  const char* cue = pick(kPresentCues, rng);
  std::string stem = capitalize(s.text) + " ___ " + comp + " " + cue + ".";
  const Form5 key_form = s.third_singular ? kThird : kBase;
  const Form5 other = s.third_singular ? kBase : kThird;
  std::vector<std::string> rest;
  for (Form5 f : {kPast, kIng, kParticiple}) rest.emplace_back(v.forms[f]);
  std::shuffle(rest.begin(), rest.end(), rng);
  std::vector<std::string> pool{v.forms[other]};
  for (int i = 0; i < m - 2 && i < static_cast<int>(rest.size()); ++i) pool.push_back(rest[static_cast<std::size_t>(i)]);
  return finish(Family::kAgreement, std::move(stem), v.forms[key_form], std::move(pool), m, rng);
}

Draft gen_aspect(int m, Rng& rng) {
  const Cue& cue = pick(kCues, rng);
  const char* subj = pick(kSingularSubjects, rng);
  const Verb3& v = pick(kAspectVerbs, rng);
  const char* comp = pick(v.complements, rng);
  std::string stem = capitalize(cue.text) + ", " + subj + " ___ " + comp + ".";
  std::vector<std::string> pool;
  for (Aspect a : kAllAspects) {
    if (a != cue.aspect) pool.push_back(aspect_form(a, v));
  }
  return finish(Family::kAspect, std::move(stem), aspect_form(cue.aspect, v), std::move(pool), m, rng);
}

Draft gen_aspect_pair(int m, Rng& rng) {
  const Cue& a = pick(kCues, rng);
  std::vector<Cue> second;
  for (const auto& c : kCues) {
    if (c.clause_b && c.aspect != a.aspect) second.push_back(c);
  }
  const Cue& b = pick(second, rng);
  const char* sa = pick(kSingularSubjects, rng);
  const char* sb = pick(kSingularSubjects, rng);
  const Verb3& va = pick(kAspectVerbs, rng);
  const Verb3& vb = pick(kAspectVerbs, rng);
  std::string stem = capitalize(a.text) + ", " + sa + " ___ " + pick(va.complements, rng) + ", but " + b.text + " " +
                     sb + " ___ " + pick(vb.complements, rng) + ".";
  auto option = [&](Aspect x, Aspect y) { return aspect_form(x, va) + "; " + aspect_form(y, vb); };
  std::vector<std::string> pool;
  for (Aspect x : kAllAspects) {
    for (Aspect y : kAllAspects) {
      if (x == a.aspect && y == b.aspect) continue;
      pool.push_back(option(x, y));
    }
  }
  pool = prefer(std::move(pool), option(b.aspect, a.aspect), m, rng);
  return finish(Family::kAspectPair, std::move(stem), option(a.aspect, b.aspect), std::move(pool), m, rng);
}

Draft gen_pronoun_pair(int m, Rng& rng) {
  const PronounTemplate& t = pick(kPronounTemplates, rng);
  const Name& name = pick(kNames, rng);
  std::string stem = replace_all(replace_all(t.pattern, "{N}", name.text), "{X}", pick(t.fillers, rng));
  auto word = [&](const Pronoun& p, Slot s) { return std::string(s == Slot::kPossessive ? p.possessive : p.subject); };
  auto option = [&](const Pronoun& x, const Pronoun& y) { return word(x, t.slots[0]) + "; " + word(y, t.slots[1]); };
  const Pronoun& right = pronoun_for(name.gender);
  const Pronoun& swapped = pronoun_for(name.gender == Gender::kMale ? Gender::kFemale : Gender::kMale);
  std::vector<std::string> pool;
  for (const auto& x : kPronouns) {
    for (const auto& y : kPronouns) {
      if (x.gender == name.gender && y.gender == name.gender) continue;
      pool.push_back(option(x, y));
    }
  }
  pool = prefer(std::move(pool), option(swapped, swapped), m, rng);
  return finish(Family::kPronounPair, std::move(stem), option(right, right), std::move(pool), m, rng);
}

Draft gen_modal_pair(int m, Rng& rng) {
  std::uniform_int_distribution<int> coin(0, 2);
  const bool obligation = coin(rng) == 0;
  std::string stem;
  std::string key;
  std::string excluded;
  const std::string dash = "\xE2\x80\x94";
  if (obligation) {
    std::uniform_int_distribution<int> who(0, 1);
    stem = dash + " ___ " + (who(rng) == 0 ? "I " : "we ") + pick(kTasks, rng) + " " + pick(kNowCues, rng) + "? " +
           dash + " No, you ___. You can do it " + pick(kLaterCues, rng) + ".";
    key = "must; needn't";
    excluded = "may; needn't";
  } else {
    const Name& name = pick(kNames, rng);
    const Detail& d = pick(kDeductionDetails, rng);
    const Pronoun& p = pronoun_for(name.gender);
    stem = dash + " That " + pick(kDeductionThings, rng) + " with " + d.on_it + " on it ___ belong to " + name.text +
           ". " + capitalize(p.subject) + " likes " + d.liked + " a lot. " + dash + " No, it ___ be " +
           p.possessive + ". " + capitalize(p.subject) + " hates " + pick(kColors, rng) + " color.";
    key = "must; can't";
    excluded = "may; can't";
  }
  std::vector<std::string> pool;
  for (const char* a : kModalFirst) {
    for (const char* b : kModalSecond) {
      std::string o = std::string(a) + "; " + b;
      if (o != key && o != excluded) pool.push_back(o);
    }
  }
  return finish(Family::kModalPair, std::move(stem), std::move(key), std::move(pool), m, rng);
}

Draft generate_one(Family f, int m, Rng& rng) {
  switch (f) {
    case Family::kAgreement: return gen_agreement(m, rng);
    case Family::kAspect: return gen_aspect(m, rng);
    case Family::kPronounPair: return gen_pronoun_pair(m, rng);
    case Family::kModalPair: return gen_modal_pair(m, rng);
    case Family::kAspectPair: return gen_aspect_pair(m, rng);
  }
  throw Error("unknown family");
}

/// Family of the i-th question of a category (C3 alternates pronoun and modal items).
Family family_for(Category c, int i) {
  switch (c) {
    case Category::C1: return Family::kAgreement;
    case Category::C2: return Family::kAspect;
    case Category::C3: return (i % 2 == 0) ? Family::kPronounPair : Family::kModalPair;
    case Category::C4: return Family::kAspectPair;
  }
  throw Error("unknown category");
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

int draw_m(const GenConfig& cfg, Rng& rng) {
  std::uniform_int_distribution<int> d(cfg.options_min, cfg.options_max);
  return d(rng);
}

std::string key_sentence(const ScQuestion& q) { return fill(q.stem(), q.segments(*q.answer_index()), q.format()); }

constexpr int kMaxAttemptsPerQuestion = 200;

// ---------------------------------------------------------------------------
// Checker support: lexicon lookups that read the stem text only.
// ---------------------------------------------------------------------------

std::string lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::vector<std::string> words_of(std::string_view text) { return tokenize(text); }

/// Text pieces of the stem between blank markers (size blanks + 1).
std::vector<std::string> stem_regions(const ScQuestion& q) {
  std::vector<std::string> regions;
  const std::string marker = "___";
  std::string s = q.stem();
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(marker, start);
    if (pos == std::string::npos) {
      regions.push_back(s.substr(start));
      break;
    }
    regions.push_back(s.substr(start, pos - start));
    start = pos;
    while (start < s.size() && s[start] == '_') ++start;
  }
  return regions;
}

/// Aspect demanded by the cue found in `region`; kInvalid if none or several.
Aspect cue_aspect(const std::string& region) {
  const auto words = words_of(region);
  std::set<Aspect> found;
  for (const auto& cue : kCues) {
    const auto cw = words_of(cue.text);
    for (std::size_t i = 0; i + cw.size() <= words.size(); ++i) {
      if (std::equal(cw.begin(), cw.end(), words.begin() + static_cast<long>(i))) found.insert(cue.aspect);
    }
  }
  return found.size() == 1 ? *found.begin() : Aspect::kInvalid;
}

/// Aspect expressed by an "aux verb-form" segment; kInvalid when the pair is ungrammatical.
Aspect segment_aspect(const std::string& segment) {
  const auto w = words_of(segment);
  if (w.size() != 2) return Aspect::kInvalid;
  for (const auto& v : kAspectVerbs) {
    if (w[0] == "will" && w[1] == v.base) return Aspect::kFuture;
    if (w[0] == "is" && w[1] == v.ing) return Aspect::kProgressive;
    if (w[0] == "has" && w[1] == v.participle) return Aspect::kPerfect;
    if (w[0] == "had" && w[1] == v.participle) return Aspect::kPastPerfect;
  }
  return Aspect::kInvalid;
}

std::optional<Gender> pronoun_gender(const std::string& word) {
  for (const auto& p : kPronouns) {
    if (word == p.possessive || word == p.subject || word == p.object) return p.gender;
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

std::string_view to_string(Family f) {
  switch (f) {
    case Family::kAgreement: return "agreement";
    case Family::kAspect: return "aspect";
    case Family::kPronounPair: return "pronoun";
    case Family::kModalPair: return "modal";
    case Family::kAspectPair: return "aspectpair";
  }
  return "?";
}

Category intended_category(Family f) {
  switch (f) {
    case Family::kAgreement: return Category::C1;
    case Family::kAspect: return Category::C2;
    case Family::kPronounPair:
    case Family::kModalPair: return Category::C3;
    case Family::kAspectPair: return Category::C4;
  }
  throw Error("unknown family");
}

Family family_of(const ScQuestion& q) {
  const auto& id = q.id();
  const auto a = id.find('-');
  const auto b = id.find('-', a == std::string::npos ? 0 : a + 1);
  if (a == std::string::npos || b == std::string::npos) throw ParseError("id '" + id + "' carries no family");
  const std::string name = id.substr(a + 1, b - a - 1);
  for (Family f : {Family::kAgreement, Family::kAspect, Family::kPronounPair, Family::kModalPair, Family::kAspectPair}) {
    if (to_string(f) == name) return f;
  }
  throw ParseError("id '" + id + "': unknown family '" + name + "'");
}

void GenConfig::validate() const {
  for (int c : counts) {
    if (c < 0) throw RangeError("gen config: counts must be >= 0");
  }
  if (counts[0] + counts[1] + counts[2] + counts[3] < 1) throw RangeError("gen config: total count must be >= 1");
  if (options_min < 3 || options_max > 5 || options_min > options_max) {
    throw RangeError("gen config: options per question must lie in [3, 5]");
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw RangeError("gen config: test_fraction outside [0, 1]");
  if (corpus_size < 0) throw RangeError("gen config: corpus_size must be >= 0");
}

GeneratedData generate(const GenConfig& config) {
  config.validate();
  GeneratedData out;
  std::unordered_set<std::string> stems{kModalSampleStem};
  int serial = 0;
  for (Category cat : kAllCategories) {
    const int n = config.counts[static_cast<std::size_t>(category_index(cat))];
    const int n_test = static_cast<int>(std::lround(n * config.test_fraction));
    Rng rng(sub_seed(config.seed, 100 + static_cast<std::uint64_t>(category_index(cat))));
    std::vector<bool> is_test(static_cast<std::size_t>(n), false);
    std::fill(is_test.begin(), is_test.begin() + n_test, true);
    std::shuffle(is_test.begin(), is_test.end(), rng);
    for (int i = 0; i < n; ++i) {
      const Family fam = family_for(cat, i);
      const int m = draw_m(config, rng);
      int attempts = 0;
      Draft d;
      do {
        if (++attempts > kMaxAttemptsPerQuestion) {
          throw StructuralError("template '" + std::string(to_string(fam)) + "' cannot produce " + std::to_string(n) +
                                " distinct questions");
        }
        d = generate_one(fam, m, rng);
      } while (!stems.insert(d.stem).second);
      const bool test = is_test[static_cast<std::size_t>(i)];
      std::ostringstream id;
      id << (test ? "test" : "train") << '-' << to_string(fam) << '-' << std::setw(5) << std::setfill('0') << serial++;
      ScQuestion q(id.str(), d.stem, d.options, d.key, test ? "test" : "train");
      (test ? out.test : out.train).push_back(std::move(q));
    }
  }
  return out;
}

std::vector<std::string> corpus(const GenConfig& config) {
  config.validate();
  const GeneratedData data = generate(config);
  std::unordered_set<std::string> held_out;
  for (const auto& q : data.test) held_out.insert(key_sentence(q));
  held_out.insert(normalize_whitespace(replace_all(replace_all(kModalSampleStem, "it ___ belong", "it must belong"),
                                                   "it ___ be", "it can't be")));
  const int total = config.counts[0] + config.counts[1] + config.counts[2] + config.counts[3];
  std::vector<Category> mix;
  for (Category c : kAllCategories) {
    const int n = config.counts[static_cast<std::size_t>(category_index(c))];
    for (int i = 0; i < n; ++i) mix.push_back(c);
  }
  Rng rng(sub_seed(config.seed, 7));
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(config.corpus_size));
  int attempts = 0;
  while (static_cast<int>(out.size()) < config.corpus_size && total > 0) {
    if (++attempts > config.corpus_size * kMaxAttemptsPerQuestion) {
      throw StructuralError("corpus: cannot find enough sentences outside the test split");
    }
    const Category c = pick(mix, rng);
    const Draft d = generate_one(family_for(c, static_cast<int>(out.size())), 3, rng);
    std::string sentence = fill(d.stem, split_option(d.options[static_cast<std::size_t>(d.key)]));
    if (held_out.count(sentence)) continue;
    out.push_back(std::move(sentence));
  }
  return out;
}

std::vector<bool> rule_check(const ScQuestion& q) {
  const Family fam = family_of(q);
  std::vector<bool> ok(static_cast<std::size_t>(q.num_options()), false);
  const auto regions = stem_regions(q);
  for (int i = 0; i < q.num_options(); ++i) {
    if (!q.fillable(i)) continue;
    const auto& seg = q.segments(i).segments;
    bool pass = false;
    switch (fam) {
      case Family::kAgreement: {
        const std::string subject = lower(normalize_whitespace(regions[0]));
        const std::string word = lower(seg[0]);
        for (const auto& s : kSubjects) {
          if (lower(s.text) != subject) continue;
          for (const auto& v : kAgreementVerbs) {
            const int form = static_cast<int>(std::find(v.forms.begin(), v.forms.end(), word) - v.forms.begin());
            if (form < 5) pass = form == (s.third_singular ? kThird : kBase);
          }
        }
        break;
      }
      case Family::kAspect:
      case Family::kAspectPair: {
        pass = true;
        for (std::size_t b = 0; b < seg.size(); ++b) {
          const Aspect want = cue_aspect(regions[b]);
          pass = pass && want != Aspect::kInvalid && segment_aspect(seg[b]) == want;
        }
        break;
      }
      case Family::kPronounPair: {
        std::optional<Gender> g;
        for (const auto& w : words_of(q.stem())) {
          for (const auto& n : kNames) {
            if (lower(n.text) == w) g = n.gender;
          }
        }
        pass = g.has_value();
        for (const auto& s : seg) pass = pass && pronoun_gender(lower(s)) == g;
        break;
      }
      case Family::kModalPair: {
        const auto words = words_of(q.stem());
        const bool question = std::find(words.begin(), words.end(), "?") != words.end();
        pass = seg.size() == 2 && lower(seg[0]) == "must" && lower(seg[1]) == (question ? "needn't" : "can't");
        break;
      }
    }
    ok[static_cast<std::size_t>(i)] = pass;
  }
  return ok;
}

bool distractors_in_paradigm(const ScQuestion& q) {
  const Family fam = family_of(q);
  auto in = [](const std::vector<std::string>& set, const std::string& w) {
    return std::find(set.begin(), set.end(), w) != set.end();
  };
  for (int i = 0; i < q.num_options(); ++i) {
    const auto& seg = q.segments(i).segments;
    for (std::size_t b = 0; b < seg.size(); ++b) {
      const std::string w = lower(seg[b]);
      bool ok = false;
      switch (fam) {
        case Family::kAgreement: {
          const std::string key = lower(q.segments(*q.answer_index()).segments[0]);
          for (const auto& v : kAgreementVerbs) {
            std::vector<std::string> forms(v.forms.begin(), v.forms.end());
            if (in(forms, key)) ok = in(forms, w);
          }
          break;
        }
        case Family::kAspect:
        case Family::kAspectPair: {
          const auto key_words = words_of(q.segments(*q.answer_index()).segments[b]);
          for (const auto& v : kAspectVerbs) {
            std::vector<std::string> forms{v.base, v.ing, v.participle};
            if (key_words.size() == 2 && in(forms, key_words[1])) {
              const auto ww = words_of(w);
              ok = ww.size() == 2 && in({"will", "is", "has", "had"}, ww[0]) && in(forms, ww[1]);
            }
          }
          break;
        }
        case Family::kPronounPair: ok = pronoun_gender(w).has_value(); break;
        case Family::kModalPair:
          ok = b == 0 ? in({"must", "can", "may"}, w) : in({"can't", "needn't", "mustn't"}, w);
          break;
      }
      if (!ok) return false;
    }
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> template_versions() {
  return {{"agreement", "v1"}, {"aspect", "v1"}, {"pronoun", "v1"}, {"modal", "v1"}, {"aspectpair", "v1"}};
}

void write_generated(const std::filesystem::path& dir, const GenConfig& config) {
  std::filesystem::create_directories(dir);
  const GeneratedData data = generate(config);
  save_dataset(dir / "train.jsonl", data.train);
  save_dataset(dir / "test.jsonl", data.test);
  {
    std::ofstream out(dir / "corpus.txt", std::ios::binary);
    if (!out) throw ArtifactError("cannot write corpus in '" + dir.string() + "'");
    for (const auto& s : corpus(config)) out << s << '\n';
  }
  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["counts"] = {{"C1", config.counts[0]}, {"C2", config.counts[1]}, {"C3", config.counts[2]},
                        {"C4", config.counts[3]}};
  manifest["options_min"] = config.options_min;
  manifest["options_max"] = config.options_max;
  manifest["test_fraction"] = config.test_fraction;
  manifest["corpus_size"] = config.corpus_size;
  manifest["train"] = data.train.size();
  manifest["test"] = data.test.size();
  nlohmann::ordered_json versions;
  for (const auto& [name, ver] : template_versions()) versions[name] = ver;
  manifest["templates"] = versions;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw ArtifactError("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

}  // namespace eslsc
