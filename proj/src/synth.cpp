#include "crosstag/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "crosstag/rng.hpp"

namespace crosstag {

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  // 40 aspects per domain, 12 of them multiword; no token is shared across
  // the two aspect vocabularies.
  s.source_aspects = {
      "pizza", "pasta", "sushi", "steak", "salad", "soup", "dessert", "bread",
      "coffee", "wine", "menu", "staff", "waiter", "service", "ambience", "decor",
      "portions", "brunch", "appetizers", "cocktails", "ribs", "noodles", "curry",
      "pancakes", "burgers", "falafel", "risotto", "margaritas",
      "garlic knots", "house sangria", "fish tacos", "lunch specials",
      "seating area", "wait times", "tasting courses", "beverage selection",
      "side dishes", "dining room", "happy hour", "cheese platter"};
  s.target_aspects = {
      "screen", "keyboard", "battery", "trackpad", "processor", "memory",
      "storage", "speakers", "webcam", "charger", "hinge", "fans", "ports",
      "display", "chassis", "drivers", "bios", "firmware", "warranty", "adapter",
      "cursor", "monitor", "backlight", "motherboard", "heatsink", "stylus",
      "dock", "antenna",
      "battery life", "boot sequence", "key travel", "build quality",
      "cooling system", "power brick", "usb hub", "touch panel",
      "graphics card", "operating system", "sound output", "sleep mode"};
  // Alternating polarity so any prefix stays balanced; the source domain
  // samples only a prefix (source_vocab_fraction) while the target uses
  // all of them.
  s.opinions = {
      {"great", Sentiment::kPos},     {"terrible", Sentiment::kNeg},
      {"excellent", Sentiment::kPos}, {"awful", Sentiment::kNeg},
      {"amazing", Sentiment::kPos},   {"disappointing", Sentiment::kNeg},
      {"fantastic", Sentiment::kPos}, {"horrible", Sentiment::kNeg},
      {"wonderful", Sentiment::kPos}, {"mediocre", Sentiment::kNeg},
      {"superb", Sentiment::kPos},    {"lousy", Sentiment::kNeg},
      {"delightful", Sentiment::kPos}, {"flimsy", Sentiment::kNeg},
      {"impressive", Sentiment::kPos}, {"sluggish", Sentiment::kNeg},
      {"outstanding", Sentiment::kPos}, {"dreadful", Sentiment::kNeg},
      {"splendid", Sentiment::kPos},  {"subpar", Sentiment::kNeg}};
  // Aspect and distractor clauses share the same local syntax, and the
  // two-clause templates come in both orders, so neither position nor the
  // conjunction reveals which clause holds the aspect; the adjacent slot
  // word (opinion vs neutral adjective) is the only separating signal.
  s.templates = {
      "the <A> is <O>",
      "the <D> is <N>",
      "the <D> is <N> but the <A> is <O>",
      "the <A> is <O> but the <D> is <N>",
      "the <A> and the <A2> are <O>",
      "the <D> and the <D2> are <N>",
  };
  s.distractors = {"table",   "corner",  "street",    "window",  "door",
                   "evening", "monday",  "weather",   "parking", "question",
                   "story",   "music",   "weekend",   "morning", "afternoon",
                   "neighborhood", "hallway", "ceiling", "sidewalk", "stairwell"};
  s.neutral_adjectives = {"there",    "open",     "closed",  "nearby",   "visible",
                          "usual",    "typical",  "ordinary", "unchanged", "present",
                          "indoors",  "upstairs", "shared",  "standard", "separate",
                          "optional", "listed",   "labeled", "numbered", "scheduled"};
  return s;
}

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::set<std::string> token_set(const std::vector<std::string>& phrases) {
  std::set<std::string> out;
  for (const auto& p : phrases)
    for (const auto& t : split_tokens(p)) out.insert(t);
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (source_aspects.empty() || target_aspects.empty() || opinions.empty() || templates.empty())
    throw std::invalid_argument("synth: vocabularies and templates must be non-empty");
  auto src = token_set(source_aspects);
  auto tgt = token_set(target_aspects);
  for (const auto& t : src)
    if (tgt.count(t))
      throw std::invalid_argument("synth: aspect vocabularies overlap on token '" + t + "'");
  if (source_vocab_fraction <= 0.0 || source_vocab_fraction > 1.0)
    throw std::invalid_argument("synth: source_vocab_fraction must be in (0, 1]");
  if (source_context_fraction <= 0.0 || source_context_fraction > 1.0)
    throw std::invalid_argument("synth: source_context_fraction must be in (0, 1]");
  for (const std::string& tmpl : templates) {
    if ((tmpl.find("<D>") != std::string::npos || tmpl.find("<D2>") != std::string::npos) &&
        distractors.empty())
      throw std::invalid_argument("synth: template uses <D> but the distractor pool is empty");
    if (tmpl.find("<N>") != std::string::npos && neutral_adjectives.empty())
      throw std::invalid_argument("synth: template uses <N> but the neutral adjective pool is empty");
  }
}

namespace {

struct SlotFill {
  std::vector<std::string> tokens;
  std::vector<UnifiedTag> tags;
};

void append_aspect(SlotFill& out, const std::string& phrase, Sentiment sent) {
  auto words = split_tokens(phrase);
  for (std::size_t i = 0; i < words.size(); ++i) {
    out.tokens.push_back(words[i]);
    BoundaryTag b;
    if (words.size() == 1)
      b = BoundaryTag::kS;
    else if (i == 0)
      b = BoundaryTag::kB;
    else if (i + 1 == words.size())
      b = BoundaryTag::kE;
    else
      b = BoundaryTag::kI;
    out.tags.push_back(make_unified(b, sent));
  }
}

struct PoolSizes {
  std::size_t opinions = 0;
  std::size_t neutrals = 0;
  std::size_t distractors = 0;
};

Sentence make_sentence(const SynthSpec& spec, Rng& rng, const std::vector<std::string>& aspects,
                       const PoolSizes& pools, DomainLabel domain) {
  const std::string& tmpl = spec.templates[rng.below(spec.templates.size())];
  const auto& [opinion, polarity] = spec.opinions[rng.below(pools.opinions)];
  std::size_t a1 = rng.below(aspects.size());
  std::size_t a2 = a1;
  while (aspects.size() > 1 && a2 == a1) a2 = rng.below(aspects.size());
  std::size_t d1 = pools.distractors ? rng.below(pools.distractors) : 0;
  std::size_t d2 = pools.distractors > 1 ? (d1 + 1 + rng.below(pools.distractors - 1)) % pools.distractors
                                         : d1;

  SlotFill fill;
  for (const std::string& piece : split_tokens(tmpl)) {
    if (piece == "<A>") {
      append_aspect(fill, aspects[a1], polarity);
    } else if (piece == "<A2>") {
      append_aspect(fill, aspects[a2], polarity);
    } else if (piece == "<O>") {
      fill.tokens.push_back(opinion);
      fill.tags.push_back(UnifiedTag::kO);
    } else if (piece == "<D>" || piece == "<D2>") {
      fill.tokens.push_back(spec.distractors[piece == "<D>" ? d1 : d2]);
      fill.tags.push_back(UnifiedTag::kO);
    } else if (piece == "<N>") {
      fill.tokens.push_back(spec.neutral_adjectives[rng.below(pools.neutrals)]);
      fill.tags.push_back(UnifiedTag::kO);
    } else {
      fill.tokens.push_back(piece);
      fill.tags.push_back(UnifiedTag::kO);
    }
  }
  Sentence s;
  s.tokens = std::move(fill.tokens);
  s.unified_tags = std::move(fill.tags);
  s.domain = domain;
  return s;
}

std::vector<Sentence> make_split(const SynthSpec& spec, std::uint64_t stream, std::size_t count,
                                 const std::vector<std::string>& aspects, const PoolSizes& pools,
                                 DomainLabel domain) {
  Rng rng(mix_seed(spec.seed, stream));
  std::vector<Sentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(make_sentence(spec, rng, aspects, pools, domain));
  return out;
}

std::size_t source_share(double fraction, std::size_t total) {
  if (total == 0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(total)));
}

}  // namespace

SynthCorpora generate_synth(const SynthSpec& spec) {
  spec.validate();
  PoolSizes source_pools{source_share(spec.source_vocab_fraction, spec.opinions.size()),
                         source_share(spec.source_context_fraction, spec.neutral_adjectives.size()),
                         source_share(spec.source_context_fraction, spec.distractors.size())};
  PoolSizes target_pools{spec.opinions.size(), spec.neutral_adjectives.size(), spec.distractors.size()};
  SynthCorpora c;
  c.source_train = make_split(spec, 101, spec.train_sentences, spec.source_aspects, source_pools,
                              DomainLabel::kSource);
  c.source_test = make_split(spec, 102, spec.test_sentences, spec.source_aspects, source_pools,
                             DomainLabel::kSource);
  c.target_train = make_split(spec, 103, spec.train_sentences, spec.target_aspects, target_pools,
                              DomainLabel::kTarget);
  c.target_test = make_split(spec, 104, spec.test_sentences, spec.target_aspects, target_pools,
                             DomainLabel::kTarget);
  for (const auto& [word, polarity] : spec.opinions) c.lexicon_words.push_back(word);
  return c;
}

SynthPaths write_synth(const SynthSpec& spec, const std::string& out_dir) {
  SynthCorpora c = generate_synth(spec);
  std::filesystem::create_directories(out_dir);
  SynthPaths paths;
  auto emit = [&](const std::string& name, const std::vector<Sentence>& corpus) {
    std::string path = (std::filesystem::path(out_dir) / name).string();
    write_conll(path, corpus);
    return path;
  };
  paths.source_train = emit("source_train.conll", c.source_train);
  paths.source_test = emit("source_test.conll", c.source_test);
  paths.target_train = emit("target_train.conll", c.target_train);
  paths.target_test = emit("target_test.conll", c.target_test);
  paths.lexicon = (std::filesystem::path(out_dir) / "opinion_lexicon.txt").string();
  std::ofstream lex(paths.lexicon);
  if (!lex) throw std::runtime_error("synth: cannot write " + paths.lexicon);
  lex << "# opinion lexicon\n";
  for (const std::string& w : c.lexicon_words) lex << w << "\n";
  return paths;
}

}  // namespace crosstag
