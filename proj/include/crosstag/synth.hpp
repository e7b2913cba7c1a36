#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crosstag/corpus.hpp"

namespace crosstag {

// Deterministic two-domain corpus generator: disjoint aspect vocabularies,
// a shared opinion vocabulary with fixed polarities, and shared sentence
// templates, so aspect-opinion collocation is the transferable signal.
struct SynthSpec {
  std::vector<std::string> source_aspects;  // may contain spaces (multiword)
  std::vector<std::string> target_aspects;
  std::vector<std::pair<std::string, Sentiment>> opinions;
  // Template slots: <A>/<A2> aspects, <O> opinion, <D>/<D2> distractor nouns,
  // <N> neutral adjective. Distractor clauses mirror aspect clauses exactly,
  // so only the opinion-ness of the adjacent word separates them.
  std::vector<std::string> templates;
  std::vector<std::string> distractors;
  std::vector<std::string> neutral_adjectives;
  std::size_t train_sentences = 400;  // per domain
  std::size_t test_sentences = 100;
  // Fractions of the shared pools the source domain draws from; the target
  // uses everything. Held-out opinions and held-out neutral adjectives are
  // equally novel tokens to a source-only tagger, so the lexicon is the only
  // signal separating aspect clauses from distractor clauses on the target
  // side. The context pools (neutrals, distractor nouns) are held out more
  // aggressively so that fully-novel distractor clauses are about as common
  // as fully-novel aspect clauses and blind "novel means aspect" guessing
  // does not pay.
  double source_vocab_fraction = 0.6;    // opinions
  double source_context_fraction = 0.6;  // neutral adjectives and distractors
  std::uint64_t seed = 7;

  static SynthSpec defaults();
  void validate() const;
};

struct SynthCorpora {
  std::vector<Sentence> source_train;
  std::vector<Sentence> source_test;
  std::vector<Sentence> target_train;
  std::vector<Sentence> target_test;
  std::vector<std::string> lexicon_words;
};

SynthCorpora generate_synth(const SynthSpec& spec);

struct SynthPaths {
  std::string source_train;
  std::string source_test;
  std::string target_train;
  std::string target_test;
  std::string lexicon;
};

// Writes the four CoNLL splits plus the opinion lexicon into out_dir.
SynthPaths write_synth(const SynthSpec& spec, const std::string& out_dir);

}  // namespace crosstag
