#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "crosstag/tags.hpp"

namespace crosstag {

enum class DomainLabel : std::uint8_t { kSource = 0, kTarget = 1 };
enum class OpinionLabel : std::uint8_t { kNotOpinion = 0, kOpinion = 1 };

struct Sentence {
  std::vector<std::string> tokens;
  std::optional<std::vector<UnifiedTag>> unified_tags;  // absent for unlabeled corpora
  std::vector<OpinionLabel> opinion_labels;             // filled by label_opinions
  DomainLabel domain = DomainLabel::kSource;

  std::size_t length() const { return tokens.size(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

struct ParseRepair {
  std::size_t line;  // first line of the repaired sentence
  std::string message;
};

struct ParseResult {
  std::vector<Sentence> sentences;
  std::vector<ParseRepair> repairs;
};

// One "token<TAB>tag" per line, tag column optional (unlabeled corpora),
// blank line between sentences. Unknown tag strings are hard errors;
// structurally ill-formed gold sequences are repaired and recorded.
ParseResult parse_conll(const std::string& path);

void write_conll(const std::string& path, const std::vector<Sentence>& sentences);

using Lexicon = std::set<std::string>;  // lowercased opinion words

// One word per line; '#' lines are comments.
Lexicon load_lexicon(const std::string& path);

std::string fold_case(const std::string& token);
std::vector<OpinionLabel> label_opinions(const Sentence& sentence, const Lexicon& lexicon);
void label_corpus_opinions(std::vector<Sentence>& corpus, const Lexicon& lexicon);

struct TransferPair {
  std::vector<Sentence> source_train;  // labeled
  std::vector<Sentence> target_train;  // unlabeled for transfer training
  std::vector<Sentence> source_test;   // labeled; validation set
  std::vector<Sentence> target_test;   // labeled; evaluation only
};

struct Batch {
  std::vector<const Sentence*> source;
  std::vector<const Sentence*> target;

  std::vector<const Sentence*> all() const;
};

// Deterministic mixed-domain batching: each batch holds batch_size/2
// sentences per domain, drawn from independent shuffled cyclic passes; an
// epoch ends when the larger corpus has been consumed once. With an empty
// target corpus (source-only modes) batches hold batch_size/2 source
// sentences.
class MixedBatcher {
 public:
  MixedBatcher(const std::vector<Sentence>& source, const std::vector<Sentence>& target,
               std::size_t batch_size, std::uint64_t seed);
  // the corpora are borrowed for the batcher's lifetime
  MixedBatcher(const std::vector<Sentence>&, std::vector<Sentence>&&, std::size_t, std::uint64_t) = delete;
  MixedBatcher(std::vector<Sentence>&&, const std::vector<Sentence>&, std::size_t, std::uint64_t) = delete;

  std::vector<Batch> epoch(std::size_t epoch_index) const;
  std::size_t batches_per_epoch() const;

 private:
  const std::vector<Sentence>& source_;
  const std::vector<Sentence>& target_;
  std::size_t half_;
  std::uint64_t seed_;
};

}  // namespace crosstag
