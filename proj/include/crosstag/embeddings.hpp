#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "crosstag/array.hpp"
#include "crosstag/corpus.hpp"
#include "crosstag/rng.hpp"

namespace crosstag {

// Token index map over the union of the training corpora and the validation
// set, in first-occurrence order. Row 0 is the padding symbol, rows 1..V are
// tokens, row V+1 handles inference-time OOV.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<const std::vector<Sentence>*>& corpora);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }       // V
  std::size_t rows() const { return tokens_.size() + 2; }   // pad + tokens + unk
  static constexpr std::size_t kPadIndex = 0;
  std::size_t unk_index() const { return tokens_.size() + 1; }

  // Index of a known token (1..V), or unk_index() for unknown ones.
  std::size_t index_of(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class RowProvenance : std::uint8_t { kPad = 0, kPretrained = 1, kOovRandom = 2 };

struct EmbeddingMatrix {
  Array table;  // [rows, dim], f64; cast to the model dtype at build time
  std::vector<RowProvenance> provenance;
  std::size_t dim = 0;
};

// word2vec text format: optional "V D" header, then "word v1 ... vD" lines.
// Vocabulary tokens missing from the file get U(-0.25, 0.25) rows from the
// seeded stream, as does the UNK row; the pad row stays zero.
EmbeddingMatrix load_word2vec_text(const std::string& path, const Vocabulary& vocab,
                                   std::size_t dim, Rng& oov_rng);

// No pretrained file: every non-pad row is OOV-initialized.
EmbeddingMatrix random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& oov_rng);

}  // namespace crosstag
