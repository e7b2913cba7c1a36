#include "crosstag/embeddings.hpp"

#include <fstream>
#include <sstream>

namespace crosstag {

Vocabulary Vocabulary::build(const std::vector<const std::vector<Sentence>*>& corpora) {
  Vocabulary v;
  for (const auto* corpus : corpora)
    for (const Sentence& s : *corpus)
      for (const std::string& tok : s.tokens)
        if (!v.index_.count(tok)) {
          v.index_.emplace(tok, v.tokens_.size() + 1);
          v.tokens_.push_back(tok);
        }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.index_.emplace(v.tokens_[i], i + 1);
  return v;
}

std::size_t Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_index() : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return index_.count(token) != 0; }

namespace {

EmbeddingMatrix make_empty(const Vocabulary& vocab, std::size_t dim) {
  EmbeddingMatrix m;
  m.dim = dim;
  m.table = Array(Dtype::F64, Shape{vocab.rows(), dim});
  m.provenance.assign(vocab.rows(), RowProvenance::kOovRandom);
  m.provenance[Vocabulary::kPadIndex] = RowProvenance::kPad;
  return m;
}

// Rows are drawn in index order so the result is independent of which rows
// were found in the pretrained file.
void fill_oov_rows(EmbeddingMatrix& m, Rng& rng, const std::vector<bool>& pretrained) {
  for (std::size_t r = 1; r < m.provenance.size(); ++r) {
    if (r - 1 < pretrained.size() && pretrained[r - 1]) continue;
    for (std::size_t c = 0; c < m.dim; ++c) m.table.set(r * m.dim + c, rng.uniform(-0.25, 0.25));
  }
}

}  // namespace

EmbeddingMatrix load_word2vec_text(const std::string& path, const Vocabulary& vocab,
                                   std::size_t dim, Rng& oov_rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_word2vec_text: cannot open " + path);
  EmbeddingMatrix m = make_empty(vocab, dim);
  std::vector<bool> pretrained(vocab.size(), false);

  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (first) {
      first = false;
      // header "V D": two integer fields only
      std::string second;
      if (ls >> second) {
        std::istringstream probe(line);
        long long a, b;
        char extra;
        if (probe >> a >> b && !(probe >> extra)) {
          if (static_cast<std::size_t>(b) != dim)
            throw std::runtime_error("load_word2vec_text: file dimension " + std::to_string(b) +
                                     " does not match configured " + std::to_string(dim));
          continue;
        }
      }
      ls = std::istringstream(line);
      ls >> word;
    }
    std::vector<double> vals;
    vals.reserve(dim);
    double x;
    while (ls >> x) vals.push_back(x);
    if (vals.size() != dim)
      throw std::runtime_error("load_word2vec_text: line " + std::to_string(line_no) + " has " +
                               std::to_string(vals.size()) + " values, expected " + std::to_string(dim));
    if (!vocab.contains(word)) continue;
    std::size_t row = vocab.index_of(word);
    for (std::size_t c = 0; c < dim; ++c) m.table.set(row * dim + c, vals[c]);
    m.provenance[row] = RowProvenance::kPretrained;
    pretrained[row - 1] = true;
  }
  fill_oov_rows(m, oov_rng, pretrained);
  return m;
}

EmbeddingMatrix random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& oov_rng) {
  EmbeddingMatrix m = make_empty(vocab, dim);
  fill_oov_rows(m, oov_rng, {});
  return m;
}

}  // namespace crosstag
