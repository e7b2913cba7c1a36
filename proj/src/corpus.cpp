#include "crosstag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "crosstag/rng.hpp"

namespace crosstag {

namespace {

// Seed streams for the two domains' shuffles.
constexpr std::uint64_t kSourceStream = 11;
constexpr std::uint64_t kTargetStream = 13;

}  // namespace

ParseResult parse_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_conll: cannot open " + path);
  ParseResult result;
  std::vector<std::string> tokens;
  std::vector<UnifiedTag> tags;
  bool any_tag = false;
  std::size_t line_no = 0;
  std::size_t sentence_first_line = 1;

  auto flush = [&]() {
    if (tokens.empty()) return;
    if (any_tag && tags.size() != tokens.size())
      throw ParseError(path, sentence_first_line, "sentence mixes tagged and untagged lines");
    Sentence s;
    s.tokens = std::move(tokens);
    if (any_tag) {
      if (!valid_unified_sequence(tags)) {
        auto repaired = unified_from_segments(segments_from_tags(tags), tags.size());
        result.repairs.push_back({sentence_first_line, "repaired ill-formed tag sequence"});
        tags = std::move(repaired);
      }
      s.unified_tags = std::move(tags);
    }
    result.sentences.push_back(std::move(s));
    tokens = {};
    tags = {};
    any_tag = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      sentence_first_line = line_no + 1;
      continue;
    }
    if (tokens.empty()) sentence_first_line = line_no;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      if (any_tag) throw ParseError(path, line_no, "sentence mixes tagged and untagged lines");
      tokens.push_back(line);
    } else {
      std::string token = line.substr(0, tab);
      std::string tag_str = line.substr(tab + 1);
      if (token.empty()) throw ParseError(path, line_no, "empty token");
      auto tag = unified_tag_from_string(tag_str);
      if (!tag) throw ParseError(path, line_no, "unknown tag '" + tag_str + "'");
      if (!tokens.empty() && !any_tag)
        throw ParseError(path, line_no, "sentence mixes tagged and untagged lines");
      tokens.push_back(std::move(token));
      tags.push_back(*tag);
      any_tag = true;
    }
  }
  flush();
  return result;
}

void write_conll(const std::string& path, const std::vector<Sentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_conll: cannot open " + path + " for writing");
  for (const Sentence& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i];
      if (s.unified_tags) out << '\t' << to_string((*s.unified_tags)[i]);
      out << '\n';
    }
    out << '\n';
  }
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_lexicon: cannot open " + path);
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lex.insert(fold_case(line));
  }
  return lex;
}

std::string fold_case(const std::string& token) {
  std::string out = token;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<OpinionLabel> label_opinions(const Sentence& sentence, const Lexicon& lexicon) {
  std::vector<OpinionLabel> out;
  out.reserve(sentence.tokens.size());
  for (const std::string& tok : sentence.tokens)
    out.push_back(lexicon.count(fold_case(tok)) ? OpinionLabel::kOpinion : OpinionLabel::kNotOpinion);
  return out;
}

void label_corpus_opinions(std::vector<Sentence>& corpus, const Lexicon& lexicon) {
  for (Sentence& s : corpus) s.opinion_labels = label_opinions(s, lexicon);
}

std::vector<const Sentence*> Batch::all() const {
  std::vector<const Sentence*> out = source;
  out.insert(out.end(), target.begin(), target.end());
  return out;
}

MixedBatcher::MixedBatcher(const std::vector<Sentence>& source, const std::vector<Sentence>& target,
                           std::size_t batch_size, std::uint64_t seed)
    : source_(source), target_(target), half_(batch_size / 2), seed_(seed) {
  if (source_.empty()) throw std::invalid_argument("MixedBatcher: empty source corpus");
  if (half_ == 0) throw std::invalid_argument("MixedBatcher: batch size too small");
}

std::size_t MixedBatcher::batches_per_epoch() const {
  std::size_t larger = std::max(source_.size(), target_.size());
  return std::max<std::size_t>(1, larger / half_);
}

namespace {

// First `need` indices of consecutive shuffled passes over [0, n); pass p is
// seeded independently so recycling reshuffles.
std::vector<std::size_t> drawn_indices(std::size_t n, std::size_t need, std::uint64_t seed,
                                       std::uint64_t stream, std::size_t epoch) {
  std::vector<std::size_t> out;
  out.reserve(need);
  std::size_t pass = 0;
  while (out.size() < need) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(mix_seed(seed, stream), epoch * 1000003ULL + pass));
    rng.shuffle(order);
    for (std::size_t i = 0; i < n && out.size() < need; ++i) out.push_back(order[i]);
    ++pass;
  }
  return out;
}

}  // namespace

std::vector<Batch> MixedBatcher::epoch(std::size_t epoch_index) const {
  std::size_t n_batches = batches_per_epoch();
  std::size_t need = n_batches * half_;
  auto src_idx = drawn_indices(source_.size(), need, seed_, kSourceStream, epoch_index);
  std::vector<std::size_t> tgt_idx;
  if (!target_.empty()) tgt_idx = drawn_indices(target_.size(), need, seed_, kTargetStream, epoch_index);
  std::vector<Batch> out(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t i = 0; i < half_; ++i) {
      out[b].source.push_back(&source_[src_idx[b * half_ + i]]);
      if (!target_.empty()) out[b].target.push_back(&target_[tgt_idx[b * half_ + i]]);
    }
  }
  return out;
}

}  // namespace crosstag
