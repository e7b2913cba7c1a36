#pragma once

#include <vector>

#include "crosstag/corpus.hpp"
#include "crosstag/graph.hpp"
#include "crosstag/model.hpp"

namespace crosstag {

struct SalConfig {
  double lambda = 0.1;
  bool selective = true;        // weight each word by the final-hop aspect attention
  bool detach_selector = true;  // block gradients from the domain loss into the attention
};

// Per-word domain scores behind the reversal layer:
// softmax(W_D R_lambda(feature) + b_D).
Node domain_scores(Graph& g, Node feature, Param& w, Param& b, double lambda);

struct DomainTerms {
  const SentenceForward* forward = nullptr;
  DomainLabel domain = DomainLabel::kSource;
};

// Attention-weighted domain cross-entropy over both halves of the batch:
// sum over words of alpha_i * ce_i, summed per sentence, mean over sentences.
// With selective=false every word weighs 1 (plain adversarial alignment).
Node sal_loss(Graph& g, const std::vector<DomainTerms>& batch, const SalConfig& cfg);

}  // namespace crosstag
