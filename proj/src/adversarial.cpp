#include "crosstag/adversarial.hpp"

namespace crosstag {

Node domain_scores(Graph& g, Node feature, Param& w, Param& b, double lambda) {
  return g.softmax(g.add(g.matvec(g.param(w), g.grad_reverse(feature, lambda)), g.param(b)));
}

Node sal_loss(Graph& g, const std::vector<DomainTerms>& batch, const SalConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("sal_loss: empty batch");
  Node total;
  std::size_t n_sentences = 0;
  for (const DomainTerms& term : batch) {
    const SentenceForward& f = *term.forward;
    if (f.z_domain.empty()) throw std::logic_error("sal_loss: forward pass lacks domain scores");
    std::int64_t label = static_cast<std::int64_t>(term.domain);
    for (std::size_t i = 0; i < f.z_domain.size(); ++i) {
      Node ce = g.nll(f.z_domain[i], label);
      if (cfg.selective) {
        Node weight = g.index(f.alpha_a_final, i);
        if (cfg.detach_selector) weight = g.detach(weight);
        ce = g.mul(weight, ce);
      }
      total = total.valid() ? g.add(total, ce) : ce;
    }
    ++n_sentences;
  }
  return g.scale(total, 1.0 / static_cast<double>(n_sentences));
}

}  // namespace crosstag
