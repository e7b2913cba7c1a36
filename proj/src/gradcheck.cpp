#include "crosstag/gradcheck.hpp"

#include <algorithm>

#include "crosstag/adversarial.hpp"
#include "crosstag/training.hpp"

namespace crosstag {

namespace {

Sentence toy_sentence(std::size_t length, DomainLabel domain, std::size_t token_offset,
                      bool labeled) {
  Sentence s;
  for (std::size_t i = 0; i < length; ++i) s.tokens.push_back("w" + std::to_string(token_offset + i));
  if (labeled) {
    // exercise single- and multi-token spans where the length allows
    std::vector<UnifiedTag> tags(length, UnifiedTag::kO);
    tags[0] = UnifiedTag::kSPos;
    if (length >= 3) {
      tags[1] = UnifiedTag::kBNeg;
      tags[2] = UnifiedTag::kENeg;
    }
    s.unified_tags = std::move(tags);
  }
  s.opinion_labels.assign(length, OpinionLabel::kNotOpinion);
  s.opinion_labels.back() = OpinionLabel::kOpinion;
  s.domain = domain;
  return s;
}

}  // namespace

ModelCheckReport grad_check_model(const ModelCheckSpec& spec) {
  ModelConfig cfg;
  cfg.mode = spec.mode;
  cfg.emb_dim = spec.emb_dim;
  cfg.hidden_boundary = spec.hidden;
  cfg.hidden_unified = spec.hidden;
  cfg.relations = spec.relations;
  cfg.hops = spec.hops;
  cfg.dropout = 0.0;  // deterministic loss
  cfg.lambda = spec.lambda;

  Sentence source = toy_sentence(spec.length, DomainLabel::kSource, 0, true);
  Sentence target = toy_sentence(spec.length, DomainLabel::kTarget, spec.length, false);
  std::vector<Sentence> corpus = {source, target};

  Vocabulary vocab = Vocabulary::build({&corpus});
  Rng oov(mix_seed(spec.seed, 2));
  EmbeddingMatrix emb = random_embeddings(vocab, spec.emb_dim, oov);
  Model model(cfg, std::move(vocab), emb, Dtype::F64, spec.seed);

  // Re-draw every trainable parameter at a generic, well-scaled point. The
  // training init keeps deep-path gradients near 1e-9 where central
  // differences drown in roundoff; derivative rules are better verified away
  // from that regime.
  Rng point(mix_seed(spec.seed, 5));
  for (Param* p : model.params().in(Subset::all()))
    for (std::size_t i = 0; i < p->value.numel(); ++i) p->value.set(i, point.uniform(-0.8, 0.8));

  const bool with_dmi = mode_has_dmi(spec.mode);

  auto task_loss = [&](bool with_grad) {
    Graph g(Dtype::F64);
    std::vector<SentenceRun> labeled;
    labeled.push_back({&source, model.forward(g, source, {false, true, with_dmi, false})});
    Node loss = main_loss(g, labeled);
    if (with_dmi) {
      std::vector<SentenceRun> all_runs = labeled;
      all_runs.push_back({&target, model.forward(g, target, {false, false, true, false})});
      loss = g.add(loss, g.scale(opinion_loss(g, all_runs), spec.rho));
    }
    if (with_grad) g.backward(loss);
    return g.scalar_value(loss);
  };

  ModelCheckReport report;
  report.task = finite_difference_check(task_loss, model.params(), 1e-4);
  report.max_rel_err = report.task.max_rel_err;

  if (mode_adversarial(spec.mode)) {
    auto domain_loss = [&](bool with_grad) {
      Graph g(Dtype::F64);
      std::vector<SentenceRun> runs;
      runs.push_back({&source, model.forward(g, source, {false, false, false, true})});
      runs.push_back({&target, model.forward(g, target, {false, false, false, true})});
      std::vector<DomainTerms> terms;
      for (const SentenceRun& r : runs) terms.push_back({&r.forward, r.sentence->domain});
      // uniform weights: every feature-path gradient is the reversed one
      Node loss = sal_loss(g, terms, SalConfig{spec.lambda, false, true});
      if (with_grad) g.backward(loss);
      return g.scalar_value(loss);
    };
    auto scale = [&](const Param& p) {
      return p.partition == Partition::kDiscriminator ? 1.0 : -spec.lambda;
    };
    report.domain = finite_difference_check(domain_loss, model.params(), 1e-4, 0, scale);
    report.max_rel_err = std::max(report.max_rel_err, report.domain.max_rel_err);
  }
  return report;
}

}  // namespace crosstag
