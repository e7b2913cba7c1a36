#include "crosstag/training.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crosstag/model_io.hpp"

namespace crosstag {

using nlohmann::json;

ModelConfig TrainingConfig::model_config() const {
  ModelConfig m;
  m.mode = mode;
  m.emb_dim = emb_dim;
  m.hidden_boundary = hidden_boundary;
  m.hidden_unified = hidden_unified;
  m.relations = relations;
  m.hops = hops;
  m.dropout = dropout;
  m.lambda = lambda;
  m.finetune_embeddings = finetune_embeddings;
  m.dmi_concat_hidden = dmi_concat_hidden;
  m.memory_zero_init = memory_zero_init;
  m.sal_detach_selector = sal_detach_selector;
  return m;
}

void TrainingConfig::validate() const {
  model_config().validate();
  if (lr <= 0) throw std::invalid_argument("lr must be positive");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (rho < 0 || gamma < 0 || clip_norm < 0) throw std::invalid_argument("loss weights must be nonnegative");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (seeds.empty()) throw std::invalid_argument("at least one seed required");
}

std::string TrainingConfig::to_json() const {
  json j;
  j["mode"] = mode_name(mode);
  j["schedule"] = schedule == Schedule::kAlternating ? "ALTERNATING" : "JOINT";
  j["granularity"] = granularity == AlternateGranularity::kBatch ? "batch" : "epoch";
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["rho"] = rho;
  j["lambda"] = lambda;
  j["gamma"] = gamma;
  j["hops"] = hops;
  j["relations"] = relations;
  j["emb_dim"] = emb_dim;
  j["hidden_boundary"] = hidden_boundary;
  j["hidden_unified"] = hidden_unified;
  j["dropout"] = dropout;
  j["clip_norm"] = clip_norm;
  j["epochs"] = epochs;
  j["seeds"] = seeds;
  j["finetune_embeddings"] = finetune_embeddings;
  j["dmi_concat_hidden"] = dmi_concat_hidden;
  j["memory_zero_init"] = memory_zero_init;
  j["sal_detach_selector"] = sal_detach_selector;
  j["shared_adam"] = shared_adam;
  j["dtype"] = dtype_name(dtype);
  j["source_train"] = source_train;
  j["target_train"] = target_train;
  j["source_test"] = source_test;
  j["target_test"] = target_test;
  j["lexicon"] = lexicon;
  j["embeddings"] = embeddings;
  return j.dump();
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(TrainingConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") {
    auto m = mode_from_string(value);
    if (!m) throw std::invalid_argument("unknown mode '" + value + "'");
    cfg.mode = *m;
  } else if (key == "schedule") {
    if (value == "ALTERNATING")
      cfg.schedule = Schedule::kAlternating;
    else if (value == "JOINT")
      cfg.schedule = Schedule::kJoint;
    else
      throw std::invalid_argument("unknown schedule '" + value + "'");
  } else if (key == "granularity") {
    if (value == "batch")
      cfg.granularity = AlternateGranularity::kBatch;
    else if (value == "epoch")
      cfg.granularity = AlternateGranularity::kEpoch;
    else
      throw std::invalid_argument("unknown granularity '" + value + "'");
  } else if (key == "lr") {
    cfg.lr = std::stod(value);
  } else if (key == "batch_size") {
    cfg.batch_size = std::stoul(value);
  } else if (key == "rho") {
    cfg.rho = std::stod(value);
  } else if (key == "lambda") {
    cfg.lambda = std::stod(value);
  } else if (key == "gamma") {
    cfg.gamma = std::stod(value);
  } else if (key == "hops") {
    cfg.hops = std::stoul(value);
  } else if (key == "relations") {
    cfg.relations = std::stoul(value);
  } else if (key == "emb_dim") {
    cfg.emb_dim = std::stoul(value);
  } else if (key == "hidden_boundary") {
    cfg.hidden_boundary = std::stoul(value);
  } else if (key == "hidden_unified") {
    cfg.hidden_unified = std::stoul(value);
  } else if (key == "dropout") {
    cfg.dropout = std::stod(value);
  } else if (key == "clip_norm") {
    cfg.clip_norm = std::stod(value);
  } else if (key == "epochs") {
    cfg.epochs = std::stoul(value);
  } else if (key == "seeds") {
    cfg.seeds.clear();
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.seeds.push_back(std::stoull(item));
    }
    if (cfg.seeds.empty()) throw std::invalid_argument("seeds: empty list");
  } else if (key == "finetune_embeddings") {
    cfg.finetune_embeddings = parse_bool(value);
  } else if (key == "dmi_concat_hidden") {
    cfg.dmi_concat_hidden = parse_bool(value);
  } else if (key == "memory_zero_init") {
    cfg.memory_zero_init = parse_bool(value);
  } else if (key == "sal_detach_selector") {
    cfg.sal_detach_selector = parse_bool(value);
  } else if (key == "shared_adam") {
    cfg.shared_adam = parse_bool(value);
  } else if (key == "dtype") {
    if (value == "f32")
      cfg.dtype = Dtype::F32;
    else if (value == "f64")
      cfg.dtype = Dtype::F64;
    else
      throw std::invalid_argument("dtype must be f32 or f64");
  } else if (key == "source_train") {
    cfg.source_train = value;
  } else if (key == "target_train") {
    cfg.target_train = value;
  } else if (key == "source_test") {
    cfg.source_test = value;
  } else if (key == "target_test") {
    cfg.target_test = value;
  } else if (key == "lexicon") {
    cfg.lexicon = value;
  } else if (key == "embeddings") {
    cfg.embeddings = value;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

TrainingConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  TrainingConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config:" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_config_entry(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error("config:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

void apply_config_overrides(TrainingConfig& cfg, const std::map<std::string, std::string>& overrides) {
  for (const auto& [k, v] : overrides) apply_config_entry(cfg, k, v);
}

Node main_loss(Graph& g, const std::vector<SentenceRun>& labeled) {
  if (labeled.empty()) throw std::invalid_argument("main_loss: no labeled sentences");
  Node total;
  for (const SentenceRun& run : labeled) {
    const Sentence& s = *run.sentence;
    if (!s.unified_tags) throw std::invalid_argument("main_loss: unlabeled sentence in the labeled half");
    auto boundary = unified_to_boundary(*s.unified_tags);
    for (std::size_t i = 0; i < s.length(); ++i) {
      Node term = g.add(g.nll(run.forward.z_boundary[i], static_cast<std::int64_t>(boundary[i])),
                        g.nll(run.forward.z_unified[i], static_cast<std::int64_t>((*s.unified_tags)[i])));
      total = total.valid() ? g.add(total, term) : term;
    }
  }
  return g.scale(total, 1.0 / static_cast<double>(labeled.size()));
}

Node opinion_loss(Graph& g, const std::vector<SentenceRun>& all_runs) {
  if (all_runs.empty()) throw std::invalid_argument("opinion_loss: empty batch");
  Node total;
  for (const SentenceRun& run : all_runs) {
    const Sentence& s = *run.sentence;
    if (s.opinion_labels.size() != s.length())
      throw std::invalid_argument("opinion_loss: sentence lacks opinion labels");
    for (std::size_t i = 0; i < s.length(); ++i) {
      Node term = g.nll(run.forward.z_opinion[i], static_cast<std::int64_t>(s.opinion_labels[i]));
      total = total.valid() ? g.add(total, term) : term;
    }
  }
  return g.scale(total, 1.0 / static_cast<double>(all_runs.size()));
}

Trainer::Trainer(Model& model, const TrainingConfig& cfg, std::uint64_t seed)
    : model_(model),
      cfg_(cfg),
      dropout_rng_(mix_seed(seed, 4)),
      adam1_(model.params(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}) {
  if (!cfg.shared_adam && mode_adversarial(cfg.mode)) {
    adam2_owned_ = std::make_unique<Adam>(model.params(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    adam2_ = adam2_owned_.get();
  } else {
    adam2_ = &adam1_;
  }
}

double Trainer::run_backward(Graph& g, Node loss, const char* stage) {
  double value = g.scalar_value(loss);
  if (!std::isfinite(value)) {
    std::string diag = "non-finite loss in " + std::string(stage);
    if (auto bad = g.first_nonfinite())
      diag += " (first non-finite node: id " + std::to_string(bad->first) + ", op " +
              op_name(bad->second) + ")";
    throw std::runtime_error(diag);
  }
  g.backward(loss);
  return value;
}

StepMetrics Trainer::stage_one(const Batch& batch) {
  StepMetrics m;
  Graph g(model_.dtype(), true, &dropout_rng_);
  const bool with_dmi = mode_has_dmi(cfg_.mode);

  std::vector<SentenceRun> labeled;
  for (const Sentence* s : batch.source)
    labeled.push_back({s, model_.forward(g, *s, {true, true, with_dmi, false})});
  std::vector<SentenceRun> opinion_runs;
  if (with_dmi) {
    opinion_runs = labeled;
    for (const Sentence* s : batch.target)
      opinion_runs.push_back({s, model_.forward(g, *s, {true, false, true, false})});
  }

  Node loss = main_loss(g, labeled);
  m.loss_main = g.scalar_value(loss);
  if (with_dmi) {
    Node aux = opinion_loss(g, opinion_runs);
    m.loss_opinion = g.scalar_value(aux);
    loss = g.add(loss, g.scale(aux, cfg_.rho));
  }
  run_backward(g, loss, "stage 1");
  m.clip_factor_stage1 = clip_global_norm(model_.params(), cfg_.clip_norm);
  m.grad_norm_stage1 = global_grad_norm(model_.params());
  adam1_.step(Subset{true, true, false});
  return m;
}

StepMetrics Trainer::stage_two(const Batch& batch) {
  StepMetrics m;
  Graph g(model_.dtype(), true, &dropout_rng_);
  std::vector<SentenceRun> runs;
  for (const Sentence* s : batch.source)
    runs.push_back({s, model_.forward(g, *s, {true, false, false, true})});
  for (const Sentence* s : batch.target)
    runs.push_back({s, model_.forward(g, *s, {true, false, false, true})});

  std::vector<DomainTerms> terms;
  terms.reserve(runs.size());
  for (const SentenceRun& run : runs)
    terms.push_back({&run.forward, run.sentence->domain});
  SalConfig sal{cfg_.lambda, mode_selective(cfg_.mode), cfg_.sal_detach_selector};
  Node loss = sal_loss(g, terms, sal);
  m.loss_domain = run_backward(g, loss, "stage 2");
  m.clip_factor_stage2 = clip_global_norm(model_.params(), cfg_.clip_norm);
  m.grad_norm_stage2 = global_grad_norm(model_.params());
  adam2_->step(Subset{true, false, true});
  return m;
}

StepMetrics Trainer::alternating_step(const Batch& batch) {
  StepMetrics m = stage_one(batch);
  StepMetrics s2 = stage_two(batch);
  m.loss_domain = s2.loss_domain;
  m.clip_factor_stage2 = s2.clip_factor_stage2;
  m.grad_norm_stage2 = s2.grad_norm_stage2;
  return m;
}

StepMetrics Trainer::joint_step(const Batch& batch) {
  StepMetrics m;
  Graph g(model_.dtype(), true, &dropout_rng_);
  const bool with_dmi = mode_has_dmi(cfg_.mode);

  std::vector<SentenceRun> labeled;
  for (const Sentence* s : batch.source)
    labeled.push_back({s, model_.forward(g, *s, {true, true, with_dmi, true})});
  std::vector<SentenceRun> all_runs = labeled;
  for (const Sentence* s : batch.target)
    all_runs.push_back({s, model_.forward(g, *s, {true, false, with_dmi, true})});

  Node loss = main_loss(g, labeled);
  m.loss_main = g.scalar_value(loss);
  if (with_dmi) {
    Node aux = opinion_loss(g, all_runs);
    m.loss_opinion = g.scalar_value(aux);
    loss = g.add(loss, g.scale(aux, cfg_.rho));
  }
  std::vector<DomainTerms> terms;
  for (const SentenceRun& run : all_runs) terms.push_back({&run.forward, run.sentence->domain});
  SalConfig sal{cfg_.lambda, mode_selective(cfg_.mode), cfg_.sal_detach_selector};
  Node domain = sal_loss(g, terms, sal);
  m.loss_domain = g.scalar_value(domain);
  loss = g.add(loss, g.scale(domain, cfg_.gamma));

  run_backward(g, loss, "joint step");
  m.clip_factor_stage1 = clip_global_norm(model_.params(), cfg_.clip_norm);
  adam1_.step(Subset::all());
  return m;
}

StepMetrics Trainer::step(const Batch& batch) {
  if (!mode_adversarial(cfg_.mode)) return stage_one(batch);
  if (cfg_.schedule == Schedule::kJoint) return joint_step(batch);
  return alternating_step(batch);
}

std::string EpochLog::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["loss_main"] = loss_main;
  j["loss_opinion"] = loss_opinion;
  j["loss_domain"] = loss_domain;
  j["val_ad_f1"] = val_ad_f1;
  j["val_ads_f1"] = val_ads_f1;
  j["val_token_accuracy"] = val_token_accuracy;
  return j.dump();
}

ArrangedData arrange_for_mode(const TransferPair& pair, Mode mode) {
  ArrangedData d;
  if (mode == Mode::kBaseTo) {
    for (const Sentence& s : pair.target_train) {
      if (!s.unified_tags)
        throw std::invalid_argument("BASE_TO needs a labeled target training corpus");
      d.labeled_train.push_back(s);
      d.labeled_train.back().domain = DomainLabel::kSource;
    }
    d.validation = pair.target_test;
    return d;
  }
  d.labeled_train = pair.source_train;
  for (Sentence& s : d.labeled_train) {
    if (!s.unified_tags) throw std::invalid_argument("source training corpus must be labeled");
    s.domain = DomainLabel::kSource;
  }
  if (mode_has_dmi(mode)) {
    d.unlabeled_train = pair.target_train;
    for (Sentence& s : d.unlabeled_train) {
      s.unified_tags.reset();  // never expose target gold tags to training
      s.domain = DomainLabel::kTarget;
    }
  }
  d.validation = pair.source_test;
  return d;
}

TrainResult train(const TransferPair& pair, const Lexicon& lexicon, const TrainingConfig& cfg,
                  std::uint64_t seed, std::ostream* log_stream) {
  cfg.validate();
  ArrangedData data = arrange_for_mode(pair, cfg.mode);
  if (data.labeled_train.empty()) throw std::invalid_argument("train: empty training corpus");
  label_corpus_opinions(data.labeled_train, lexicon);
  label_corpus_opinions(data.unlabeled_train, lexicon);

  // Union of both training corpora plus the validation set, independent of
  // the mode: unlabeled target text is available in the transfer setting even
  // to models that do not train on it.
  Vocabulary vocab =
      Vocabulary::build({&pair.source_train, &pair.target_train, &data.validation});
  Rng oov_rng(mix_seed(seed, 2));
  EmbeddingMatrix emb = cfg.embeddings.empty()
                            ? random_embeddings(vocab, cfg.emb_dim, oov_rng)
                            : load_word2vec_text(cfg.embeddings, vocab, cfg.emb_dim, oov_rng);
  Model model(cfg.model_config(), std::move(vocab), emb, cfg.dtype, seed);
  Trainer trainer(model, cfg, seed);
  MixedBatcher batcher(data.labeled_train, data.unlabeled_train, cfg.batch_size, mix_seed(seed, 3));

  if (log_stream) *log_stream << "{\"config\":" << cfg.to_json() << ",\"seed\":" << seed << "}\n";

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto batches = batcher.epoch(epoch - 1);
    EpochLog log;
    log.epoch = epoch;
    const bool epoch_granularity = mode_adversarial(cfg.mode) &&
                                   cfg.schedule == Schedule::kAlternating &&
                                   cfg.granularity == AlternateGranularity::kEpoch;
    if (epoch_granularity) {
      for (const Batch& b : batches) {
        StepMetrics m = trainer.stage_one(b);
        log.loss_main += m.loss_main;
        log.loss_opinion += m.loss_opinion;
      }
      for (const Batch& b : batches) log.loss_domain += trainer.stage_two(b).loss_domain;
    } else {
      for (const Batch& b : batches) {
        StepMetrics m = trainer.step(b);
        log.loss_main += m.loss_main;
        log.loss_opinion += m.loss_opinion;
        log.loss_domain += m.loss_domain;
      }
    }
    double nb = static_cast<double>(batches.size());
    log.loss_main /= nb;
    log.loss_opinion /= nb;
    log.loss_domain /= nb;

    CorpusEval val = evaluate_corpus(model, data.validation);
    log.val_ad_f1 = val.ad.micro_f1;
    log.val_ads_f1 = val.ads.micro_f1;
    log.val_token_accuracy = val.token_accuracy;
    if (log_stream) *log_stream << log.to_json() << "\n";
    result.epochs.push_back(log);

    // ties keep the later epoch: with a saturated validation set the extra
    // training (and, in adversarial modes, the continuing alignment on
    // unlabeled target text) is worth retaining
    if (val.ads.micro_f1 >= result.best_val_ads) {
      result.best_val_ads = val.ads.micro_f1;
      result.best_epoch = epoch;
      result.best_checkpoint = snapshot_model(model);
    }
  }
  return result;
}

std::string SuiteResult::to_json() const {
  json j;
  json arr = json::array();
  for (const RunOutcome& r : runs) {
    json e;
    e["seed"] = r.seed;
    e["ad_f1"] = r.ad.micro_f1;
    e["ads_f1"] = r.ads.micro_f1;
    arr.push_back(e);
  }
  j["runs"] = arr;
  j["ad_mean"] = ad_mean;
  j["ad_std"] = ad_std;
  j["ads_mean"] = ads_mean;
  j["ads_std"] = ads_std;
  return j.dump();
}

SuiteResult run_suite(const TransferPair& pair, const Lexicon& lexicon, const TrainingConfig& cfg,
                      std::ostream* log_stream) {
  SuiteResult suite;
  for (std::uint64_t seed : cfg.seeds) {
    TrainResult tr = train(pair, lexicon, cfg, seed, log_stream);
    Model best = model_from_checkpoint(deserialize_checkpoint(tr.best_checkpoint));
    CorpusEval eval = evaluate_corpus(best, pair.target_test);
    suite.runs.push_back({seed, eval.ad, eval.ads, std::move(tr.best_checkpoint)});
    if (log_stream)
      *log_stream << "{\"seed\":" << seed << ",\"target_ad\":" << eval.ad.to_json()
                  << ",\"target_ads\":" << eval.ads.to_json() << "}\n";
  }
  auto aggregate = [&](auto pick, double& mean, double& stddev) {
    double sum = 0;
    for (const RunOutcome& r : suite.runs) sum += pick(r);
    mean = sum / static_cast<double>(suite.runs.size());
    double var = 0;
    for (const RunOutcome& r : suite.runs) {
      double d = pick(r) - mean;
      var += d * d;
    }
    stddev = std::sqrt(var / static_cast<double>(suite.runs.size()));
  };
  aggregate([](const RunOutcome& r) { return r.ad.micro_f1; }, suite.ad_mean, suite.ad_std);
  aggregate([](const RunOutcome& r) { return r.ads.micro_f1; }, suite.ads_mean, suite.ads_std);
  if (log_stream) *log_stream << suite.to_json() << "\n";
  return suite;
}

TransferPair load_transfer_pair(const TrainingConfig& cfg) {
  auto load = [](const std::string& path, DomainLabel domain) {
    if (path.empty()) throw std::invalid_argument("missing corpus path in config");
    auto parsed = parse_conll(path);
    for (Sentence& s : parsed.sentences) s.domain = domain;
    return std::move(parsed.sentences);
  };
  TransferPair pair;
  pair.source_train = load(cfg.source_train, DomainLabel::kSource);
  pair.target_train = load(cfg.target_train, DomainLabel::kTarget);
  pair.source_test = load(cfg.source_test, DomainLabel::kSource);
  pair.target_test = load(cfg.target_test, DomainLabel::kTarget);
  return pair;
}

}  // namespace crosstag
