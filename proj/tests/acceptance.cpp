// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier than the unit tests; the transfer experiment
// dominates the runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "crosstag/dmi.hpp"
#include "crosstag/gradcheck.hpp"
#include "crosstag/model_io.hpp"
#include "crosstag/synth.hpp"
#include "crosstag/training.hpp"

using namespace crosstag;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criteria

std::string gradient_fidelity() {
  auto t0 = std::chrono::steady_clock::now();
  ModelCheckSpec spec;
  spec.mode = Mode::kAdSal;
  spec.length = 3;
  spec.emb_dim = 4;
  spec.hidden = 4;
  spec.relations = 2;
  spec.hops = 2;
  ModelCheckReport report = grad_check_model(spec);
  double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "max_rel_err=" << report.max_rel_err << " (task " << report.task.max_rel_err << ", domain "
     << report.domain.max_rel_err << "), " << elapsed << "s";
  require(report.max_rel_err < 1e-4, "max relative error " + std::to_string(report.max_rel_err));
  require(elapsed < 60.0, "exceeded the 60 s budget");
  return os.str();
}

std::string grl_contract() {
  for (double lambda : {0.0, 0.1, 1.0}) {
    ParamStore store(Dtype::F64);
    Rng rng(5);
    Param& w = store.create_uniform("w", Partition::kDiscriminator, Shape{3, 6}, rng, -0.7, 0.7);
    Param& x = store.create_uniform("x", Partition::kFeature, Shape{6}, rng, -2.0, 2.0);

    Graph g(Dtype::F64);
    Node reversed = g.grad_reverse(g.param(x), lambda);
    require(g.value(reversed).same_values(x.value), "forward is not bit-identical");
    g.backward(g.nll(g.softmax(g.matvec(g.param(w), reversed)), 1));
    std::vector<double> with_grl = x.grad.to_vector();
    store.zero_grads();

    Graph g2(Dtype::F64);
    g2.backward(g2.nll(g2.softmax(g2.matvec(g2.param(w), g2.param(x))), 1));
    for (std::size_t i = 0; i < 6; ++i) {
      double expected = -lambda * x.grad.at(i);
      require(std::abs(with_grl[i] - expected) <= 1e-12,
              "feature gradient differs from -lambda * unreversed at lambda=" + std::to_string(lambda));
    }
  }
  return "forward bit-identity and -lambda backward verified for lambda in {0, 0.1, 1}";
}

std::string attention_memory_algebra() {
  std::size_t checked = 0;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng r(mix_seed(1234, trial));
    std::size_t dim = 2 + r.below(4);
    std::size_t K = 1 + r.below(3);
    std::size_t hops = 1 + r.below(3);
    std::size_t length = 1 + r.below(7);

    ParamStore store(Dtype::F64);
    Rng init(mix_seed(99, trial));
    DmiParamRefs refs;
    auto uni = [&](const char* name, Shape shape) {
      return &store.create_uniform(name, Partition::kFeature, std::move(shape), init, -0.9, 0.9);
    };
    refs.w_a = uni("w_a", {dim, 2 * dim});
    refs.b_a = uni("b_a", {dim});
    refs.w_o = uni("w_o", {dim, 2 * dim});
    refs.b_o = uni("b_o", {dim});
    refs.g_a = uni("g_a", {K, dim, dim});
    refs.g_o = uni("g_o", {K, dim, dim});
    refs.g_ao = uni("g_ao", {K, dim, dim});
    refs.att_a = uni("att_a", {1, 2 * K});
    refs.att_o = uni("att_o", {1, 2 * K});
    refs.m_init_a = uni("m1_a", {dim});
    refs.m_init_o = uni("m1_o", {dim});

    Graph g(Dtype::F64);
    std::vector<Node> hidden;
    for (std::size_t i = 0; i < length; ++i) {
      std::vector<double> v(dim);
      for (double& x : v) x = init.uniform(-2, 2);
      hidden.push_back(g.input(Shape{dim}, v));
    }
    DmiRun run = run_dmi(g, hidden, refs, hops, 0.0);

    for (const DmiHop& hop : run.hops)
      for (Node alpha : {hop.alpha_a, hop.alpha_o}) {
        double sum = 0;
        for (double a : g.value(alpha).to_vector()) {
          require(a >= 0.0, "negative attention weight");
          sum += a;
        }
        require(std::abs(sum - 1.0) <= 1e-6, "attention does not sum to 1");
      }

    for (bool aspect : {true, false}) {
      std::vector<double> expected =
          g.value(aspect ? run.m_a_initial : run.m_o_initial).to_vector();
      for (const DmiHop& hop : run.hops) {
        auto alpha = g.value(aspect ? hop.alpha_a : hop.alpha_o).to_vector();
        for (std::size_t i = 0; i < length; ++i)
          for (std::size_t c = 0; c < dim; ++c) expected[c] += alpha[i] * g.value(hidden[i]).at(c);
      }
      auto got = g.value(aspect ? run.hops.back().m_a_next : run.hops.back().m_o_next).to_vector();
      for (std::size_t c = 0; c < dim; ++c)
        require(std::abs(got[c] - expected[c]) <= 1e-9, "memory update does not telescope");
    }
    ++checked;
  }
  return std::to_string(checked) + " random configurations verified";
}

void enumerate_segment_sets(std::size_t length, std::size_t from, std::vector<Segment>& current,
                            const std::function<void(const std::vector<Segment>&)>& visit) {
  visit(current);
  for (std::size_t start = from; start < length; ++start)
    for (std::size_t end = start; end < length; ++end)
      for (Sentiment s : {Sentiment::kPos, Sentiment::kNeg, Sentiment::kNeu}) {
        current.push_back(Segment{start, end, s});
        enumerate_segment_sets(length, end + 1, current, visit);
        current.pop_back();
      }
}

std::string tag_scheme_oracle() {
  std::size_t round_trips = 0;
  for (std::size_t length = 1; length <= 6; ++length) {
    std::vector<Segment> current;
    enumerate_segment_sets(length, 0, current, [&](const std::vector<Segment>& segs) {
      auto tags = unified_from_segments(segs, length);
      require(segments_from_tags(tags) == segs, "unified round trip broke");
      require(unified_to_boundary(tags) == boundary_from_segments(segs, length),
              "boundary projection disagrees with the sentiment-free encoding");
      ++round_trips;
    });
  }

  std::size_t fixed_points = 0;
  std::vector<BoundaryTag> tags(6);
  for (std::size_t code = 0; code < 15625; ++code) {  // 5^6
    std::size_t c = code;
    for (std::size_t i = 0; i < 6; ++i) {
      tags[i] = static_cast<BoundaryTag>(c % 5);
      c /= 5;
    }
    auto segs = segments_from_tags(tags);
    auto reencoded = boundary_from_segments(segs, 6);
    require(segments_from_tags(reencoded) == segs, "decode-encode-decode is not a fixed point");
    ++fixed_points;
  }
  return std::to_string(round_trips) + " segment sets round-tripped, " +
         std::to_string(fixed_points) + " boundary sequences are fixed points";
}

std::string micro_f1_oracle() {
  // the worked example, exactly
  std::vector<Segment> gold = {Segment{0, 2, Sentiment::kPos}};
  std::vector<Segment> pred = {Segment{0, 2, Sentiment::kPos}, Segment{4, 4, Sentiment::kNeg}};
  EvalReport r = make_report(EvalTask::kAds, exact_match_counts(gold, pred, EvalTask::kAds));
  require(r.precision == 0.5 && r.recall == 1.0, "worked example precision/recall mismatch");
  require(std::abs(r.micro_f1 - 2.0 / 3.0) < 1e-15, "worked example F1 mismatch");

  Rng rng(321);
  auto random_segments = [&](std::size_t length) {
    std::vector<Segment> out;
    std::size_t pos = 0;
    while (pos < length) {
      if (rng.bernoulli(0.45)) {
        std::size_t end = std::min(length - 1, pos + rng.below(3));
        out.push_back(Segment{pos, end, static_cast<Sentiment>(rng.below(3))});
        pos = end + 2;
      } else {
        ++pos;
      }
    }
    return out;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t length = 1 + rng.below(8);
    auto g = random_segments(length);
    auto p = random_segments(length);
    for (EvalTask task : {EvalTask::kAd, EvalTask::kAds}) {
      auto mine = exact_match_counts(g, p, task);
      std::set<std::tuple<std::size_t, std::size_t, int>> keys;
      for (const Segment& s : g)
        keys.emplace(s.start, s.end,
                     task == EvalTask::kAds && s.sentiment ? static_cast<int>(*s.sentiment) : -1);
      std::size_t tp = 0;
      for (const Segment& s : p)
        tp += keys.count({s.start, s.end,
                          task == EvalTask::kAds && s.sentiment ? static_cast<int>(*s.sentiment) : -1});
      require(mine.tp == tp && mine.predicted == p.size() && mine.gold == g.size(),
              "counts differ from the set-intersection oracle");
    }
  }
  return "worked example exact; 1000 random pairs equal the intersection oracle";
}

std::string partition_discipline() {
  SynthSpec spec = SynthSpec::defaults();
  spec.train_sentences = 40;
  spec.test_sentences = 10;
  SynthCorpora data = generate_synth(spec);
  Lexicon lex(data.lexicon_words.begin(), data.lexicon_words.end());
  label_corpus_opinions(data.source_train, lex);
  label_corpus_opinions(data.target_train, lex);
  for (Sentence& s : data.target_train) s.unified_tags.reset();

  TrainingConfig cfg;
  cfg.mode = Mode::kAdSal;
  cfg.emb_dim = 12;
  cfg.hidden_boundary = 12;
  cfg.hidden_unified = 12;
  cfg.relations = 4;
  cfg.dropout = 0.5;
  cfg.batch_size = 16;
  cfg.dtype = Dtype::F32;

  Vocabulary vocab = Vocabulary::build({&data.source_train, &data.target_train});
  Rng oov(3);
  EmbeddingMatrix emb = random_embeddings(vocab, cfg.emb_dim, oov);
  Model model(cfg.model_config(), std::move(vocab), emb, cfg.dtype, 21);
  Trainer trainer(model, cfg, 21);
  MixedBatcher batcher(data.source_train, data.target_train, cfg.batch_size, 23);

  auto snapshot = [&](const Subset& subset) {
    std::vector<std::pair<std::string, Array>> out;
    for (Param* p : model.params().in(subset)) out.emplace_back(p->name, p->value);
    return out;
  };
  auto unchanged = [&](const std::vector<std::pair<std::string, Array>>& snap) {
    for (const auto& [name, value] : snap)
      if (!model.params().at(name).value.same_values(value)) return false;
    return true;
  };

  std::size_t steps = 0;
  double worst_norm = 0.0;
  for (std::size_t epoch = 0; steps < 50; ++epoch)
    for (const Batch& batch : batcher.epoch(epoch)) {
      if (steps >= 50) break;
      auto disc = snapshot(Subset{false, false, true});
      StepMetrics m1 = trainer.stage_one(batch);
      require(unchanged(disc), "stage 1 modified the discriminator partition");
      auto heads = snapshot(Subset{false, true, false});
      StepMetrics m2 = trainer.stage_two(batch);
      require(unchanged(heads), "stage 2 modified the word-predictor partition");
      worst_norm = std::max({worst_norm, m1.grad_norm_stage1, m2.grad_norm_stage2});
      require(m1.grad_norm_stage1 <= cfg.clip_norm + 1e-6, "post-clip norm above the threshold");
      require(m2.grad_norm_stage2 <= cfg.clip_norm + 1e-6, "post-clip norm above the threshold");
      ++steps;
    }
  std::ostringstream os;
  os << steps << " alternating steps, worst post-clip norm " << worst_norm;
  return os.str();
}

std::string overfit_capacity() {
  auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec = SynthSpec::defaults();
  spec.train_sentences = 50;
  spec.test_sentences = 10;
  SynthCorpora data = generate_synth(spec);

  TrainingConfig cfg;
  cfg.mode = Mode::kBaseSo;
  cfg.emb_dim = 24;
  cfg.hidden_boundary = 24;
  cfg.hidden_unified = 24;
  cfg.relations = 4;
  cfg.dropout = 0.0;
  cfg.batch_size = 16;  // 8 sentences per step
  cfg.lr = 0.01;
  cfg.dtype = Dtype::F32;

  Vocabulary vocab = Vocabulary::build({&data.source_train});
  Rng oov(9);
  EmbeddingMatrix emb = random_embeddings(vocab, cfg.emb_dim, oov);
  Model model(cfg.model_config(), std::move(vocab), emb, cfg.dtype, 31);
  Trainer trainer(model, cfg, 31);
  std::vector<Sentence> no_target;
  MixedBatcher batcher(data.source_train, no_target, cfg.batch_size, 33);

  double accuracy = 0.0;
  std::size_t epoch = 0;
  for (; epoch < 200; ++epoch) {
    for (const Batch& b : batcher.epoch(epoch)) trainer.stage_one(b);
    accuracy = evaluate_corpus(model, data.source_train).token_accuracy;
    if (accuracy >= 0.99) break;
  }
  double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "token accuracy " << accuracy * 100 << "% after " << epoch + 1 << " epochs, " << elapsed << "s";
  require(accuracy >= 0.99, os.str());
  require(elapsed < 300.0, "exceeded the 5 minute budget");
  return os.str();
}

std::string synthetic_transfer() {
  auto t0 = std::chrono::steady_clock::now();
  SynthSpec spec = SynthSpec::defaults();
  SynthCorpora data = generate_synth(spec);
  TransferPair pair{data.source_train, data.target_train, data.source_test, data.target_test};
  Lexicon lex(data.lexicon_words.begin(), data.lexicon_words.end());

  TrainingConfig cfg;
  cfg.emb_dim = 24;
  cfg.hidden_boundary = 24;
  cfg.hidden_unified = 24;
  cfg.relations = 6;
  cfg.hops = 2;
  cfg.dropout = 0.3;
  cfg.batch_size = 32;
  cfg.lr = 0.003;
  cfg.epochs = 80;
  cfg.dtype = Dtype::F32;
  cfg.seeds = {1, 2, 3, 4, 5};

  auto run_mode = [&](Mode mode) {
    TrainingConfig c = cfg;
    c.mode = mode;
    SuiteResult suite = run_suite(pair, lex, c, nullptr);
    std::printf("    %-8s ADS %.4f +/- %.4f  AD %.4f +/- %.4f\n", mode_name(mode), suite.ads_mean,
                suite.ads_std, suite.ad_mean, suite.ad_std);
    std::fflush(stdout);
    return suite;
  };

  SuiteResult so = run_mode(Mode::kBaseSo);
  SuiteResult dmi = run_mode(Mode::kBaseDmi);
  SuiteResult al = run_mode(Mode::kAdAl);
  SuiteResult sal = run_mode(Mode::kAdSal);
  SuiteResult to = run_mode(Mode::kBaseTo);
  double elapsed = seconds_since(t0);

  std::ostringstream os;
  os << "ADS means: SO " << so.ads_mean << ", DMI " << dmi.ads_mean << ", AL " << al.ads_mean
     << ", SAL " << sal.ads_mean << ", TO " << to.ads_mean << " (" << elapsed << "s)";
  require(sal.ads_mean >= so.ads_mean + 0.05, "AD_SAL does not beat BASE_SO by 5 points: " + os.str());
  require(sal.ads_mean >= al.ads_mean - 0.01, "AD_SAL regresses below AD_AL - 1 point: " + os.str());
  for (const SuiteResult* transfer : {&dmi, &al, &sal})
    require(to.ads_mean > transfer->ads_mean, "BASE_TO does not exceed a transfer mode: " + os.str());
  require(elapsed < 1800.0, "exceeded the 30 minute budget");
  return os.str();
}

std::string determinism() {
  SynthSpec spec = SynthSpec::defaults();
  spec.train_sentences = 24;
  spec.test_sentences = 8;
  SynthCorpora data = generate_synth(spec);
  TransferPair pair{data.source_train, data.target_train, data.source_test, data.target_test};
  Lexicon lex(data.lexicon_words.begin(), data.lexicon_words.end());

  TrainingConfig cfg;
  cfg.mode = Mode::kAdSal;
  cfg.emb_dim = 10;
  cfg.hidden_boundary = 10;
  cfg.hidden_unified = 10;
  cfg.relations = 3;
  cfg.batch_size = 8;
  cfg.epochs = 2;
  cfg.dtype = Dtype::F32;

  std::ostringstream log1, log2;
  TrainResult a = train(pair, lex, cfg, 11, &log1);
  TrainResult b = train(pair, lex, cfg, 11, &log2);
  require(log1.str() == log2.str(), "epoch logs differ between identical runs");
  require(a.best_checkpoint == b.best_checkpoint, "checkpoints differ between identical runs");
  return "identical logs and byte-identical checkpoints across two seeded runs";
}

std::string data_provided_pathway() {
  const char* dir = std::getenv("CROSSTAG_DATA_DIR");
  if (!dir)
    return "SKIP - set CROSSTAG_DATA_DIR to a directory with source_train.conll, "
           "target_train.conll, source_test.conll, target_test.conll and opinion_lexicon.txt";
  namespace fs = std::filesystem;
  TrainingConfig cfg;
  cfg.source_train = (fs::path(dir) / "source_train.conll").string();
  cfg.target_train = (fs::path(dir) / "target_train.conll").string();
  cfg.source_test = (fs::path(dir) / "source_test.conll").string();
  cfg.target_test = (fs::path(dir) / "target_test.conll").string();
  cfg.lexicon = (fs::path(dir) / "opinion_lexicon.txt").string();
  cfg.mode = Mode::kAdSal;
  TransferPair pair = load_transfer_pair(cfg);
  Lexicon lex = load_lexicon(cfg.lexicon);
  SuiteResult suite = run_suite(pair, lex, cfg, nullptr);
  std::ostringstream os;
  os << "mean of " << suite.runs.size() << " runs: AD " << suite.ad_mean << " +/- " << suite.ad_std
     << ", ADS " << suite.ads_mean << " +/- " << suite.ads_std;
  return os.str();
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient-fidelity", gradient_fidelity},
      {"grl-contract", grl_contract},
      {"attention-memory-algebra", attention_memory_algebra},
      {"tag-scheme-oracle", tag_scheme_oracle},
      {"micro-f1-oracle", micro_f1_oracle},
      {"partition-discipline", partition_discipline},
      {"overfit-capacity", overfit_capacity},
      {"synthetic-transfer", synthetic_transfer},
      {"determinism", determinism},
      {"data-provided-pathway", data_provided_pathway},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    try {
      std::string detail = c.run();
      std::printf("PASS  %-26s %s\n", c.name, detail.c_str());
    } catch (const std::exception& e) {
      std::printf("FAIL  %-26s %s\n", c.name, e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
