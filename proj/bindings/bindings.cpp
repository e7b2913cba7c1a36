// Python surface over the core: data-model conversions, scoring, the
// synthetic corpus generator, gradient checks and the training pipeline.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <map>
#include <optional>

#include "crosstag/evaluation.hpp"
#include "crosstag/gradcheck.hpp"
#include "crosstag/model_io.hpp"
#include "crosstag/synth.hpp"
#include "crosstag/training.hpp"

namespace py = pybind11;
using namespace crosstag;

namespace {

std::vector<UnifiedTag> tags_from_strings(const std::vector<std::string>& names) {
  std::vector<UnifiedTag> out;
  out.reserve(names.size());
  for (const std::string& n : names) {
    auto t = unified_tag_from_string(n);
    if (!t) throw std::invalid_argument("unknown unified tag '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

py::object segment_to_py(const Segment& s) {
  py::object sentiment = s.sentiment ? py::cast(std::string(to_string(*s.sentiment))) : py::none();
  return py::make_tuple(s.start, s.end, sentiment);
}

Segment segment_from_py(const py::tuple& t) {
  Segment s;
  s.start = t[0].cast<std::size_t>();
  s.end = t[1].cast<std::size_t>();
  if (!t[2].is_none()) {
    std::string name = t[2].cast<std::string>();
    for (Sentiment sent : {Sentiment::kPos, Sentiment::kNeg, Sentiment::kNeu})
      if (name == to_string(sent)) s.sentiment = sent;
    if (!s.sentiment) throw std::invalid_argument("unknown sentiment '" + name + "'");
  }
  return s;
}

std::vector<Segment> segments_from_py(const std::vector<py::tuple>& tuples) {
  std::vector<Segment> out;
  out.reserve(tuples.size());
  for (const auto& t : tuples) out.push_back(segment_from_py(t));
  return out;
}

py::dict report_to_py(const EvalReport& r) {
  py::dict d;
  d["task"] = task_name(r.task);
  d["tp"] = r.tp;
  d["pred"] = r.predicted;
  d["gold"] = r.gold;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["micro_f1"] = r.micro_f1;
  return d;
}

TrainingConfig config_from_options(const std::map<std::string, std::string>& options) {
  TrainingConfig cfg;
  auto it = options.find("config");
  if (it != options.end()) cfg = parse_config_file(it->second);
  for (const auto& [k, v] : options)
    if (k != "config") apply_config_entry(cfg, k, v);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cross-domain aspect-sentiment sequence labeler";

  m.def("unified_tags", [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kNumUnifiedTags; ++i)
      out.push_back(to_string(static_cast<UnifiedTag>(i)));
    return out;
  });

  m.def("unified_to_boundary", [](const std::vector<std::string>& tags) {
    std::vector<std::string> out;
    for (BoundaryTag b : unified_to_boundary(tags_from_strings(tags))) out.push_back(to_string(b));
    return out;
  });

  m.def("segments_from_tags", [](const std::vector<std::string>& tags) {
    py::list out;
    for (const Segment& s : segments_from_tags(tags_from_strings(tags))) out.append(segment_to_py(s));
    return out;
  });

  m.def(
      "tags_from_segments",
      [](const std::vector<py::tuple>& segments, std::size_t length, bool with_sentiment) {
        std::vector<std::string> out;
        if (with_sentiment)
          for (UnifiedTag t : unified_from_segments(segments_from_py(segments), length))
            out.push_back(to_string(t));
        else
          for (BoundaryTag t : boundary_from_segments(segments_from_py(segments), length))
            out.push_back(to_string(t));
        return out;
      },
      py::arg("segments"), py::arg("length"), py::arg("with_sentiment") = true);

  m.def("parse_conll", [](const std::string& path) {
    auto result = parse_conll(path);
    py::list out;
    for (const Sentence& s : result.sentences) {
      py::dict d;
      d["tokens"] = s.tokens;
      if (s.unified_tags) {
        std::vector<std::string> tags;
        for (UnifiedTag t : *s.unified_tags) tags.push_back(to_string(t));
        d["tags"] = tags;
      } else {
        d["tags"] = py::none();
      }
      out.append(d);
    }
    return out;
  });

  m.def("label_opinions",
        [](const std::vector<std::string>& tokens, const std::vector<std::string>& lexicon_words) {
          Lexicon lex;
          for (const std::string& w : lexicon_words) lex.insert(fold_case(w));
          Sentence s;
          s.tokens = tokens;
          std::vector<int> out;
          for (OpinionLabel l : label_opinions(s, lex)) out.push_back(static_cast<int>(l));
          return out;
        });

  m.def(
      "micro_f1",
      [](const std::vector<py::tuple>& gold, const std::vector<py::tuple>& pred,
         const std::string& task) {
        EvalTask t = task == "AD" ? EvalTask::kAd : EvalTask::kAds;
        return report_to_py(
            make_report(t, exact_match_counts(segments_from_py(gold), segments_from_py(pred), t)));
      },
      py::arg("gold"), py::arg("pred"), py::arg("task") = "ADS");

  m.def(
      "generate_synth",
      [](const std::string& out_dir, std::uint64_t seed, std::size_t train_sentences,
         std::size_t test_sentences) {
        SynthSpec spec = SynthSpec::defaults();
        spec.seed = seed;
        if (train_sentences) spec.train_sentences = train_sentences;
        if (test_sentences) spec.test_sentences = test_sentences;
        SynthPaths paths = write_synth(spec, out_dir);
        py::dict d;
        d["source_train"] = paths.source_train;
        d["source_test"] = paths.source_test;
        d["target_train"] = paths.target_train;
        d["target_test"] = paths.target_test;
        d["lexicon"] = paths.lexicon;
        return d;
      },
      py::arg("out_dir"), py::arg("seed") = 7, py::arg("train_sentences") = 0,
      py::arg("test_sentences") = 0);

  m.def(
      "grad_check",
      [](const std::string& mode, std::size_t length, std::size_t emb_dim, std::size_t hidden,
         std::size_t relations, std::size_t hops, double lambda, std::uint64_t seed) {
        ModelCheckSpec spec;
        auto mo = mode_from_string(mode);
        if (!mo) throw std::invalid_argument("unknown mode '" + mode + "'");
        spec.mode = *mo;
        spec.length = length;
        spec.emb_dim = emb_dim;
        spec.hidden = hidden;
        spec.relations = relations;
        spec.hops = hops;
        spec.lambda = lambda;
        spec.seed = seed;
        ModelCheckReport r = grad_check_model(spec);
        py::dict d;
        d["max_rel_err"] = r.max_rel_err;
        d["task_max_rel_err"] = r.task.max_rel_err;
        d["domain_max_rel_err"] = r.domain.max_rel_err;
        d["worst_param"] = r.task.worst_param;
        return d;
      },
      py::arg("mode") = "AD_SAL", py::arg("length") = 3, py::arg("emb_dim") = 4,
      py::arg("hidden") = 4, py::arg("relations") = 2, py::arg("hops") = 2,
      py::arg("lambda_") = 0.1, py::arg("seed") = 17);

  m.def(
      "train",
      [](const std::map<std::string, std::string>& options, const std::string& checkpoint_path,
         const std::string& log_path) {
        TrainingConfig cfg = config_from_options(options);
        cfg.validate();
        TransferPair pair = load_transfer_pair(cfg);
        Lexicon lex = cfg.lexicon.empty() ? Lexicon{} : load_lexicon(cfg.lexicon);
        std::ofstream log_file;
        std::ostream* log = nullptr;
        if (!log_path.empty()) {
          log_file.open(log_path);
          if (!log_file) throw std::runtime_error("cannot open log file " + log_path);
          log = &log_file;
        }
        py::dict out;
        if (cfg.seeds.size() == 1) {
          TrainResult r = train(pair, lex, cfg, cfg.seeds[0], log);
          if (!checkpoint_path.empty()) {
            std::ofstream ck(checkpoint_path, std::ios::binary);
            if (!ck) throw std::runtime_error("cannot write checkpoint " + checkpoint_path);
            ck.write(reinterpret_cast<const char*>(r.best_checkpoint.data()),
                     static_cast<std::streamsize>(r.best_checkpoint.size()));
          }
          Model best = model_from_checkpoint(deserialize_checkpoint(r.best_checkpoint));
          CorpusEval ev = evaluate_corpus(best, pair.target_test);
          out["best_epoch"] = r.best_epoch;
          out["best_val_ads"] = r.best_val_ads;
          out["target_ad"] = report_to_py(ev.ad);
          out["target_ads"] = report_to_py(ev.ads);
          out["epochs"] = r.epochs.size();
        } else {
          SuiteResult suite = run_suite(pair, lex, cfg, log);
          py::list runs;
          for (const RunOutcome& r : suite.runs) {
            py::dict e;
            e["seed"] = r.seed;
            e["ad"] = report_to_py(r.ad);
            e["ads"] = report_to_py(r.ads);
            runs.append(e);
          }
          out["runs"] = runs;
          out["ad_mean"] = suite.ad_mean;
          out["ad_std"] = suite.ad_std;
          out["ads_mean"] = suite.ads_mean;
          out["ads_std"] = suite.ads_std;
        }
        return out;
      },
      py::arg("options"), py::arg("checkpoint") = "", py::arg("log") = "");

  m.def("evaluate", [](const std::string& checkpoint_path, const std::string& corpus_path) {
    Model model = load_model(checkpoint_path);
    auto parsed = parse_conll(corpus_path);
    CorpusEval ev = evaluate_corpus(model, parsed.sentences);
    py::dict d;
    d["ad"] = report_to_py(ev.ad);
    d["ads"] = report_to_py(ev.ads);
    d["token_accuracy"] = ev.token_accuracy;
    return d;
  });

  m.def("predict", [](const std::string& checkpoint_path, const std::string& input_path,
                      const std::string& output_path) {
    Model model = load_model(checkpoint_path);
    auto parsed = parse_conll(input_path);
    for (Sentence& s : parsed.sentences) s.unified_tags = model.predict(s);
    write_conll(output_path, parsed.sentences);
  });

  m.def("inspect_attention", [](const std::string& checkpoint_path, const std::string& input_path) {
    Model model = load_model(checkpoint_path);
    auto parsed = parse_conll(input_path);
    py::list out;
    for (const Sentence& s : parsed.sentences) {
      Model::Attention att = model.inspect(s);
      py::dict d;
      d["tokens"] = s.tokens;
      d["alpha_a"] = att.alpha_a;
      d["alpha_o"] = att.alpha_o;
      std::vector<std::string> tags;
      for (UnifiedTag t : att.predicted) tags.push_back(to_string(t));
      d["predicted_tags"] = tags;
      out.append(d);
    }
    return out;
  });
}
