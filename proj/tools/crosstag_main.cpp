// Command-line front end: train / evaluate / predict / inspect-attention /
// grad-check / synth over the crosstag library.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "crosstag/evaluation.hpp"
#include "crosstag/gradcheck.hpp"
#include "crosstag/model_io.hpp"
#include "crosstag/synth.hpp"
#include "crosstag/training.hpp"

using namespace crosstag;
using nlohmann::json;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;  // key=value overrides
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key = value config file");
  cmd->add_option("--set", args.sets, "override a config key, e.g. --set mode=AD_SAL")
      ->take_all();
}

TrainingConfig resolve_config(const ConfigArgs& args) {
  TrainingConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);
  for (const std::string& kv : args.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::unique_ptr<std::ofstream> open_log(const std::string& path, std::ostream*& stream) {
  if (path.empty()) {
    stream = &std::cout;
    return nullptr;
  }
  auto file = std::make_unique<std::ofstream>(path);
  if (!*file) throw std::runtime_error("cannot open log file " + path);
  stream = file.get();
  return file;
}

int cmd_train(const ConfigArgs& cargs, const std::string& checkpoint_path, const std::string& log_path) {
  TrainingConfig cfg = resolve_config(cargs);
  cfg.validate();
  TransferPair pair = load_transfer_pair(cfg);
  Lexicon lexicon = cfg.lexicon.empty() ? Lexicon{} : load_lexicon(cfg.lexicon);

  std::ostream* log = nullptr;
  auto log_file = open_log(log_path, log);

  if (cfg.seeds.size() == 1) {
    TrainResult result = train(pair, lexicon, cfg, cfg.seeds[0], log);
    std::ofstream out(checkpoint_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + checkpoint_path);
    out.write(reinterpret_cast<const char*>(result.best_checkpoint.data()),
              static_cast<std::streamsize>(result.best_checkpoint.size()));
    Model best = model_from_checkpoint(deserialize_checkpoint(result.best_checkpoint));
    CorpusEval eval = evaluate_corpus(best, pair.target_test);
    *log << "{\"best_epoch\":" << result.best_epoch << ",\"target_ad\":" << eval.ad.to_json()
         << ",\"target_ads\":" << eval.ads.to_json() << "}\n";
    return 0;
  }
  SuiteResult suite = run_suite(pair, lexicon, cfg, log);
  for (const RunOutcome& run : suite.runs) {
    std::string path = checkpoint_path + ".seed" + std::to_string(run.seed);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(reinterpret_cast<const char*>(run.best_checkpoint.data()),
              static_cast<std::streamsize>(run.best_checkpoint.size()));
  }
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& corpus_path) {
  Model model = load_model(checkpoint_path);
  auto parsed = parse_conll(corpus_path);
  CorpusEval eval = evaluate_corpus(model, parsed.sentences);
  std::cout << eval.ad.to_json() << "\n" << eval.ads.to_json() << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& input_path,
                const std::string& output_path) {
  Model model = load_model(checkpoint_path);
  auto parsed = parse_conll(input_path);
  for (Sentence& s : parsed.sentences) s.unified_tags = model.predict(s);
  write_conll(output_path, parsed.sentences);
  return 0;
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& input_path,
                const std::string& output_path, bool render) {
  Model model = load_model(checkpoint_path);
  auto parsed = parse_conll(input_path);
  json dump = json::array();
  for (const Sentence& s : parsed.sentences) {
    Model::Attention att = model.inspect(s);
    json entry;
    entry["tokens"] = s.tokens;
    json hops = json::array();
    for (std::size_t l = 0; l < att.alpha_a.size(); ++l) {
      json hop;
      hop["hop"] = l + 1;
      hop["alpha_a"] = att.alpha_a[l];
      hop["alpha_o"] = att.alpha_o[l];
      hops.push_back(hop);
    }
    entry["hops"] = hops;
    json tags = json::array();
    for (UnifiedTag t : att.predicted) tags.push_back(to_string(t));
    entry["predicted_tags"] = tags;
    dump.push_back(entry);

    if (render) {
      auto bar = [](double w) {
        static const char* blocks[] = {" ", ".", ":", "-", "=", "#", "%", "@"};
        int level = std::min(7, static_cast<int>(w * 8.0));
        return std::string(blocks[level]);
      };
      for (std::size_t l = 0; l < att.alpha_a.size(); ++l) {
        std::cerr << "hop " << l + 1 << " A:";
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
          std::cerr << " " << s.tokens[i] << "[" << bar(att.alpha_a[l][i]) << "]";
        std::cerr << "\n";
      }
    }
  }
  if (output_path.empty()) {
    std::cout << dump.dump(2) << "\n";
  } else {
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot write " + output_path);
    out << dump.dump(2) << "\n";
  }
  return 0;
}

int cmd_grad_check(ModelCheckSpec spec, double threshold) {
  ModelCheckReport report = grad_check_model(spec);
  json j;
  j["mode"] = mode_name(spec.mode);
  j["max_rel_err"] = report.max_rel_err;
  j["task_max_rel_err"] = report.task.max_rel_err;
  j["task_worst_param"] = report.task.worst_param;
  if (mode_adversarial(spec.mode)) {
    j["domain_max_rel_err"] = report.domain.max_rel_err;
    j["domain_worst_param"] = report.domain.worst_param;
  }
  json per = json::array();
  for (const GradCheckEntry& e : report.task.per_param)
    per.push_back({{"param", e.param}, {"max_rel_err", e.max_rel_err}});
  j["task_per_param"] = per;
  std::cout << j.dump(2) << "\n";
  if (report.max_rel_err >= threshold) {
    std::cerr << "grad-check FAILED: " << report.max_rel_err << " >= " << threshold << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-domain aspect-sentiment sequence labeler"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string train_checkpoint = "model.ckpt";
  std::string train_log;
  auto* train_cmd = app.add_subcommand("train", "train a model and keep the best checkpoint");
  add_config_options(train_cmd, train_args);
  train_cmd->add_option("--checkpoint", train_checkpoint, "output checkpoint path");
  train_cmd->add_option("--log", train_log, "JSON-lines log path (default stdout)");

  std::string eval_checkpoint, eval_corpus;
  auto* eval_cmd = app.add_subcommand("evaluate", "exact-match micro-F1 of a checkpoint on a corpus");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--corpus", eval_corpus)->required();

  std::string pred_checkpoint, pred_input, pred_output;
  auto* pred_cmd = app.add_subcommand("predict", "tag a corpus and write CoNLL output");
  pred_cmd->add_option("--checkpoint", pred_checkpoint)->required();
  pred_cmd->add_option("--input", pred_input)->required();
  pred_cmd->add_option("--output", pred_output)->required();

  std::string ins_checkpoint, ins_input, ins_output;
  bool ins_render = false;
  auto* ins_cmd = app.add_subcommand("inspect-attention", "dump per-hop attention weights as JSON");
  ins_cmd->add_option("--checkpoint", ins_checkpoint)->required();
  ins_cmd->add_option("--input", ins_input)->required();
  ins_cmd->add_option("--output", ins_output, "JSON output path (default stdout)");
  ins_cmd->add_flag("--render", ins_render, "also print a text heat table to stderr");

  ModelCheckSpec check_spec;
  std::string check_mode = "AD_SAL";
  double check_threshold = 1e-4;
  auto* check_cmd = app.add_subcommand("grad-check", "finite-difference check of the composed model");
  check_cmd->add_option("--mode", check_mode);
  check_cmd->add_option("--length", check_spec.length);
  check_cmd->add_option("--emb-dim", check_spec.emb_dim);
  check_cmd->add_option("--hidden", check_spec.hidden);
  check_cmd->add_option("--relations", check_spec.relations);
  check_cmd->add_option("--hops", check_spec.hops);
  check_cmd->add_option("--lambda", check_spec.lambda);
  check_cmd->add_option("--seed", check_spec.seed);
  check_cmd->add_option("--threshold", check_threshold);

  SynthSpec synth_spec = SynthSpec::defaults();
  std::string synth_out = "synth_data";
  auto* synth_cmd = app.add_subcommand("synth", "write a deterministic two-domain corpus");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth_spec.seed);
  synth_cmd->add_option("--train-sentences", synth_spec.train_sentences);
  synth_cmd->add_option("--test-sentences", synth_spec.test_sentences);
  synth_cmd->add_option("--source-vocab-fraction", synth_spec.source_vocab_fraction);
  synth_cmd->add_option("--source-context-fraction", synth_spec.source_context_fraction);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, train_checkpoint, train_log);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_checkpoint, eval_corpus);
    if (pred_cmd->parsed()) return cmd_predict(pred_checkpoint, pred_input, pred_output);
    if (ins_cmd->parsed()) return cmd_inspect(ins_checkpoint, ins_input, ins_output, ins_render);
    if (check_cmd->parsed()) {
      auto mode = mode_from_string(check_mode);
      if (!mode) throw std::invalid_argument("unknown mode '" + check_mode + "'");
      check_spec.mode = *mode;
      return cmd_grad_check(check_spec, check_threshold);
    }
    if (synth_cmd->parsed()) {
      SynthPaths paths = write_synth(synth_spec, synth_out);
      json j;
      j["source_train"] = paths.source_train;
      j["source_test"] = paths.source_test;
      j["target_train"] = paths.target_train;
      j["target_test"] = paths.target_test;
      j["lexicon"] = paths.lexicon;
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
