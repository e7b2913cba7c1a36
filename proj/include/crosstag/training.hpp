#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crosstag/adversarial.hpp"
#include "crosstag/corpus.hpp"
#include "crosstag/evaluation.hpp"
#include "crosstag/model.hpp"

namespace crosstag {

enum class Schedule : std::uint8_t { kAlternating = 0, kJoint = 1 };
enum class AlternateGranularity : std::uint8_t { kBatch = 0, kEpoch = 1 };

struct TrainingConfig {
  Mode mode = Mode::kAdSal;
  Schedule schedule = Schedule::kAlternating;
  AlternateGranularity granularity = AlternateGranularity::kBatch;
  double lr = 0.001;
  std::size_t batch_size = 64;  // half from each domain
  double rho = 1.0;             // opinion-loss weight
  double lambda = 0.1;          // adaptation rate
  double gamma = 1.0;           // domain-loss weight, joint schedule only
  std::size_t hops = 2;
  std::size_t relations = 50;
  std::size_t emb_dim = 100;
  std::size_t hidden_boundary = 100;
  std::size_t hidden_unified = 100;
  double dropout = 0.5;
  double clip_norm = 40.0;
  std::size_t epochs = 30;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool finetune_embeddings = false;
  bool dmi_concat_hidden = false;
  bool memory_zero_init = false;
  bool sal_detach_selector = true;
  bool shared_adam = true;  // one optimizer state across both stages
  Dtype dtype = Dtype::F32;

  std::string source_train;
  std::string target_train;
  std::string source_test;
  std::string target_test;
  std::string lexicon;
  std::string embeddings;  // optional word2vec text file

  ModelConfig model_config() const;
  std::string to_json() const;
  void validate() const;
};

// Flat "key = value" file, '#' comments. Unknown keys are errors.
TrainingConfig parse_config_file(const std::string& path);
void apply_config_entry(TrainingConfig& cfg, const std::string& key, const std::string& value);
void apply_config_overrides(TrainingConfig& cfg, const std::map<std::string, std::string>& overrides);

struct SentenceRun {
  const Sentence* sentence = nullptr;
  SentenceForward forward;
};

// Eq-style task losses. main_loss covers the boundary and unified heads over
// labeled sentences only; opinion_loss covers every sentence (the labels come
// from the lexicon). Both are per-word sums averaged over sentences.
Node main_loss(Graph& g, const std::vector<SentenceRun>& labeled);
Node opinion_loss(Graph& g, const std::vector<SentenceRun>& all_runs);

struct StepMetrics {
  double loss_main = 0.0;
  double loss_opinion = 0.0;
  double loss_domain = 0.0;
  double clip_factor_stage1 = 1.0;
  double clip_factor_stage2 = 1.0;
  double grad_norm_stage1 = 0.0;  // post-clip
  double grad_norm_stage2 = 0.0;
};

// Owns the optimizer state and the dropout stream; the model is borrowed.
class Trainer {
 public:
  Trainer(Model& model, const TrainingConfig& cfg, std::uint64_t seed);

  StepMetrics alternating_step(const Batch& batch);  // stage 1 then stage 2
  StepMetrics joint_step(const Batch& batch);
  StepMetrics stage_one(const Batch& batch);
  StepMetrics stage_two(const Batch& batch);
  StepMetrics step(const Batch& batch);  // dispatch per schedule/mode

  Adam& optimizer_stage1() { return adam1_; }
  Adam& optimizer_stage2() { return *adam2_; }

 private:
  double run_backward(Graph& g, Node loss, const char* stage);
  Model& model_;
  const TrainingConfig& cfg_;
  Rng dropout_rng_;
  Adam adam1_;
  std::unique_ptr<Adam> adam2_owned_;
  Adam* adam2_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_main = 0.0;
  double loss_opinion = 0.0;
  double loss_domain = 0.0;
  double val_ad_f1 = 0.0;
  double val_ads_f1 = 0.0;
  double val_token_accuracy = 0.0;

  std::string to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<std::uint8_t> best_checkpoint;
  double best_val_ads = -1.0;
  std::size_t best_epoch = 0;
};

// Arranges the pair for the mode: transfer modes train on labeled source with
// unlabeled target; BASE_TO trains on the labeled target corpus and validates
// on the target test set. Target-train gold tags are dropped in transfer
// modes before training sees them.
struct ArrangedData {
  std::vector<Sentence> labeled_train;
  std::vector<Sentence> unlabeled_train;  // empty for source-only modes
  std::vector<Sentence> validation;
};
ArrangedData arrange_for_mode(const TransferPair& pair, Mode mode);

TrainResult train(const TransferPair& pair, const Lexicon& lexicon, const TrainingConfig& cfg,
                  std::uint64_t seed, std::ostream* log_stream);

struct RunOutcome {
  std::uint64_t seed = 0;
  EvalReport ad;
  EvalReport ads;
  std::vector<std::uint8_t> best_checkpoint;
};

struct SuiteResult {
  std::vector<RunOutcome> runs;
  double ad_mean = 0.0, ad_std = 0.0;
  double ads_mean = 0.0, ads_std = 0.0;

  std::string to_json() const;
};

// Trains once per seed, evaluates the best validation checkpoint on the
// target test set and aggregates mean and standard deviation.
SuiteResult run_suite(const TransferPair& pair, const Lexicon& lexicon, const TrainingConfig& cfg,
                      std::ostream* log_stream);

TransferPair load_transfer_pair(const TrainingConfig& cfg);

}  // namespace crosstag
