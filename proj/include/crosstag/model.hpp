#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crosstag/corpus.hpp"
#include "crosstag/dmi.hpp"
#include "crosstag/embeddings.hpp"
#include "crosstag/graph.hpp"
#include "crosstag/params.hpp"

namespace crosstag {

// The six variants: the plain stacked tagger trained on source or target, the
// tagger with the dual-memory interaction, and the three adversarial modes
// (uniform alignment, selective alignment on the low-level features, and
// selective alignment on the high-level states).
enum class Mode { kBaseSo, kBaseTo, kBaseDmi, kAdAl, kAdSal, kAdsSal };

const char* mode_name(Mode m);
std::optional<Mode> mode_from_string(const std::string& s);
bool mode_has_dmi(Mode m);
bool mode_adversarial(Mode m);

enum class AlignSite : std::uint8_t { kLow = 0, kHigh = 1 };
AlignSite mode_align_site(Mode m);
bool mode_selective(Mode m);

struct ModelConfig {
  Mode mode = Mode::kAdSal;
  std::size_t emb_dim = 100;
  std::size_t hidden_boundary = 100;  // concatenated over the two directions
  std::size_t hidden_unified = 100;
  std::size_t relations = 50;  // bilinear slices per composition tensor
  std::size_t hops = 2;
  double dropout = 0.5;
  double lambda = 0.1;
  bool finetune_embeddings = false;
  bool dmi_concat_hidden = false;  // feed [r : h^B] instead of r to the upper LSTM
  bool memory_zero_init = false;
  bool sal_detach_selector = true;

  std::size_t correlation_dim() const { return 2 * relations; }
  void validate() const;
};

struct LstmDirection {
  Param* w[4];  // input weights, gate order: input, forget, candidate, output
  Param* u[4];  // recurrent weights
  Param* b[4];
};

struct LstmRefs {
  LstmDirection fw, bw;
  std::size_t input_dim = 0;
  std::size_t hidden_per_dir = 0;
};

// Zero initial state per direction; per-step outputs are [fw ; bw].
std::vector<Node> bilstm(Graph& g, const LstmRefs& p, const std::vector<Node>& inputs);
std::vector<Node> lstm_direction(Graph& g, const LstmDirection& p, std::size_t hidden,
                                 const std::vector<Node>& inputs, bool reversed);

struct ForwardOptions {
  bool training = false;
  bool boundary_unified = true;  // boundary + unified heads (needs the upper LSTM)
  bool opinion = false;          // opinion head; DMI modes only
  bool domain = false;           // discriminator scores through the GRL
};

struct SentenceForward {
  std::vector<Node> z_boundary;  // T x [5]
  std::vector<Node> z_unified;   // T x [13]
  std::vector<Node> z_opinion;   // T x [2]; DMI modes only
  std::vector<Node> z_domain;    // T x [2]; adversarial modes with domain_head
  std::vector<Node> alpha_a;     // per hop [T]
  std::vector<Node> alpha_o;
  Node alpha_a_final;  // selector for the adversarial loss
};

class Model {
 public:
  // Fresh model; embedding values are copied from `emb` into the store.
  Model(ModelConfig cfg, Vocabulary vocab, const EmbeddingMatrix& emb, Dtype dtype,
        std::uint64_t init_seed);
  // Rebuild around an existing store (checkpoint load).
  Model(ModelConfig cfg, Vocabulary vocab, std::unique_ptr<ParamStore> store);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return *store_; }
  const ParamStore& params() const { return *store_; }
  Dtype dtype() const { return store_->dtype(); }

  SentenceForward forward(Graph& g, const Sentence& s, const ForwardOptions& opt) const;

  struct Prediction {
    std::vector<UnifiedTag> unified;
    std::vector<BoundaryTag> boundary;  // the auxiliary head's own decode
  };
  Prediction predict_all(const Sentence& s) const;  // one forward, both heads
  std::vector<UnifiedTag> predict(const Sentence& s) const;
  std::vector<BoundaryTag> predict_boundary(const Sentence& s) const;

  struct Attention {
    std::vector<std::vector<double>> alpha_a;  // hop -> per-token weight
    std::vector<std::vector<double>> alpha_o;
    std::vector<UnifiedTag> predicted;
  };
  Attention inspect(const Sentence& s) const;

 private:
  void build_params(const EmbeddingMatrix* emb, std::uint64_t init_seed);
  void wire_refs();
  Node embed_token(Graph& g, const std::string& token) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  std::unique_ptr<ParamStore> store_;

  Param* embed_table_ = nullptr;
  LstmRefs lstm_b_;
  LstmRefs lstm_u_;
  DmiParamRefs dmi_;
  Param* head_boundary_w_ = nullptr;
  Param* head_boundary_b_ = nullptr;
  Param* head_unified_w_ = nullptr;
  Param* head_unified_b_ = nullptr;
  Param* head_opinion_w_ = nullptr;
  Param* head_opinion_b_ = nullptr;
  Param* disc_w_ = nullptr;
  Param* disc_b_ = nullptr;
};

// Greedy per-position decode; ties break toward the lowest tag index.
std::size_t argmax_lowest(const Array& probs);

}  // namespace crosstag
