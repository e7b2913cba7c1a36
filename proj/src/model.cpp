#include "crosstag/model.hpp"

#include <stdexcept>

namespace crosstag {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kBaseSo: return "BASE_SO";
    case Mode::kBaseTo: return "BASE_TO";
    case Mode::kBaseDmi: return "BASE_DMI";
    case Mode::kAdAl: return "AD_AL";
    case Mode::kAdSal: return "AD_SAL";
    case Mode::kAdsSal: return "ADS_SAL";
  }
  return "?";
}

std::optional<Mode> mode_from_string(const std::string& s) {
  for (Mode m : {Mode::kBaseSo, Mode::kBaseTo, Mode::kBaseDmi, Mode::kAdAl, Mode::kAdSal, Mode::kAdsSal})
    if (s == mode_name(m)) return m;
  return std::nullopt;
}

bool mode_has_dmi(Mode m) { return m != Mode::kBaseSo && m != Mode::kBaseTo; }

bool mode_adversarial(Mode m) { return m == Mode::kAdAl || m == Mode::kAdSal || m == Mode::kAdsSal; }

AlignSite mode_align_site(Mode m) { return m == Mode::kAdsSal ? AlignSite::kHigh : AlignSite::kLow; }

bool mode_selective(Mode m) { return m == Mode::kAdSal || m == Mode::kAdsSal; }

void ModelConfig::validate() const {
  if (hidden_boundary % 2 || hidden_unified % 2)
    throw std::invalid_argument("hidden sizes must be even (split across two directions)");
  if (emb_dim == 0 || relations == 0 || hops == 0)
    throw std::invalid_argument("emb_dim, relations and hops must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
}

std::vector<Node> lstm_direction(Graph& g, const LstmDirection& p, std::size_t hidden,
                                 const std::vector<Node>& inputs, bool reversed) {
  const std::size_t length = inputs.size();
  std::vector<Node> w(4), u(4), b(4);
  for (int k = 0; k < 4; ++k) {
    w[k] = g.param(*p.w[k]);
    u[k] = g.param(*p.u[k]);
    b[k] = g.param(*p.b[k]);
  }
  std::vector<Node> out(length);
  Node h, c;
  for (std::size_t step = 0; step < length; ++step) {
    std::size_t t = reversed ? length - 1 - step : step;
    auto gate = [&](int k) {
      Node z = g.add(g.matvec(w[k], inputs[t]), b[k]);
      if (step > 0) z = g.add(z, g.matvec(u[k], h));
      return z;
    };
    Node gi = g.sigmoid(gate(0));
    Node gf = g.sigmoid(gate(1));
    Node gc = g.tanh_(gate(2));
    Node go = g.sigmoid(gate(3));
    Node c_new = g.mul(gi, gc);
    if (step > 0) c_new = g.add(c_new, g.mul(gf, c));
    c = c_new;
    h = g.mul(go, g.tanh_(c));
    out[t] = h;
    (void)hidden;
  }
  return out;
}

std::vector<Node> bilstm(Graph& g, const LstmRefs& p, const std::vector<Node>& inputs) {
  auto fw = lstm_direction(g, p.fw, p.hidden_per_dir, inputs, false);
  auto bw = lstm_direction(g, p.bw, p.hidden_per_dir, inputs, true);
  std::vector<Node> out(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) out[t] = g.concat({fw[t], bw[t]});
  return out;
}

Model::Model(ModelConfig cfg, Vocabulary vocab, const EmbeddingMatrix& emb, Dtype dtype,
             std::uint64_t init_seed)
    : cfg_(cfg), vocab_(std::move(vocab)), store_(std::make_unique<ParamStore>(dtype)) {
  cfg_.validate();
  if (emb.dim != cfg_.emb_dim) throw std::invalid_argument("embedding dim does not match config");
  if (emb.table.shape()[0] != vocab_.rows())
    throw std::invalid_argument("embedding rows do not match vocabulary");
  build_params(&emb, init_seed);
  wire_refs();
}

Model::Model(ModelConfig cfg, Vocabulary vocab, std::unique_ptr<ParamStore> store)
    : cfg_(cfg), vocab_(std::move(vocab)), store_(std::move(store)) {
  cfg_.validate();
  wire_refs();
}

namespace {

constexpr const char* kGateNames[4] = {"i", "f", "c", "o"};

void create_lstm(ParamStore& store, Rng& rng, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_per_dir) {
  for (const char* dir : {"fw", "bw"})
    for (int k = 0; k < 4; ++k) {
      std::string base = prefix + "." + dir + ".";
      store.create_uniform(base + "w_" + kGateNames[k], Partition::kFeature,
                           Shape{hidden_per_dir, input_dim}, rng, -0.2, 0.2);
      store.create_uniform(base + "u_" + kGateNames[k], Partition::kFeature,
                           Shape{hidden_per_dir, hidden_per_dir}, rng, -0.2, 0.2);
      store.create(base + "b_" + kGateNames[k], Partition::kFeature, Shape{hidden_per_dir});
    }
}

void wire_lstm(ParamStore& store, const std::string& prefix, std::size_t input_dim,
               std::size_t hidden_per_dir, LstmRefs& refs) {
  refs.input_dim = input_dim;
  refs.hidden_per_dir = hidden_per_dir;
  LstmDirection* dirs[2] = {&refs.fw, &refs.bw};
  const char* names[2] = {"fw", "bw"};
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k < 4; ++k) {
      std::string base = prefix + "." + std::string(names[d]) + ".";
      dirs[d]->w[k] = &store.at(base + "w_" + kGateNames[k]);
      dirs[d]->u[k] = &store.at(base + "u_" + kGateNames[k]);
      dirs[d]->b[k] = &store.at(base + "b_" + kGateNames[k]);
    }
}

}  // namespace

void Model::build_params(const EmbeddingMatrix* emb, std::uint64_t init_seed) {
  Rng rng(mix_seed(init_seed, 1));  // init stream
  ParamStore& st = *store_;

  Param& table = st.create("embed.table", Partition::kFeature, Shape{vocab_.rows(), cfg_.emb_dim});
  for (std::size_t i = 0; i < table.value.numel(); ++i) table.value.set(i, emb->table.at(i));
  table.frozen = !cfg_.finetune_embeddings;

  create_lstm(st, rng, "lstm_b", cfg_.emb_dim, cfg_.hidden_boundary / 2);

  std::size_t d = cfg_.hidden_boundary;
  std::size_t corr = cfg_.correlation_dim();
  if (mode_has_dmi(cfg_.mode)) {
    st.create_uniform("dmi.w_a", Partition::kFeature, Shape{d, 2 * d}, rng, -0.2, 0.2);
    st.create("dmi.b_a", Partition::kFeature, Shape{d});
    st.create_uniform("dmi.w_o", Partition::kFeature, Shape{d, 2 * d}, rng, -0.2, 0.2);
    st.create("dmi.b_o", Partition::kFeature, Shape{d});
    st.create_uniform("dmi.g_a", Partition::kFeature, Shape{cfg_.relations, d, d}, rng, -0.2, 0.2);
    st.create_uniform("dmi.g_o", Partition::kFeature, Shape{cfg_.relations, d, d}, rng, -0.2, 0.2);
    st.create_uniform("dmi.g_ao", Partition::kFeature, Shape{cfg_.relations, d, d}, rng, -0.2, 0.2);
    st.create_uniform("dmi.att_a", Partition::kFeature, Shape{1, corr}, rng, -0.2, 0.2);
    st.create_uniform("dmi.att_o", Partition::kFeature, Shape{1, corr}, rng, -0.2, 0.2);
    if (cfg_.memory_zero_init) {
      st.create("dmi.m1_a", Partition::kFeature, Shape{d});
      st.create("dmi.m1_o", Partition::kFeature, Shape{d});
    } else {
      st.create_uniform("dmi.m1_a", Partition::kFeature, Shape{d}, rng, -0.2, 0.2);
      st.create_uniform("dmi.m1_o", Partition::kFeature, Shape{d}, rng, -0.2, 0.2);
    }
  }

  std::size_t boundary_in = mode_has_dmi(cfg_.mode) ? corr : d;
  std::size_t unified_in = mode_has_dmi(cfg_.mode) ? (cfg_.dmi_concat_hidden ? corr + d : corr) : d;
  create_lstm(st, rng, "lstm_u", unified_in, cfg_.hidden_unified / 2);

  st.create_uniform("head_boundary.w", Partition::kWordPredictor, Shape{kNumBoundaryTags, boundary_in},
                    rng, -0.2, 0.2);
  st.create("head_boundary.b", Partition::kWordPredictor, Shape{kNumBoundaryTags});
  st.create_uniform("head_unified.w", Partition::kWordPredictor, Shape{kNumUnifiedTags, cfg_.hidden_unified},
                    rng, -0.2, 0.2);
  st.create("head_unified.b", Partition::kWordPredictor, Shape{kNumUnifiedTags});
  if (mode_has_dmi(cfg_.mode)) {
    st.create_uniform("head_opinion.w", Partition::kWordPredictor, Shape{2, corr}, rng, -0.2, 0.2);
    st.create("head_opinion.b", Partition::kWordPredictor, Shape{2});
  }
  if (mode_adversarial(cfg_.mode)) {
    std::size_t disc_in = mode_align_site(cfg_.mode) == AlignSite::kHigh ? cfg_.hidden_unified : corr;
    st.create_uniform("disc.w", Partition::kDiscriminator, Shape{2, disc_in}, rng, -0.2, 0.2);
    st.create("disc.b", Partition::kDiscriminator, Shape{2});
  }
}

void Model::wire_refs() {
  ParamStore& st = *store_;
  embed_table_ = &st.at("embed.table");
  wire_lstm(st, "lstm_b", cfg_.emb_dim, cfg_.hidden_boundary / 2, lstm_b_);
  std::size_t corr = cfg_.correlation_dim();
  std::size_t unified_in = mode_has_dmi(cfg_.mode)
                               ? (cfg_.dmi_concat_hidden ? corr + cfg_.hidden_boundary : corr)
                               : cfg_.hidden_boundary;
  wire_lstm(st, "lstm_u", unified_in, cfg_.hidden_unified / 2, lstm_u_);
  if (mode_has_dmi(cfg_.mode)) {
    dmi_.w_a = &st.at("dmi.w_a");
    dmi_.b_a = &st.at("dmi.b_a");
    dmi_.w_o = &st.at("dmi.w_o");
    dmi_.b_o = &st.at("dmi.b_o");
    dmi_.g_a = &st.at("dmi.g_a");
    dmi_.g_o = &st.at("dmi.g_o");
    dmi_.g_ao = &st.at("dmi.g_ao");
    dmi_.att_a = &st.at("dmi.att_a");
    dmi_.att_o = &st.at("dmi.att_o");
    dmi_.m_init_a = &st.at("dmi.m1_a");
    dmi_.m_init_o = &st.at("dmi.m1_o");
    head_opinion_w_ = &st.at("head_opinion.w");
    head_opinion_b_ = &st.at("head_opinion.b");
  }
  head_boundary_w_ = &st.at("head_boundary.w");
  head_boundary_b_ = &st.at("head_boundary.b");
  head_unified_w_ = &st.at("head_unified.w");
  head_unified_b_ = &st.at("head_unified.b");
  if (mode_adversarial(cfg_.mode)) {
    disc_w_ = &st.at("disc.w");
    disc_b_ = &st.at("disc.b");
  }
}

Node Model::embed_token(Graph& g, const std::string& token) const {
  std::size_t row = vocab_.index_of(token);
  if (cfg_.finetune_embeddings) return g.select_row(g.param(*embed_table_), row);
  // frozen: plain constant, cheaper than dragging the table into the graph
  std::size_t dim = cfg_.emb_dim;
  Array e(dtype(), Shape{dim});
  dispatch_dtype(dtype(), [&]<typename T>() {
    const T* src = embed_table_->value.data<T>() + row * dim;
    T* dst = e.data<T>();
    for (std::size_t i = 0; i < dim; ++i) dst[i] = src[i];
  });
  return g.input(std::move(e));
}

SentenceForward Model::forward(Graph& g, const Sentence& s, const ForwardOptions& opt) const {
  if (s.tokens.empty()) throw std::invalid_argument("forward: empty sentence");
  const std::size_t length = s.tokens.size();
  const bool with_dmi = mode_has_dmi(cfg_.mode);
  const bool adversarial = mode_adversarial(cfg_.mode) && opt.domain;
  const AlignSite align = mode_align_site(cfg_.mode);

  SentenceForward out;
  std::vector<Node> embedded(length);
  for (std::size_t i = 0; i < length; ++i)
    embedded[i] = g.dropout(embed_token(g, s.tokens[i]), cfg_.dropout);

  std::vector<Node> hidden_b = bilstm(g, lstm_b_, embedded);

  std::vector<Node> feats_a, feats_o;
  if (with_dmi) {
    DmiRun dmi = run_dmi(g, hidden_b, dmi_, cfg_.hops, cfg_.dropout);
    for (const DmiHop& hop : dmi.hops) {
      out.alpha_a.push_back(hop.alpha_a);
      out.alpha_o.push_back(hop.alpha_o);
    }
    out.alpha_a_final = dmi.final_hop().alpha_a;
    feats_a = dmi.final_hop().r_a;
    feats_o = dmi.final_hop().r_o;
  } else {
    feats_a = hidden_b;
  }

  const bool need_upper = opt.boundary_unified || (adversarial && align == AlignSite::kHigh);

  std::vector<Node> hidden_u_dropped;
  if (need_upper) {
    std::vector<Node> upper_in(length);
    for (std::size_t i = 0; i < length; ++i)
      upper_in[i] = (with_dmi && cfg_.dmi_concat_hidden) ? g.concat({feats_a[i], hidden_b[i]})
                                                         : feats_a[i];
    std::vector<Node> hidden_u = bilstm(g, lstm_u_, upper_in);
    hidden_u_dropped.resize(length);
    for (std::size_t i = 0; i < length; ++i)
      hidden_u_dropped[i] = g.dropout(hidden_u[i], cfg_.dropout);
  }

  if (opt.boundary_unified) {
    Node wb = g.param(*head_boundary_w_), bb = g.param(*head_boundary_b_);
    Node wu = g.param(*head_unified_w_), bu = g.param(*head_unified_b_);
    for (std::size_t i = 0; i < length; ++i) {
      out.z_boundary.push_back(g.softmax(g.add(g.matvec(wb, feats_a[i]), bb)));
      out.z_unified.push_back(g.softmax(g.add(g.matvec(wu, hidden_u_dropped[i]), bu)));
    }
  }

  if (opt.opinion && with_dmi) {
    Node wo = g.param(*head_opinion_w_), bo = g.param(*head_opinion_b_);
    for (std::size_t i = 0; i < length; ++i)
      out.z_opinion.push_back(g.softmax(g.add(g.matvec(wo, feats_o[i]), bo)));
  }

  if (adversarial) {
    Node wd = g.param(*disc_w_), bd = g.param(*disc_b_);
    for (std::size_t i = 0; i < length; ++i) {
      Node feat = align == AlignSite::kHigh ? hidden_u_dropped[i] : feats_a[i];
      out.z_domain.push_back(g.softmax(g.add(g.matvec(wd, g.grad_reverse(feat, cfg_.lambda)), bd)));
    }
  }
  return out;
}

std::size_t argmax_lowest(const Array& probs) {
  std::size_t best = 0;
  double best_v = probs.at(0);
  for (std::size_t i = 1; i < probs.numel(); ++i)
    if (probs.at(i) > best_v) {
      best_v = probs.at(i);
      best = i;
    }
  return best;
}

Model::Prediction Model::predict_all(const Sentence& s) const {
  Graph g(dtype());
  auto f = forward(g, s, ForwardOptions{});
  Prediction out;
  out.unified.reserve(s.tokens.size());
  out.boundary.reserve(s.tokens.size());
  for (const Node& z : f.z_unified)
    out.unified.push_back(static_cast<UnifiedTag>(argmax_lowest(g.value(z))));
  for (const Node& z : f.z_boundary)
    out.boundary.push_back(static_cast<BoundaryTag>(argmax_lowest(g.value(z))));
  return out;
}

std::vector<UnifiedTag> Model::predict(const Sentence& s) const { return predict_all(s).unified; }

std::vector<BoundaryTag> Model::predict_boundary(const Sentence& s) const {
  return predict_all(s).boundary;
}

Model::Attention Model::inspect(const Sentence& s) const {
  Graph g(dtype());
  auto f = forward(g, s, ForwardOptions{});
  Attention att;
  for (const Node& a : f.alpha_a) att.alpha_a.push_back(g.value(a).to_vector());
  for (const Node& a : f.alpha_o) att.alpha_o.push_back(g.value(a).to_vector());
  for (const Node& z : f.z_unified) att.predicted.push_back(static_cast<UnifiedTag>(argmax_lowest(g.value(z))));
  return att;
}

}  // namespace crosstag
