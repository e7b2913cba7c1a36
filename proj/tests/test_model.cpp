#include <doctest.h>

#include "crosstag/gradcheck.hpp"
#include "crosstag/model.hpp"

using namespace crosstag;

namespace {

Model tiny_model(Mode mode, std::size_t seed = 3, double dropout = 0.0) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.emb_dim = 6;
  cfg.hidden_boundary = 8;
  cfg.hidden_unified = 8;
  cfg.relations = 3;
  cfg.hops = 2;
  cfg.dropout = dropout;
  Vocabulary vocab = Vocabulary::from_tokens({"a", "b", "c", "d"});
  Rng oov(99);
  EmbeddingMatrix emb = random_embeddings(vocab, cfg.emb_dim, oov);
  return Model(cfg, std::move(vocab), emb, Dtype::F64, seed);
}

Sentence sent(std::initializer_list<const char*> tokens) {
  Sentence s;
  for (const char* t : tokens) s.tokens.push_back(t);
  return s;
}

}  // namespace

TEST_CASE("all-zero LSTM parameters produce all-zero hidden states") {
  ParamStore store(Dtype::F64);
  Rng rng(1);
  // zero everything: gates sit at 0.5, the candidate at tanh(0) = 0
  for (const char* dir : {"fw", "bw"})
    for (const char* gate : {"i", "f", "c", "o"}) {
      store.create(std::string("l.") + dir + ".w_" + gate, Partition::kFeature, Shape{2, 3});
      store.create(std::string("l.") + dir + ".u_" + gate, Partition::kFeature, Shape{2, 2});
      store.create(std::string("l.") + dir + ".b_" + gate, Partition::kFeature, Shape{2});
    }
  LstmRefs refs;
  refs.input_dim = 3;
  refs.hidden_per_dir = 2;
  LstmDirection* dirs[2] = {&refs.fw, &refs.bw};
  const char* names[2] = {"fw", "bw"};
  const char* gates[4] = {"i", "f", "c", "o"};
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k < 4; ++k) {
      dirs[d]->w[k] = &store.at(std::string("l.") + names[d] + ".w_" + gates[k]);
      dirs[d]->u[k] = &store.at(std::string("l.") + names[d] + ".u_" + gates[k]);
      dirs[d]->b[k] = &store.at(std::string("l.") + names[d] + ".b_" + gates[k]);
    }
  Graph g(Dtype::F64);
  std::vector<Node> xs = {g.input(Shape{3}, {1, 2, 3}), g.input(Shape{3}, {-1, 0, 1})};
  auto hs = bilstm(g, refs, xs);
  REQUIRE(hs.size() == 2);
  for (Node h : hs) {
    CHECK(g.value(h).shape() == Shape{4});
    for (double v : g.value(h).to_vector()) CHECK(v == 0.0);
  }
  (void)rng;
}

TEST_CASE("the backward direction is the forward recurrence on the reversed input") {
  ParamStore store(Dtype::F64);
  Rng rng(7);
  LstmDirection dir;
  const char* gates[4] = {"i", "f", "c", "o"};
  for (int k = 0; k < 4; ++k) {
    dir.w[k] = &store.create_uniform(std::string("w_") + gates[k], Partition::kFeature, Shape{2, 3},
                                     rng, -0.5, 0.5);
    dir.u[k] = &store.create_uniform(std::string("u_") + gates[k], Partition::kFeature, Shape{2, 2},
                                     rng, -0.5, 0.5);
    dir.b[k] = &store.create_uniform(std::string("b_") + gates[k], Partition::kFeature, Shape{2},
                                     rng, -0.5, 0.5);
  }
  std::vector<std::vector<double>> vals = {{0.1, 0.2, 0.3}, {-0.4, 0.5, 0.0}, {0.9, -0.9, 0.2}};

  Graph g(Dtype::F64);
  std::vector<Node> xs, rxs;
  for (const auto& v : vals) xs.push_back(g.input(Shape{3}, v));
  for (auto it = vals.rbegin(); it != vals.rend(); ++it) rxs.push_back(g.input(Shape{3}, *it));

  auto backward_dir = lstm_direction(g, dir, 2, xs, true);
  auto forward_on_reversed = lstm_direction(g, dir, 2, rxs, false);
  for (std::size_t t = 0; t < vals.size(); ++t) {
    auto a = g.value(backward_dir[t]).to_vector();
    auto b = g.value(forward_on_reversed[vals.size() - 1 - t]).to_vector();
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
}

TEST_CASE("T=1 works and yields the concatenated hidden size") {
  Model m = tiny_model(Mode::kBaseSo);
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a"}), {});
  REQUIRE(f.z_boundary.size() == 1);
  CHECK(g.value(f.z_boundary[0]).shape() == Shape{5});
  CHECK(g.value(f.z_unified[0]).shape() == Shape{13});
}

TEST_CASE("heads with zero parameters are uniform; a large bias dominates") {
  Model m = tiny_model(Mode::kBaseSo);
  m.params().at("head_boundary.w").value.fill(0.0);
  m.params().at("head_boundary.b").value.fill(0.0);
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a", "b"}), {});
  for (double v : g.value(f.z_boundary[0]).to_vector()) CHECK(v == doctest::Approx(0.2));

  m.params().at("head_boundary.b").value.set(static_cast<std::size_t>(BoundaryTag::kB), 10.0);
  Graph g2(Dtype::F64);
  auto f2 = m.forward(g2, sent({"a", "b"}), {});
  for (Node z : f2.z_boundary)
    CHECK(argmax_lowest(g2.value(z)) == static_cast<std::size_t>(BoundaryTag::kB));
}

TEST_CASE("head outputs stay on the simplex") {
  Model m = tiny_model(Mode::kAdSal);
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a", "b", "c"}), {false, true, true, true});
  for (const auto& group : {f.z_boundary, f.z_unified, f.z_opinion, f.z_domain})
    for (Node z : group) {
      double sum = 0;
      for (double v : g.value(z).to_vector()) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("argmax ties break toward the lowest tag index") {
  Array probs = Array::from(Dtype::F64, {4}, {0.25, 0.25, 0.25, 0.25});
  CHECK(argmax_lowest(probs) == 0);
  probs.set(2, 0.4);
  probs.set(3, 0.4);
  CHECK(argmax_lowest(probs) == 2);
}

TEST_CASE("BASE_SO wiring exposes only the two task heads") {
  Model m = tiny_model(Mode::kBaseSo);
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a", "b", "c", "d"}), {false, true, true, true});
  CHECK(f.z_boundary.size() == 4);
  CHECK(f.z_unified.size() == 4);
  CHECK(f.z_opinion.empty());
  CHECK(f.z_domain.empty());
  CHECK(f.alpha_a.empty());
  CHECK(!m.params().find("dmi.g_a"));
  CHECK(!m.params().find("disc.w"));
}

TEST_CASE("AD_SAL wiring adds opinion, domain and per-hop attention") {
  Model m = tiny_model(Mode::kAdSal);
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a", "b", "c", "d"}), {false, true, true, true});
  CHECK(f.z_opinion.size() == 4);
  CHECK(f.z_domain.size() == 4);
  CHECK(f.alpha_a.size() == 2);  // one per hop
  CHECK(f.alpha_o.size() == 2);
  CHECK(g.value(f.z_domain[0]).shape() == Shape{2});
  // discriminator reads the 2K correlation vector in low-level alignment
  CHECK(m.params().at("disc.w").value.shape() == Shape{2, 6});
}

TEST_CASE("ADS_SAL aligns the high-level states") {
  Model m = tiny_model(Mode::kAdsSal);
  CHECK(m.params().at("disc.w").value.shape() == Shape{2, 8});  // dim of the upper LSTM
  Graph g(Dtype::F64);
  auto f = m.forward(g, sent({"a", "b"}), {false, false, false, true});
  CHECK(f.z_domain.size() == 2);
}

TEST_CASE("sentences are independent of batch order") {
  Model m = tiny_model(Mode::kAdSal);
  Sentence s1 = sent({"a", "b", "c"});
  Sentence s2 = sent({"d", "b"});
  Graph g1(Dtype::F64);
  auto f1a = m.forward(g1, s1, {});
  auto f1b = m.forward(g1, s2, {});
  Graph g2(Dtype::F64);
  auto f2b = m.forward(g2, s2, {});
  auto f2a = m.forward(g2, s1, {});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(g1.value(f1a.z_unified[i]).same_values(g2.value(f2a.z_unified[i])));
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(g1.value(f1b.z_unified[i]).same_values(g2.value(f2b.z_unified[i])));
}

TEST_CASE("unknown tokens map to the dedicated row at inference") {
  Model m = tiny_model(Mode::kBaseSo);
  auto tags = m.predict(sent({"a", "never-seen"}));
  CHECK(tags.size() == 2);
}

TEST_CASE("unknown mode strings are rejected") {
  CHECK(!mode_from_string("BASE"));
  CHECK(mode_from_string("ADS_SAL") == Mode::kAdsSal);
}

TEST_CASE("full-model gradients pass the finite-difference oracle per mode") {
  for (Mode mode : {Mode::kBaseSo, Mode::kBaseDmi, Mode::kAdSal}) {
    ModelCheckSpec spec;
    spec.mode = mode;
    spec.length = 3;
    spec.emb_dim = 3;
    spec.hidden = 4;
    spec.relations = 2;
    spec.hops = 2;
    auto report = grad_check_model(spec);
    INFO(mode_name(mode));
    CHECK(report.max_rel_err < 1e-4);
  }
}
