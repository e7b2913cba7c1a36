#include "crosstag/dmi.hpp"

namespace crosstag {

namespace {

// h~ = h + ReLU(W [h : m] + b)
Node fuse(Graph& g, Node h, Node m, Node w, Node b) {
  Node joint = g.concat({h, m});
  return g.add(h, g.relu(g.add(g.matvec(w, joint), b)));
}

}  // namespace

Node glmi(Graph& g, Node h, Node m, Node w, Node b, Node relations, bool transposed) {
  return g.bilinear(m, relations, fuse(g, h, m, w, b), transposed);
}

DmiRun run_dmi(Graph& g, const std::vector<Node>& hidden, const DmiParamRefs& p,
               std::size_t hops, double dropout_rate) {
  if (hops == 0) throw std::invalid_argument("run_dmi: need at least one hop");
  const std::size_t length = hidden.size();

  Node w_a = g.param(*p.w_a), b_a = g.param(*p.b_a);
  Node w_o = g.param(*p.w_o), b_o = g.param(*p.b_o);
  Node g_a = g.param(*p.g_a), g_o = g.param(*p.g_o), g_ao = g.param(*p.g_ao);
  Node att_a = g.param(*p.att_a), att_o = g.param(*p.att_o);

  DmiRun run;
  run.m_a_initial = g.param(*p.m_init_a);
  run.m_o_initial = g.param(*p.m_init_o);
  Node m_a = run.m_a_initial;
  Node m_o = run.m_o_initial;

  for (std::size_t l = 0; l < hops; ++l) {
    DmiHop hop;
    std::vector<Node> logit_a(length), logit_o(length);
    for (std::size_t i = 0; i < length; ++i) {
      Node fused_a = fuse(g, hidden[i], m_a, w_a, b_a);
      Node fused_o = fuse(g, hidden[i], m_o, w_o, b_o);
      Node r_a = g.concat({g.bilinear(m_a, g_a, fused_a), g.bilinear(m_o, g_ao, fused_o)});
      Node r_o = g.concat({g.bilinear(m_o, g_o, fused_o), g.bilinear(m_a, g_ao, fused_a, true)});
      r_a = g.dropout(r_a, dropout_rate);
      r_o = g.dropout(r_o, dropout_rate);
      logit_a[i] = g.matvec(att_a, r_a);
      logit_o[i] = g.matvec(att_o, r_o);
      hop.r_a.push_back(r_a);
      hop.r_o.push_back(r_o);
    }
    hop.alpha_a = g.softmax(g.concat(logit_a));
    hop.alpha_o = g.softmax(g.concat(logit_o));

    // m^{l+1} = m^l + sum_i alpha_i h_i (attention over the raw hidden states)
    Node next_a = m_a;
    Node next_o = m_o;
    for (std::size_t i = 0; i < length; ++i) {
      next_a = g.add(next_a, g.smul(g.index(hop.alpha_a, i), hidden[i]));
      next_o = g.add(next_o, g.smul(g.index(hop.alpha_o, i), hidden[i]));
    }
    hop.m_a_next = next_a;
    hop.m_o_next = next_o;
    m_a = next_a;
    m_o = next_o;
    run.hops.push_back(std::move(hop));
  }
  return run;
}

}  // namespace crosstag
