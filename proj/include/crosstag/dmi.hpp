#pragma once

#include <vector>

#include "crosstag/graph.hpp"
#include "crosstag/params.hpp"

namespace crosstag {

// Multi-hop interaction between the per-word hidden states and the two
// global memories. One parameter set serves every hop and both domains.
struct DmiParamRefs {
  Param* w_a = nullptr;  // residual transform, aspect side: [d, 2d]
  Param* b_a = nullptr;  // [d]
  Param* w_o = nullptr;
  Param* b_o = nullptr;
  Param* g_a = nullptr;   // [K, d, d] aspect-aspect relations
  Param* g_o = nullptr;   // opinion-opinion
  Param* g_ao = nullptr;  // aspect-opinion; the opinion side reads it transposed
  Param* att_a = nullptr;  // [1, 2K]
  Param* att_o = nullptr;
  Param* m_init_a = nullptr;  // [d] hop-1 memories, shared by all sentences
  Param* m_init_o = nullptr;
};

// r = m^T G h~ with h~ = h + ReLU(W [h : m] + b); the K-vector of bilinear
// responses between the global memory and the fused local state.
Node glmi(Graph& g, Node h, Node m, Node w, Node b, Node relations, bool transposed = false);

struct DmiHop {
  std::vector<Node> r_a;  // per word, [2K], after dropout
  std::vector<Node> r_o;
  Node alpha_a;  // [T]
  Node alpha_o;
  Node m_a_next;
  Node m_o_next;
};

struct DmiRun {
  Node m_a_initial;
  Node m_o_initial;
  std::vector<DmiHop> hops;

  const DmiHop& final_hop() const { return hops.back(); }
};

DmiRun run_dmi(Graph& g, const std::vector<Node>& hidden, const DmiParamRefs& p,
               std::size_t hops, double dropout_rate);

}  // namespace crosstag
