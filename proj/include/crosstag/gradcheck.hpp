#pragma once

#include <cstdint>

#include "crosstag/model.hpp"
#include "crosstag/params.hpp"

namespace crosstag {

struct ModelCheckSpec {
  Mode mode = Mode::kAdSal;
  std::size_t length = 3;       // tokens per sentence
  std::size_t emb_dim = 4;
  std::size_t hidden = 4;       // both stacks
  std::size_t relations = 2;    // K
  std::size_t hops = 2;
  double lambda = 0.1;
  double rho = 1.0;
  std::uint64_t seed = 17;
};

struct ModelCheckReport {
  GradCheckResult task;    // L_M (+ rho L_O in DMI modes); plain analytic-vs-numeric
  GradCheckResult domain;  // L_D; the reversed feature path is compared against
                           // -lambda times the unreversed central difference
  double max_rel_err = 0.0;
};

// Finite-difference verification of the whole composed model in 64-bit with
// dropout off, on a deterministic toy batch (one sentence per domain). The
// domain check runs with uniform alignment weights so every feature-path
// gradient is exactly the reversed one.
ModelCheckReport grad_check_model(const ModelCheckSpec& spec);

}  // namespace crosstag
