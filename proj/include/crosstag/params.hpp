#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crosstag/array.hpp"
#include "crosstag/rng.hpp"

namespace crosstag {

// The three-way split the alternating trainer updates: features, word
// predictors (the softmax heads) and the domain discriminator.
enum class Partition : std::uint8_t { kFeature = 0, kWordPredictor = 1, kDiscriminator = 2 };

const char* partition_name(Partition p);

struct Param {
  std::string name;
  Partition partition = Partition::kFeature;
  Array value;
  Array grad;  // same shape, always allocated, zeroed after an optimizer step
  bool grad_touched = false;
  bool frozen = false;  // stored and checkpointed but never updated (frozen embeddings)
};

struct Subset {
  bool feature = false;
  bool word_predictor = false;
  bool discriminator = false;

  bool contains(Partition p) const;
  static Subset all() { return {true, true, true}; }
};

// Name-ordered store; ordering fixes every iteration (init, clip, Adam,
// checkpoint) so runs are reproducible.
class ParamStore {
 public:
  explicit ParamStore(Dtype dtype) : dtype_(dtype) {}

  Param& create(const std::string& name, Partition part, Shape shape);
  Param& create_uniform(const std::string& name, Partition part, Shape shape, Rng& rng,
                        double lo, double hi);
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  Param& at(const std::string& name);

  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  std::vector<Param*> in(const Subset& subset);
  std::size_t count() const { return entries_.size(); }
  Dtype dtype() const { return dtype_; }

  void zero_grads();
  bool values_equal(const ParamStore& other) const;  // bitwise

 private:
  Dtype dtype_;
  std::map<std::string, std::unique_ptr<Param>> entries_;
};

// Scales every grad by max_norm/g when the global l2 norm g exceeds
// max_norm; returns the factor applied (1.0 when under the threshold).
double clip_global_norm(ParamStore& store, double max_norm);

double global_grad_norm(const ParamStore& store);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParamStore& store, AdamConfig cfg);

  // Standard bias-corrected update restricted to the subset; subset grads
  // are zeroed afterwards. One call advances t by exactly 1.
  void step(const Subset& subset);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  struct Slot {
    Array m;
    Array v;
  };
  const std::map<std::string, Slot>& slots() const { return slots_; }
  std::map<std::string, Slot>& slots() { return slots_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  ParamStore& store_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, Slot> slots_;
};

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::vector<GradCheckEntry> per_param;
};

// loss_fn(true) must run a fresh forward+backward, accumulating grads into
// the store; loss_fn(false) only needs the forward value. numeric_scale, when
// given, multiplies the central difference before comparison (used for the
// reversed feature path, where the analytic grad is -lambda times the plain
// one). Use 64-bit params and a deterministic loss (dropout off).
GradCheckResult finite_difference_check(
    const std::function<double(bool)>& loss_fn, ParamStore& store, double eps = 1e-5,
    std::size_t max_coords_per_param = 0,
    const std::function<double(const Param&)>& numeric_scale = {});

}  // namespace crosstag
