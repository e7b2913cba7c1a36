#include "crosstag/params.hpp"

#include <cmath>
#include <stdexcept>

namespace crosstag {

const char* partition_name(Partition p) {
  switch (p) {
    case Partition::kFeature: return "feature";
    case Partition::kWordPredictor: return "word_predictor";
    case Partition::kDiscriminator: return "discriminator";
  }
  return "?";
}

bool Subset::contains(Partition p) const {
  switch (p) {
    case Partition::kFeature: return feature;
    case Partition::kWordPredictor: return word_predictor;
    case Partition::kDiscriminator: return discriminator;
  }
  return false;
}

Param& ParamStore::create(const std::string& name, Partition part, Shape shape) {
  if (entries_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->partition = part;
  p->value = Array(dtype_, shape);
  p->grad = Array(dtype_, std::move(shape));
  Param& ref = *p;
  entries_.emplace(name, std::move(p));
  return ref;
}

Param& ParamStore::create_uniform(const std::string& name, Partition part, Shape shape,
                                  Rng& rng, double lo, double hi) {
  Param& p = create(name, part, std::move(shape));
  for (std::size_t i = 0; i < p.value.numel(); ++i) p.value.set(i, rng.uniform(lo, hi));
  return p;
}

Param* ParamStore::find(const std::string& name) {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.get();
}

const Param* ParamStore::find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.get();
}

Param& ParamStore::at(const std::string& name) {
  Param* p = find(name);
  if (!p) throw std::out_of_range("ParamStore: no parameter named " + name);
  return *p;
}

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  out.reserve(entries_.size());
  for (auto& [k, v] : entries_) out.push_back(v.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(v.get());
  return out;
}

std::vector<Param*> ParamStore::in(const Subset& subset) {
  std::vector<Param*> out;
  for (auto& [k, v] : entries_)
    if (!v->frozen && subset.contains(v->partition)) out.push_back(v.get());
  return out;
}

void ParamStore::zero_grads() {
  for (auto& [k, v] : entries_) {
    v->grad.fill(0.0);
    v->grad_touched = false;
  }
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto it = other.entries_.begin();
  for (auto jt = entries_.begin(); jt != entries_.end(); ++jt, ++it) {
    if (jt->first != it->first || !jt->second->value.same_values(it->second->value)) return false;
  }
  return true;
}

double global_grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const Param* p : store.all())
    for (std::size_t i = 0; i < p->grad.numel(); ++i) {
      double g = p->grad.at(i);
      sq += g * g;
    }
  return std::sqrt(sq);
}

double clip_global_norm(ParamStore& store, double max_norm) {
  double norm = global_grad_norm(store);
  if (norm <= max_norm || norm == 0.0) return 1.0;
  double factor = max_norm / norm;
  for (Param* p : store.all())
    dispatch_dtype(p->grad.dtype(), [&]<typename T>() {
      T f = static_cast<T>(factor);
      T* g = p->grad.data<T>();
      for (std::size_t i = 0; i < p->grad.numel(); ++i) g[i] *= f;
    });
  return factor;
}

Adam::Adam(ParamStore& store, AdamConfig cfg) : store_(store), cfg_(cfg) {
  for (Param* p : store.all())
    if (!p->frozen)
      slots_.emplace(p->name, Slot{Array(p->value.dtype(), p->value.shape()),
                                   Array(p->value.dtype(), p->value.shape())});
}

void Adam::step(const Subset& subset) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : store_.in(subset)) {
    Slot& slot = slots_.at(p->name);
    dispatch_dtype(p->value.dtype(), [&]<typename T>() {
      T* v = p->value.data<T>();
      T* g = p->grad.data<T>();
      T* m1 = slot.m.data<T>();
      T* m2 = slot.v.data<T>();
      const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
      const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
      const T c1 = static_cast<T>(bc1), c2 = static_cast<T>(bc2);
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        m1[i] = b1 * m1[i] + (T(1) - b1) * g[i];
        m2[i] = b2 * m2[i] + (T(1) - b2) * g[i] * g[i];
        T mhat = m1[i] / c1;
        T vhat = m2[i] / c2;
        v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        g[i] = 0;
      }
    });
    p->grad_touched = false;
  }
}

GradCheckResult finite_difference_check(const std::function<double(bool)>& loss_fn,
                                        ParamStore& store, double eps,
                                        std::size_t max_coords_per_param,
                                        const std::function<double(const Param&)>& numeric_scale) {
  store.zero_grads();
  loss_fn(true);
  std::vector<std::vector<double>> analytic;
  auto params = store.all();
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad.to_vector());
  store.zero_grads();

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    if (p->frozen) continue;
    std::size_t n = p->value.numel();
    std::size_t count = (max_coords_per_param == 0) ? n : std::min(n, max_coords_per_param);
    std::size_t stride = n / count + (n % count != 0);
    double scale = numeric_scale ? numeric_scale(*p) : 1.0;
    GradCheckEntry entry{p->name, 0.0};
    for (std::size_t i = 0; i < n; i += stride) {
      double orig = p->value.at(i);
      p->value.set(i, orig + eps);
      double fp = loss_fn(false);
      p->value.set(i, orig - eps);
      double fm = loss_fn(false);
      p->value.set(i, orig);
      double numeric = scale * (fp - fm) / (2.0 * eps);
      double a = analytic[pi][i];
      double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > entry.max_rel_err) entry.max_rel_err = err;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst_param = p->name;
        result.worst_index = i;
      }
    }
    result.per_param.push_back(std::move(entry));
  }
  return result;
}

}  // namespace crosstag
