#include "crosstag/array.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crosstag {

const char* dtype_name(Dtype dt) { return dt == Dtype::F32 ? "f32" : "f64"; }

std::size_t dtype_size(Dtype dt) { return dt == Dtype::F32 ? 4 : 8; }

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Array::Array(Dtype dtype, Shape shape)
    : dtype_(dtype), shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  if (dtype_ == Dtype::F32)
    f32_.assign(numel_, 0.0f);
  else
    f64_.assign(numel_, 0.0);
}

Array Array::scalar(Dtype dtype, double v) {
  Array a(dtype, Shape{1});
  a.set(0, v);
  return a;
}

Array Array::from(Dtype dtype, Shape shape, const std::vector<double>& vals) {
  Array a(dtype, std::move(shape));
  if (vals.size() != a.numel_) throw std::invalid_argument("Array::from: value count does not match shape");
  for (std::size_t i = 0; i < vals.size(); ++i) a.set(i, vals[i]);
  return a;
}

double Array::at(std::size_t i) const {
  return dtype_ == Dtype::F32 ? static_cast<double>(f32_[i]) : f64_[i];
}

void Array::set(std::size_t i, double v) {
  if (dtype_ == Dtype::F32)
    f32_[i] = static_cast<float>(v);
  else
    f64_[i] = v;
}

void Array::fill(double v) {
  for (std::size_t i = 0; i < numel_; ++i) set(i, v);
}

bool Array::all_finite() const {
  for (std::size_t i = 0; i < numel_; ++i)
    if (!std::isfinite(at(i))) return false;
  return true;
}

std::vector<double> Array::to_vector() const {
  std::vector<double> out(numel_);
  for (std::size_t i = 0; i < numel_; ++i) out[i] = at(i);
  return out;
}

bool Array::same_values(const Array& other) const {
  if (dtype_ != other.dtype_ || shape_ != other.shape_) return false;
  if (dtype_ == Dtype::F32) return f32_ == other.f32_;
  return f64_ == other.f64_;
}

}  // namespace crosstag
