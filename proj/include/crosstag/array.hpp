#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace crosstag {

// Training runs in 32-bit, gradient checks and most tests in 64-bit.
enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

const char* dtype_name(Dtype dt);
std::size_t dtype_size(Dtype dt);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major array; the scalar type is fixed at construction.
class Array {
 public:
  Array() = default;
  Array(Dtype dtype, Shape shape);  // zero-filled
  static Array scalar(Dtype dtype, double v);
  static Array from(Dtype dtype, Shape shape, const std::vector<double>& vals);

  Dtype dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return numel_; }
  bool empty() const { return numel_ == 0; }

  template <typename T>
  T* data();
  template <typename T>
  const T* data() const;

  // Element access through double; fine off the hot path.
  double at(std::size_t i) const;
  void set(std::size_t i, double v);
  void fill(double v);
  bool all_finite() const;

  std::vector<double> to_vector() const;
  bool same_values(const Array& other) const;  // bitwise on the stored scalars

 private:
  Dtype dtype_ = Dtype::F64;
  Shape shape_;
  std::size_t numel_ = 0;
  std::vector<float> f32_;
  std::vector<double> f64_;
};

template <>
inline float* Array::data<float>() {
  return f32_.data();
}
template <>
inline double* Array::data<double>() {
  return f64_.data();
}
template <>
inline const float* Array::data<float>() const {
  return f32_.data();
}
template <>
inline const double* Array::data<double>() const {
  return f64_.data();
}

/// Invokes fn once with the scalar type matching dt: fn.operator()<float|double>().
template <typename F>
decltype(auto) dispatch_dtype(Dtype dt, F&& fn) {
  if (dt == Dtype::F32) return fn.template operator()<float>();
  return fn.template operator()<double>();
}

}  // namespace crosstag
