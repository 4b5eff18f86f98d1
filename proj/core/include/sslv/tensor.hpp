#pragma once

#include <cstddef>
#include <vector>

#include "sslv/common.hpp"
#include "sslv/rng.hpp"

namespace sslv {

// Dense real-valued N-dimensional tensor, contiguous row-major storage with
// the last axis fastest-varying. Clips use the layout (T, H, W, C).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const std::vector<int>& shape);
  static Tensor full(const std::vector<int>& shape, real value);
  static Tensor from_data(const std::vector<int>& shape, std::vector<real> data);
  static Tensor rand_uniform(Rng& rng, const std::vector<int>& shape, real lo, real hi);
  static Tensor rand_gaussian(Rng& rng, const std::vector<int>& shape, real mean, real sigma);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  real* data() { return data_.data(); }
  const real* data() const { return data_.data(); }
  real& operator[](size_t i) { return data_[i]; }
  real operator[](size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor reshaped(const std::vector<int>& shape) const;

 private:
  std::vector<int> shape_;
  std::vector<real> data_;
};

// Validates positivity of every dimension and returns the element count.
size_t checked_element_count(const std::vector<int>& shape);

enum class EwOp { Add, Sub, Mul };

Tensor elementwise(const Tensor& a, const Tensor& b, EwOp op);
inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Mul); }

Tensor clamp(const Tensor& t, real lo, real hi);
Tensor scale(const Tensor& t, real factor);

real sum(const Tensor& t);
real mean(const Tensor& t);
real variance(const Tensor& t);  // population variance
real min_value(const Tensor& t);
real max_value(const Tensor& t);
real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace sslv
