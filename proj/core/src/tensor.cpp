#include "sslv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sslv {

size_t checked_element_count(const std::vector<int>& shape) {
  if (shape.empty()) fail(ErrorKind::InvalidShape, "empty shape");
  size_t count = 1;
  for (int d : shape) {
    if (d <= 0) fail(ErrorKind::InvalidShape, "non-positive dimension " + std::to_string(d));
    if (count > std::numeric_limits<size_t>::max() / static_cast<size_t>(d))
      fail(ErrorKind::InvalidShape, "element count overflow");
    count *= static_cast<size_t>(d);
  }
  return count;
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  Tensor t;
  size_t n = checked_element_count(shape);
  t.shape_ = shape;
  t.data_.assign(n, real(0));
  return t;
}

Tensor Tensor::full(const std::vector<int>& shape, real value) {
  Tensor t = zeros(shape);
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::from_data(const std::vector<int>& shape, std::vector<real> data) {
  size_t n = checked_element_count(shape);
  if (data.size() != n)
    fail(ErrorKind::InvalidShape, "data length " + std::to_string(data.size()) +
                                      " does not match shape product " + std::to_string(n));
  Tensor t;
  t.shape_ = shape;
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::rand_uniform(Rng& rng, const std::vector<int>& shape, real lo, real hi) {
  if (!(lo < hi)) fail(ErrorKind::InvalidRange, "uniform range requires lo < hi");
  Tensor t = zeros(shape);
  for (size_t i = 0; i < t.size(); ++i)
    t.data_[i] = static_cast<real>(rng.next_uniform(lo, hi));
  return t;
}

Tensor Tensor::rand_gaussian(Rng& rng, const std::vector<int>& shape, real mean, real sigma) {
  if (!(sigma > 0)) fail(ErrorKind::InvalidRange, "gaussian requires sigma > 0");
  Tensor t = zeros(shape);
  for (size_t i = 0; i < t.size(); ++i)
    t.data_[i] = static_cast<real>(rng.next_gaussian(mean, sigma));
  return t;
}

bool Tensor::all_finite() const {
  for (real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::reshaped(const std::vector<int>& shape) const {
  size_t n = checked_element_count(shape);
  if (n != size())
    fail(ErrorKind::InvalidShape, "reshape changes element count");
  Tensor t;
  t.shape_ = shape;
  t.data_ = data_;
  return t;
}

Tensor elementwise(const Tensor& a, const Tensor& b, EwOp op) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "elementwise operands differ in shape");
  Tensor out = Tensor::zeros(a.shape());
  const real* pa = a.data();
  const real* pb = b.data();
  real* po = out.data();
  size_t n = a.size();
  switch (op) {
    case EwOp::Add:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
      break;
    case EwOp::Sub:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
      break;
    case EwOp::Mul:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
      break;
  }
  return out;
}

Tensor clamp(const Tensor& t, real lo, real hi) {
  Tensor out = t;
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo, hi);
  return out;
}

Tensor scale(const Tensor& t, real factor) {
  Tensor out = t;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return out;
}

real sum(const Tensor& t) {
  real acc = 0;
  for (size_t i = 0; i < t.size(); ++i) acc += t[i];
  return acc;
}

real mean(const Tensor& t) { return sum(t) / static_cast<real>(t.size()); }

real variance(const Tensor& t) {
  real m = mean(t);
  real acc = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    real d = t[i] - m;
    acc += d * d;
  }
  return acc / static_cast<real>(t.size());
}

real min_value(const Tensor& t) {
  real v = t[0];
  for (size_t i = 1; i < t.size(); ++i) v = std::min(v, t[i]);
  return v;
}

real max_value(const Tensor& t) {
  real v = t[0];
  for (size_t i = 1; i < t.size(); ++i) v = std::max(v, t[i]);
  return v;
}

real max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "max_abs_diff operands differ in shape");
  real v = 0;
  for (size_t i = 0; i < a.size(); ++i) v = std::max(v, std::abs(a[i] - b[i]));
  return v;
}

}  // namespace sslv
