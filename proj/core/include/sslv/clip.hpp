#pragma once

#include <string>

#include "sslv/tensor.hpp"

namespace sslv {

// A video clip: Tensor of shape (T, H, W, C) with C == 3, T >= 2 and every
// pixel value in [0, 1].
class ClipTensor {
 public:
  explicit ClipTensor(Tensor t);

  int t() const { return tensor_.dim(0); }
  int h() const { return tensor_.dim(1); }
  int w() const { return tensor_.dim(2); }
  int c() const { return tensor_.dim(3); }

  const Tensor& tensor() const { return tensor_; }
  Tensor& mutable_tensor() { return tensor_; }

  real at(int t, int y, int x, int ch) const {
    return tensor_[frame_offset(t) + static_cast<size_t>((y * w() + x) * c() + ch)];
  }

  size_t frame_offset(int t) const {
    return static_cast<size_t>(t) * frame_size();
  }
  size_t frame_size() const { return static_cast<size_t>(h()) * w() * c(); }

 private:
  Tensor tensor_;
};

// Validates the clip invariants on an arbitrary tensor without constructing.
void check_clip_tensor(const Tensor& t);

// Clip binary format: magic "SSLV", u32 LE version = 1, four u32 LE dims
// (T, H, W, C), then T*H*W*C IEEE-754 LE f32 values in row-major order.
void save_clip(const ClipTensor& clip, const std::string& path);
ClipTensor load_clip(const std::string& path);

// Raw tensor-level io in the same container; checks the format but not the
// [0,1] clip invariants. Full-length videos use this path.
void save_clip_tensor(const Tensor& t, const std::string& path);
Tensor load_clip_tensor(const std::string& path);

}  // namespace sslv
