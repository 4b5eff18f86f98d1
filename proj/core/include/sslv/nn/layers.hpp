#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sslv/tensor.hpp"

namespace sslv::nn {

// All activations are channels-last: batch tensors are (B,T,H,W,C) and the
// fully connected stage uses (B,D). Convolution weights are laid out
// (kt,kh,kw,Cin,Cout) so the innermost loops run over contiguous Cout.

struct Conv3dSpec {
  int kt = 3, kh = 3, kw = 3;
  int in_ch = 1, out_ch = 1;
  int st = 1, sh = 1, sw = 1;
  int pt = 1, ph = 1, pw = 1;

  void validate() const;
  std::vector<int> weight_shape() const { return {kt, kh, kw, in_ch, out_ch}; }
};

// Convolution in the cross-correlation convention (no kernel flip); output
// extent per axis is (in + 2p - k)/s + 1.
Tensor conv3d_forward_batch(const Tensor& input, const Conv3dSpec& spec, const Tensor& weights,
                            const Tensor& bias);
// Returns grad_input; accumulates grad_weights/grad_bias into gw/gb (zeroed here).
Tensor conv3d_backward_batch(const Tensor& grad_out, const Tensor& input, const Conv3dSpec& spec,
                             const Tensor& weights, Tensor* gw, Tensor* gb);

struct MaxPool3dSpec {
  int wt = 2, wh = 2, ww = 2;
  int st = 2, sh = 2, sw = 2;
  int pt = 0, ph = 0, pw = 0;  // padding cells compare as -inf

  void validate() const;
};

// argmax holds, per output element, the flat index of the winning input
// element (first index in scan order wins ties).
Tensor maxpool3d_forward_batch(const Tensor& input, const MaxPool3dSpec& spec,
                               std::vector<int64_t>* argmax);
Tensor maxpool3d_backward_batch(const Tensor& grad_out, const std::vector<int64_t>& argmax,
                                const std::vector<int>& input_shape);

struct BatchNormCache {
  Tensor xhat;
  std::vector<real> inv_std;
};

// Train-mode batch norm over (B,T,H,W) per channel; biased batch variance is
// used both for normalization and for the running-average update, so a
// momentum-1 update makes eval reproduce the train output exactly.
Tensor batchnorm_forward_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                               real eps, real momentum, Tensor* running_mean,
                               Tensor* running_var, BatchNormCache* cache);
Tensor batchnorm_forward_eval(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                              const Tensor& running_mean, const Tensor& running_var, real eps);
Tensor batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                          const Tensor& gamma, Tensor* dgamma, Tensor* dbeta);

// relu(x) = max(0, x); the subgradient at 0 is 0.
Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

// y = x W + b with x (B,D), W (D,K), b (K).
Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                       Tensor* gw, Tensor* gb);

// Mean over (H,W) per (B,T,C): (B,T,H,W,C) -> (B,T,1,1,C).
Tensor spatial_avg_pool_forward(const Tensor& input);
Tensor spatial_avg_pool_backward(const Tensor& grad_out, const std::vector<int>& input_shape);

// (B, rest...) -> (B, prod(rest)); row-major makes this a pure reshape.
Tensor flatten_forward(const Tensor& input);
Tensor flatten_backward(const Tensor& grad_out, const std::vector<int>& input_shape);

// --- single-clip wrappers (batch of one) -----------------------------------

Tensor conv3d_forward(const Tensor& clip_input, const Conv3dSpec& spec, const Tensor& weights,
                      const Tensor& bias);

struct Conv3dGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
Conv3dGrads conv3d_backward(const Tensor& grad_out, const Tensor& clip_input,
                            const Conv3dSpec& spec, const Tensor& weights);

std::pair<Tensor, std::vector<int64_t>> maxpool3d_forward(const Tensor& clip_input,
                                                          const MaxPool3dSpec& spec);
Tensor maxpool3d_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax,
                          const std::vector<int>& clip_input_shape);

}  // namespace sslv::nn
