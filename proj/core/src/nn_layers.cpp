#include "sslv/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sslv/parallel.hpp"

namespace sslv::nn {

namespace {

int out_extent(int in, int pad, int k, int stride, const char* axis) {
  int num = in + 2 * pad - k;
  if (num < 0)
    fail(ErrorKind::InvalidShape,
         std::string("window larger than padded input along ") + axis);
  return num / stride + 1;
}

void require_rank5(const Tensor& t, const char* what) {
  if (t.rank() != 5) fail(ErrorKind::ShapeMismatch, std::string(what) + " must be (B,T,H,W,C)");
}

}  // namespace

void Conv3dSpec::validate() const {
  if (kt < 1 || kh < 1 || kw < 1 || in_ch < 1 || out_ch < 1)
    fail(ErrorKind::InvalidParameter, "conv3d kernel and channel counts must be positive");
  if (kt % 2 == 0 || kh % 2 == 0 || kw % 2 == 0)
    fail(ErrorKind::InvalidParameter, "conv3d kernel dims must be odd");
  if (st < 1 || sh < 1 || sw < 1) fail(ErrorKind::InvalidParameter, "conv3d stride must be positive");
  if (pt < 0 || ph < 0 || pw < 0) fail(ErrorKind::InvalidParameter, "conv3d padding must be non-negative");
}

Tensor conv3d_forward_batch(const Tensor& input, const Conv3dSpec& spec, const Tensor& weights,
                            const Tensor& bias) {
  spec.validate();
  require_rank5(input, "conv3d input");
  if (input.dim(4) != spec.in_ch)
    fail(ErrorKind::ShapeMismatch, "conv3d input channels " + std::to_string(input.dim(4)) +
                                       " do not match spec in_ch " + std::to_string(spec.in_ch));
  if (weights.shape() != spec.weight_shape())
    fail(ErrorKind::ShapeMismatch, "conv3d weight shape does not match spec");
  if (bias.shape() != std::vector<int>{spec.out_ch})
    fail(ErrorKind::ShapeMismatch, "conv3d bias shape does not match spec");

  const int B = input.dim(0), Tin = input.dim(1), Hin = input.dim(2), Win = input.dim(3);
  const int Cin = spec.in_ch, Cout = spec.out_ch;
  const int Tout = out_extent(Tin, spec.pt, spec.kt, spec.st, "T");
  const int Hout = out_extent(Hin, spec.ph, spec.kh, spec.sh, "H");
  const int Wout = out_extent(Win, spec.pw, spec.kw, spec.sw, "W");

  Tensor output = Tensor::zeros({B, Tout, Hout, Wout, Cout});
  const real* in = input.data();
  const real* w = weights.data();
  const real* bp = bias.data();
  real* out = output.data();

  const size_t in_item = static_cast<size_t>(Tin) * Hin * Win * Cin;
  const size_t out_item = static_cast<size_t>(Tout) * Hout * Wout * Cout;

  parallel_for(B, [&](int64_t b0, int64_t b1) {
    std::vector<real> acc(static_cast<size_t>(Cout));
    for (int64_t b = b0; b < b1; ++b) {
      const real* ib = in + static_cast<size_t>(b) * in_item;
      real* ob = out + static_cast<size_t>(b) * out_item;
      for (int ot = 0; ot < Tout; ++ot) {
        const int t0 = ot * spec.st - spec.pt;
        for (int oy = 0; oy < Hout; ++oy) {
          const int y0 = oy * spec.sh - spec.ph;
          for (int ox = 0; ox < Wout; ++ox) {
            const int x0 = ox * spec.sw - spec.pw;
            std::copy_n(bp, Cout, acc.data());
            for (int ikt = 0; ikt < spec.kt; ++ikt) {
              const int t = t0 + ikt;
              if (t < 0 || t >= Tin) continue;
              for (int ikh = 0; ikh < spec.kh; ++ikh) {
                const int y = y0 + ikh;
                if (y < 0 || y >= Hin) continue;
                for (int ikw = 0; ikw < spec.kw; ++ikw) {
                  const int x = x0 + ikw;
                  if (x < 0 || x >= Win) continue;
                  const real* ip =
                      ib + ((static_cast<size_t>(t) * Hin + y) * Win + x) * Cin;
                  const real* wp =
                      w + ((static_cast<size_t>(ikt) * spec.kh + ikh) * spec.kw + ikw) *
                              Cin * Cout;
                  for (int ci = 0; ci < Cin; ++ci) {
                    const real v = ip[ci];
                    const real* wrow = wp + static_cast<size_t>(ci) * Cout;
                    for (int co = 0; co < Cout; ++co) acc[static_cast<size_t>(co)] += v * wrow[co];
                  }
                }
              }
            }
            real* op = ob + ((static_cast<size_t>(ot) * Hout + oy) * Wout + ox) * Cout;
            std::copy_n(acc.data(), Cout, op);
          }
        }
      }
    }
  });
  return output;
}

Tensor conv3d_backward_batch(const Tensor& grad_out, const Tensor& input, const Conv3dSpec& spec,
                             const Tensor& weights, Tensor* gw, Tensor* gb) {
  spec.validate();
  require_rank5(input, "conv3d input");
  require_rank5(grad_out, "conv3d grad_out");
  const int B = input.dim(0), Tin = input.dim(1), Hin = input.dim(2), Win = input.dim(3);
  const int Cin = spec.in_ch, Cout = spec.out_ch;
  const int Tout = out_extent(Tin, spec.pt, spec.kt, spec.st, "T");
  const int Hout = out_extent(Hin, spec.ph, spec.kh, spec.sh, "H");
  const int Wout = out_extent(Win, spec.pw, spec.kw, spec.sw, "W");
  if (grad_out.shape() != std::vector<int>{B, Tout, Hout, Wout, Cout})
    fail(ErrorKind::ShapeMismatch, "conv3d grad_out shape does not match the forward output");
  if (weights.shape() != spec.weight_shape())
    fail(ErrorKind::ShapeMismatch, "conv3d weight shape does not match spec");

  Tensor grad_input = Tensor::zeros(input.shape());
  *gw = Tensor::zeros(spec.weight_shape());
  *gb = Tensor::zeros({Cout});

  const real* in = input.data();
  const real* w = weights.data();
  const real* go = grad_out.data();
  real* gi = grad_input.data();
  real* gwp = gw->data();
  real* gbp = gb->data();

  const size_t in_item = static_cast<size_t>(Tin) * Hin * Win * Cin;
  const size_t out_item = static_cast<size_t>(Tout) * Hout * Wout * Cout;

  // Pass 1: grad_input, independent per batch item.
  parallel_for(B, [&](int64_t b0, int64_t b1) {
    for (int64_t b = b0; b < b1; ++b) {
      const real* gob = go + static_cast<size_t>(b) * out_item;
      real* gib = gi + static_cast<size_t>(b) * in_item;
      for (int ot = 0; ot < Tout; ++ot) {
        const int t0 = ot * spec.st - spec.pt;
        for (int oy = 0; oy < Hout; ++oy) {
          const int y0 = oy * spec.sh - spec.ph;
          for (int ox = 0; ox < Wout; ++ox) {
            const int x0 = ox * spec.sw - spec.pw;
            const real* gop = gob + ((static_cast<size_t>(ot) * Hout + oy) * Wout + ox) * Cout;
            for (int ikt = 0; ikt < spec.kt; ++ikt) {
              const int t = t0 + ikt;
              if (t < 0 || t >= Tin) continue;
              for (int ikh = 0; ikh < spec.kh; ++ikh) {
                const int y = y0 + ikh;
                if (y < 0 || y >= Hin) continue;
                for (int ikw = 0; ikw < spec.kw; ++ikw) {
                  const int x = x0 + ikw;
                  if (x < 0 || x >= Win) continue;
                  real* gip = gib + ((static_cast<size_t>(t) * Hin + y) * Win + x) * Cin;
                  const real* wp =
                      w + ((static_cast<size_t>(ikt) * spec.kh + ikh) * spec.kw + ikw) *
                              Cin * Cout;
                  for (int ci = 0; ci < Cin; ++ci) {
                    const real* wrow = wp + static_cast<size_t>(ci) * Cout;
                    real acc = 0;
                    for (int co = 0; co < Cout; ++co) acc += gop[co] * wrow[co];
                    gip[ci] += acc;
                  }
                }
              }
            }
          }
        }
      }
    }
  });

  // Pass 2: grad_weights and grad_bias, partitioned over output channels so
  // every element is accumulated by one worker in fixed (b, position) order.
  parallel_for(Cout, [&](int64_t c0, int64_t c1) {
    for (int b = 0; b < B; ++b) {
      const real* ib = in + static_cast<size_t>(b) * in_item;
      const real* gob = go + static_cast<size_t>(b) * out_item;
      for (int ot = 0; ot < Tout; ++ot) {
        const int t0 = ot * spec.st - spec.pt;
        for (int oy = 0; oy < Hout; ++oy) {
          const int y0 = oy * spec.sh - spec.ph;
          for (int ox = 0; ox < Wout; ++ox) {
            const int x0 = ox * spec.sw - spec.pw;
            const real* gop = gob + ((static_cast<size_t>(ot) * Hout + oy) * Wout + ox) * Cout;
            for (int64_t co = c0; co < c1; ++co) gbp[co] += gop[co];
            for (int ikt = 0; ikt < spec.kt; ++ikt) {
              const int t = t0 + ikt;
              if (t < 0 || t >= Tin) continue;
              for (int ikh = 0; ikh < spec.kh; ++ikh) {
                const int y = y0 + ikh;
                if (y < 0 || y >= Hin) continue;
                for (int ikw = 0; ikw < spec.kw; ++ikw) {
                  const int x = x0 + ikw;
                  if (x < 0 || x >= Win) continue;
                  const real* ip = ib + ((static_cast<size_t>(t) * Hin + y) * Win + x) * Cin;
                  real* gwrow =
                      gwp + ((static_cast<size_t>(ikt) * spec.kh + ikh) * spec.kw + ikw) *
                                Cin * Cout;
                  for (int ci = 0; ci < Cin; ++ci) {
                    const real v = ip[ci];
                    real* gwr = gwrow + static_cast<size_t>(ci) * Cout;
                    for (int64_t co = c0; co < c1; ++co) gwr[co] += v * gop[co];
                  }
                }
              }
            }
          }
        }
      }
    }
  });
  return grad_input;
}

void MaxPool3dSpec::validate() const {
  if (wt < 1 || wh < 1 || ww < 1) fail(ErrorKind::InvalidParameter, "pool window must be positive");
  if (st < 1 || sh < 1 || sw < 1) fail(ErrorKind::InvalidParameter, "pool stride must be positive");
  if (pt < 0 || ph < 0 || pw < 0) fail(ErrorKind::InvalidParameter, "pool padding must be non-negative");
}

Tensor maxpool3d_forward_batch(const Tensor& input, const MaxPool3dSpec& spec,
                               std::vector<int64_t>* argmax) {
  spec.validate();
  require_rank5(input, "maxpool3d input");
  const int B = input.dim(0), Tin = input.dim(1), Hin = input.dim(2), Win = input.dim(3);
  const int C = input.dim(4);
  const int Tout = out_extent(Tin, spec.pt, spec.wt, spec.st, "T");
  const int Hout = out_extent(Hin, spec.ph, spec.wh, spec.sh, "H");
  const int Wout = out_extent(Win, spec.pw, spec.ww, spec.sw, "W");

  Tensor output = Tensor::zeros({B, Tout, Hout, Wout, C});
  argmax->assign(output.size(), -1);
  const real* in = input.data();
  real* out = output.data();
  int64_t* am = argmax->data();

  const size_t in_item = static_cast<size_t>(Tin) * Hin * Win * C;
  const size_t out_item = static_cast<size_t>(Tout) * Hout * Wout * C;

  parallel_for(B, [&](int64_t b0, int64_t b1) {
    for (int64_t b = b0; b < b1; ++b) {
      const real* ib = in + static_cast<size_t>(b) * in_item;
      real* ob = out + static_cast<size_t>(b) * out_item;
      int64_t* ab = am + static_cast<size_t>(b) * out_item;
      for (int ot = 0; ot < Tout; ++ot) {
        const int t0 = ot * spec.st - spec.pt;
        for (int oy = 0; oy < Hout; ++oy) {
          const int y0 = oy * spec.sh - spec.ph;
          for (int ox = 0; ox < Wout; ++ox) {
            const int x0 = ox * spec.sw - spec.pw;
            const size_t obase = ((static_cast<size_t>(ot) * Hout + oy) * Wout + ox) * C;
            for (int c = 0; c < C; ++c) {
              real best = -std::numeric_limits<real>::infinity();
              int64_t best_idx = -1;
              for (int ikt = 0; ikt < spec.wt; ++ikt) {
                const int t = t0 + ikt;
                if (t < 0 || t >= Tin) continue;
                for (int ikh = 0; ikh < spec.wh; ++ikh) {
                  const int y = y0 + ikh;
                  if (y < 0 || y >= Hin) continue;
                  for (int ikw = 0; ikw < spec.ww; ++ikw) {
                    const int x = x0 + ikw;
                    if (x < 0 || x >= Win) continue;
                    const int64_t idx =
                        ((static_cast<int64_t>(t) * Hin + y) * Win + x) * C + c;
                    const real v = ib[idx];
                    if (v > best) {  // strict: first index in scan order wins ties
                      best = v;
                      best_idx = idx;
                    }
                  }
                }
              }
              ob[obase + static_cast<size_t>(c)] = best;
              ab[obase + static_cast<size_t>(c)] =
                  best_idx + static_cast<int64_t>(b) * static_cast<int64_t>(in_item);
            }
          }
        }
      }
    }
  });
  return output;
}

Tensor maxpool3d_backward_batch(const Tensor& grad_out, const std::vector<int64_t>& argmax,
                                const std::vector<int>& input_shape) {
  if (grad_out.size() != argmax.size())
    fail(ErrorKind::ShapeMismatch, "maxpool3d grad_out does not match the cached argmax");
  Tensor grad_input = Tensor::zeros(input_shape);
  real* gi = grad_input.data();
  const real* go = grad_out.data();
  for (size_t i = 0; i < argmax.size(); ++i) gi[argmax[i]] += go[i];
  return grad_input;
}

Tensor batchnorm_forward_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                               real eps, real momentum, Tensor* running_mean,
                               Tensor* running_var, BatchNormCache* cache) {
  require_rank5(input, "batchnorm input");
  const int B = input.dim(0);
  if (B < 2) fail(ErrorKind::InvalidBatch, "batchnorm train mode requires batch size >= 2");
  const int C = input.dim(4);
  if (gamma.shape() != std::vector<int>{C} || beta.shape() != std::vector<int>{C})
    fail(ErrorKind::ShapeMismatch, "batchnorm gamma/beta must have one entry per channel");
  const size_t n = input.size() / static_cast<size_t>(C);

  std::vector<real> mean(static_cast<size_t>(C), 0), var(static_cast<size_t>(C), 0);
  const real* in = input.data();
  for (size_t i = 0; i < n; ++i) {
    const real* p = in + i * static_cast<size_t>(C);
    for (int c = 0; c < C; ++c) mean[static_cast<size_t>(c)] += p[c];
  }
  for (int c = 0; c < C; ++c) mean[static_cast<size_t>(c)] /= static_cast<real>(n);
  for (size_t i = 0; i < n; ++i) {
    const real* p = in + i * static_cast<size_t>(C);
    for (int c = 0; c < C; ++c) {
      real d = p[c] - mean[static_cast<size_t>(c)];
      var[static_cast<size_t>(c)] += d * d;
    }
  }
  for (int c = 0; c < C; ++c) var[static_cast<size_t>(c)] /= static_cast<real>(n);

  cache->inv_std.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c)
    cache->inv_std[static_cast<size_t>(c)] =
        real(1) / std::sqrt(var[static_cast<size_t>(c)] + eps);

  cache->xhat = Tensor::zeros(input.shape());
  Tensor output = Tensor::zeros(input.shape());
  real* xh = cache->xhat.data();
  real* out = output.data();
  const real* g = gamma.data();
  const real* bt = beta.data();
  parallel_for(static_cast<int64_t>(n), [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const real* p = in + static_cast<size_t>(i) * C;
      real* xp = xh + static_cast<size_t>(i) * C;
      real* op = out + static_cast<size_t>(i) * C;
      for (int c = 0; c < C; ++c) {
        real v = (p[c] - mean[static_cast<size_t>(c)]) * cache->inv_std[static_cast<size_t>(c)];
        xp[c] = v;
        op[c] = g[c] * v + bt[c];
      }
    }
  });

  real* rm = running_mean->data();
  real* rv = running_var->data();
  for (int c = 0; c < C; ++c) {
    rm[c] = (real(1) - momentum) * rm[c] + momentum * mean[static_cast<size_t>(c)];
    rv[c] = (real(1) - momentum) * rv[c] + momentum * var[static_cast<size_t>(c)];
  }
  return output;
}

Tensor batchnorm_forward_eval(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                              const Tensor& running_mean, const Tensor& running_var, real eps) {
  require_rank5(input, "batchnorm input");
  const int C = input.dim(4);
  const size_t n = input.size() / static_cast<size_t>(C);
  Tensor output = Tensor::zeros(input.shape());
  const real* in = input.data();
  real* out = output.data();
  const real* g = gamma.data();
  const real* bt = beta.data();
  const real* rm = running_mean.data();
  const real* rv = running_var.data();
  std::vector<real> scale(static_cast<size_t>(C)), shift(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    scale[static_cast<size_t>(c)] = g[c] / std::sqrt(rv[c] + eps);
    shift[static_cast<size_t>(c)] = bt[c] - scale[static_cast<size_t>(c)] * rm[c];
  }
  parallel_for(static_cast<int64_t>(n), [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const real* p = in + static_cast<size_t>(i) * C;
      real* op = out + static_cast<size_t>(i) * C;
      for (int c = 0; c < C; ++c)
        op[c] = scale[static_cast<size_t>(c)] * p[c] + shift[static_cast<size_t>(c)];
    }
  });
  return output;
}

Tensor batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                          const Tensor& gamma, Tensor* dgamma, Tensor* dbeta) {
  if (!grad_out.same_shape(cache.xhat))
    fail(ErrorKind::ShapeMismatch, "batchnorm grad_out does not match the cached activation");
  const int C = grad_out.dim(4);
  const size_t n = grad_out.size() / static_cast<size_t>(C);
  *dgamma = Tensor::zeros({C});
  *dbeta = Tensor::zeros({C});
  const real* go = grad_out.data();
  const real* xh = cache.xhat.data();
  real* dg = dgamma->data();
  real* db = dbeta->data();
  for (size_t i = 0; i < n; ++i) {
    const real* gp = go + i * static_cast<size_t>(C);
    const real* xp = xh + i * static_cast<size_t>(C);
    for (int c = 0; c < C; ++c) {
      db[c] += gp[c];
      dg[c] += gp[c] * xp[c];
    }
  }
  Tensor grad_input = Tensor::zeros(grad_out.shape());
  real* gi = grad_input.data();
  const real* g = gamma.data();
  const real inv_n = real(1) / static_cast<real>(n);
  parallel_for(static_cast<int64_t>(n), [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const real* gp = go + static_cast<size_t>(i) * C;
      const real* xp = xh + static_cast<size_t>(i) * C;
      real* ip = gi + static_cast<size_t>(i) * C;
      for (int c = 0; c < C; ++c) {
        ip[c] = g[c] * cache.inv_std[static_cast<size_t>(c)] *
                (gp[c] - db[c] * inv_n - xp[c] * dg[c] * inv_n);
      }
    }
  });
  return grad_input;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  real* p = out.data();
  for (size_t i = 0; i < out.size(); ++i) p[i] = p[i] > real(0) ? p[i] : real(0);
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
  if (!grad_out.same_shape(input))
    fail(ErrorKind::ShapeMismatch, "relu grad_out does not match the cached input");
  Tensor out = grad_out;
  real* p = out.data();
  const real* in = input.data();
  for (size_t i = 0; i < out.size(); ++i)
    if (!(in[i] > real(0))) p[i] = real(0);
  return out;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2) fail(ErrorKind::ShapeMismatch, "linear input must be (B,D)");
  const int B = input.dim(0), D = input.dim(1);
  if (weights.rank() != 2 || weights.dim(0) != D)
    fail(ErrorKind::ShapeMismatch, "linear weight shape does not match input dim");
  const int K = weights.dim(1);
  if (bias.shape() != std::vector<int>{K})
    fail(ErrorKind::ShapeMismatch, "linear bias shape does not match output dim");
  Tensor out = Tensor::zeros({B, K});
  const real* in = input.data();
  const real* w = weights.data();
  const real* bp = bias.data();
  real* op = out.data();
  parallel_for(B, [&](int64_t b0, int64_t b1) {
    for (int64_t b = b0; b < b1; ++b) {
      real* orow = op + static_cast<size_t>(b) * K;
      std::copy_n(bp, K, orow);
      const real* irow = in + static_cast<size_t>(b) * D;
      for (int d = 0; d < D; ++d) {
        const real v = irow[d];
        const real* wrow = w + static_cast<size_t>(d) * K;
        for (int k = 0; k < K; ++k) orow[k] += v * wrow[k];
      }
    }
  });
  return out;
}

Tensor linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                       Tensor* gw, Tensor* gb) {
  const int B = input.dim(0), D = input.dim(1);
  const int K = weights.dim(1);
  if (grad_out.shape() != std::vector<int>{B, K})
    fail(ErrorKind::ShapeMismatch, "linear grad_out shape does not match the forward output");
  *gw = Tensor::zeros({D, K});
  *gb = Tensor::zeros({K});
  Tensor grad_input = Tensor::zeros({B, D});
  const real* go = grad_out.data();
  const real* in = input.data();
  const real* w = weights.data();
  real* gwp = gw->data();
  real* gbp = gb->data();
  real* gi = grad_input.data();
  for (int b = 0; b < B; ++b) {
    const real* grow = go + static_cast<size_t>(b) * K;
    const real* irow = in + static_cast<size_t>(b) * D;
    real* girow = gi + static_cast<size_t>(b) * D;
    for (int k = 0; k < K; ++k) gbp[k] += grow[k];
    for (int d = 0; d < D; ++d) {
      const real v = irow[d];
      real* gwrow = gwp + static_cast<size_t>(d) * K;
      const real* wrow = w + static_cast<size_t>(d) * K;
      real acc = 0;
      for (int k = 0; k < K; ++k) {
        gwrow[k] += v * grow[k];
        acc += wrow[k] * grow[k];
      }
      girow[d] = acc;
    }
  }
  return grad_input;
}

Tensor spatial_avg_pool_forward(const Tensor& input) {
  require_rank5(input, "spatial_avg_pool input");
  const int B = input.dim(0), T = input.dim(1), H = input.dim(2), W = input.dim(3),
            C = input.dim(4);
  Tensor out = Tensor::zeros({B, T, 1, 1, C});
  const real* in = input.data();
  real* op = out.data();
  const real inv = real(1) / static_cast<real>(H * W);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      const real* base =
          in + ((static_cast<size_t>(b) * T + t) * static_cast<size_t>(H) * W) * C;
      real* orow = op + (static_cast<size_t>(b) * T + t) * C;
      for (size_t i = 0; i < static_cast<size_t>(H) * W; ++i) {
        const real* p = base + i * C;
        for (int c = 0; c < C; ++c) orow[c] += p[c];
      }
      for (int c = 0; c < C; ++c) orow[c] *= inv;
    }
  }
  return out;
}

Tensor spatial_avg_pool_backward(const Tensor& grad_out, const std::vector<int>& input_shape) {
  const int B = input_shape[0], T = input_shape[1], H = input_shape[2], W = input_shape[3],
            C = input_shape[4];
  if (grad_out.shape() != std::vector<int>{B, T, 1, 1, C})
    fail(ErrorKind::ShapeMismatch, "spatial_avg_pool grad_out shape mismatch");
  Tensor grad_input = Tensor::zeros(input_shape);
  const real* go = grad_out.data();
  real* gi = grad_input.data();
  const real inv = real(1) / static_cast<real>(H * W);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      const real* grow = go + (static_cast<size_t>(b) * T + t) * C;
      real* base = gi + ((static_cast<size_t>(b) * T + t) * static_cast<size_t>(H) * W) * C;
      for (size_t i = 0; i < static_cast<size_t>(H) * W; ++i) {
        real* p = base + i * C;
        for (int c = 0; c < C; ++c) p[c] = grow[c] * inv;
      }
    }
  }
  return grad_input;
}

Tensor flatten_forward(const Tensor& input) {
  if (input.rank() < 2) fail(ErrorKind::ShapeMismatch, "flatten input must have a batch axis");
  int rest = 1;
  for (int axis = 1; axis < input.rank(); ++axis) rest *= input.dim(axis);
  return input.reshaped({input.dim(0), rest});
}

Tensor flatten_backward(const Tensor& grad_out, const std::vector<int>& input_shape) {
  return grad_out.reshaped(input_shape);
}

// --- single-clip wrappers ----------------------------------------------------

namespace {
Tensor with_batch_axis(const Tensor& clip) {
  std::vector<int> shape = clip.shape();
  shape.insert(shape.begin(), 1);
  return clip.reshaped(shape);
}

Tensor drop_batch_axis(const Tensor& batched) {
  std::vector<int> shape(batched.shape().begin() + 1, batched.shape().end());
  return batched.reshaped(shape);
}
}  // namespace

Tensor conv3d_forward(const Tensor& clip_input, const Conv3dSpec& spec, const Tensor& weights,
                      const Tensor& bias) {
  if (clip_input.rank() != 4) fail(ErrorKind::ShapeMismatch, "conv3d clip input must be (T,H,W,C)");
  return drop_batch_axis(conv3d_forward_batch(with_batch_axis(clip_input), spec, weights, bias));
}

Conv3dGrads conv3d_backward(const Tensor& grad_out, const Tensor& clip_input,
                            const Conv3dSpec& spec, const Tensor& weights) {
  Conv3dGrads grads;
  Tensor gi = conv3d_backward_batch(with_batch_axis(grad_out), with_batch_axis(clip_input), spec,
                                    weights, &grads.weights, &grads.bias);
  grads.input = drop_batch_axis(gi);
  return grads;
}

std::pair<Tensor, std::vector<int64_t>> maxpool3d_forward(const Tensor& clip_input,
                                                          const MaxPool3dSpec& spec) {
  if (clip_input.rank() != 4)
    fail(ErrorKind::ShapeMismatch, "maxpool3d clip input must be (T,H,W,C)");
  std::vector<int64_t> argmax;
  Tensor out = maxpool3d_forward_batch(with_batch_axis(clip_input), spec, &argmax);
  return {drop_batch_axis(out), std::move(argmax)};
}

Tensor maxpool3d_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax,
                          const std::vector<int>& clip_input_shape) {
  std::vector<int> shape = clip_input_shape;
  shape.insert(shape.begin(), 1);
  return drop_batch_axis(maxpool3d_backward_batch(with_batch_axis(grad_out), argmax, shape));
}

}  // namespace sslv::nn
