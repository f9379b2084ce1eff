// Copyright (c) 2026 The deepstreets Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward and backward kernels for the layers the classifier is built from.
// Backward functions accumulate parameter gradients (+=) and overwrite input
// gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "deepstreets/tensor.hpp"

namespace deepstreets::layers {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMajor<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMajor<T>>;

inline int conv_out_size(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// ---------------------------------------------------------------------------
// Dense convolution (im2col + GEMM). Weight layout [out][in][k][k].

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

template <typename T>
void im2col(const T* x, int c, int h, int w, const ConvGeometry& g, int ho, int wo, T* col) {
  const int k = g.kernel;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + (static_cast<std::size_t>(ci * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? x[(ci * h + iy) * w + ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im(const T* col, int c, int h, int w, const ConvGeometry& g, int ho, int wo, T* dx) {
  const int k = g.kernel;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + (static_cast<std::size_t>(ci * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < w) dx[(ci * h + iy) * w + ix] += row[oy * wo + ox];
          }
        }
      }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, std::span<const T> weight, const ConvGeometry& g) {
  if (x.c != g.in_channels) throw ShapeError("conv2d: input has " + std::to_string(x.c) + " channels, expected " +
                                             std::to_string(g.in_channels));
  const int ho = conv_out_size(x.h, g.kernel, g.stride, g.pad);
  const int wo = conv_out_size(x.w, g.kernel, g.stride, g.pad);
  const int kdim = g.in_channels * g.kernel * g.kernel;
  Tensor<T> y(x.n, g.out_channels, ho, wo);
  std::vector<T> col(static_cast<std::size_t>(kdim) * ho * wo);
  ConstMatMap<T> W(weight.data(), g.out_channels, kdim);
  for (int n = 0; n < x.n; ++n) {
    im2col(x.ptr(n), x.c, x.h, x.w, g, ho, wo, col.data());
    ConstMatMap<T> C(col.data(), kdim, ho * wo);
    MatMap<T> Y(y.ptr(n), g.out_channels, ho * wo);
    Y.noalias() = W * C;
  }
  return y;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, std::span<const T> weight, const ConvGeometry& g,
                          const Tensor<T>& dy, std::span<T> dweight) {
  const int ho = dy.h, wo = dy.w;
  const int kdim = g.in_channels * g.kernel * g.kernel;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  std::vector<T> col(static_cast<std::size_t>(kdim) * ho * wo);
  std::vector<T> dcol(col.size());
  ConstMatMap<T> W(weight.data(), g.out_channels, kdim);
  MatMap<T> dW(dweight.data(), g.out_channels, kdim);
  for (int n = 0; n < x.n; ++n) {
    im2col(x.ptr(n), x.c, x.h, x.w, g, ho, wo, col.data());
    ConstMatMap<T> C(col.data(), kdim, ho * wo);
    ConstMatMap<T> dY(dy.ptr(n), g.out_channels, ho * wo);
    dW.noalias() += dY * C.transpose();
    MatMap<T> dC(dcol.data(), kdim, ho * wo);
    dC.noalias() = W.transpose() * dY;
    col2im(dcol.data(), x.c, x.h, x.w, g, ho, wo, dx.ptr(n));
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Depthwise k x k convolution, stride 1, "same" zero padding. Weight [c][k][k].

template <typename T>
Tensor<T> depthwise_forward(const Tensor<T>& x, std::span<const T> weight, int k) {
  if (weight.size() != static_cast<std::size_t>(x.c) * k * k)
    throw ShapeError("depthwise: kernel does not match " + std::to_string(x.c) + " channels");
  const int p = k / 2;
  Tensor<T> y(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* in = x.ptr(n, c);
      T* out = y.ptr(n, c);
      const T* wk = weight.data() + static_cast<std::size_t>(c) * k * k;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wk[ky * k + kx];
          const int dy = ky - p, dx = kx - p;
          const int y0 = std::max(0, -dy), y1 = std::min(x.h, x.h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(x.w, x.w - dx);
          for (int yy = y0; yy < y1; ++yy) {
            T* orow = out + yy * x.w;
            const T* irow = in + (yy + dy) * x.w + dx;
            for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
          }
        }
    }
  return y;
}

template <typename T>
Tensor<T> depthwise_backward(const Tensor<T>& x, std::span<const T> weight, int k, const Tensor<T>& dy,
                             std::span<T> dweight) {
  const int p = k / 2;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* in = x.ptr(n, c);
      const T* g = dy.ptr(n, c);
      T* gin = dx.ptr(n, c);
      const T* wk = weight.data() + static_cast<std::size_t>(c) * k * k;
      T* dwk = dweight.data() + static_cast<std::size_t>(c) * k * k;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wk[ky * k + kx];
          const int oy = ky - p, ox = kx - p;
          const int y0 = std::max(0, -oy), y1 = std::min(x.h, x.h - oy);
          const int x0 = std::max(0, -ox), x1 = std::min(x.w, x.w - ox);
          T acc = 0;
          for (int yy = y0; yy < y1; ++yy) {
            const T* grow = g + yy * x.w;
            const T* irow = in + (yy + oy) * x.w + ox;
            T* girow = gin + (yy + oy) * x.w + ox;
            for (int xx = x0; xx < x1; ++xx) {
              acc += grow[xx] * irow[xx];
              girow[xx] += wv * grow[xx];
            }
          }
          dwk[ky * k + kx] += acc;
        }
    }
  return dx;
}

// ---------------------------------------------------------------------------
// Pointwise (1 x 1) convolution. Weight [out][in].

template <typename T>
Tensor<T> pointwise_forward(const Tensor<T>& x, std::span<const T> weight, int out_channels) {
  if (weight.size() != static_cast<std::size_t>(out_channels) * x.c)
    throw ShapeError("pointwise: kernel is not " + std::to_string(out_channels) + "x" + std::to_string(x.c));
  Tensor<T> y(x.n, out_channels, x.h, x.w);
  ConstMatMap<T> W(weight.data(), out_channels, x.c);
  const auto hw = static_cast<Eigen::Index>(x.plane());
  for (int n = 0; n < x.n; ++n) {
    ConstMatMap<T> X(x.ptr(n), x.c, hw);
    MatMap<T> Y(y.ptr(n), out_channels, hw);
    Y.noalias() = W * X;
  }
  return y;
}

template <typename T>
Tensor<T> pointwise_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& dy,
                             std::span<T> dweight) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  ConstMatMap<T> W(weight.data(), dy.c, x.c);
  MatMap<T> dW(dweight.data(), dy.c, x.c);
  const auto hw = static_cast<Eigen::Index>(x.plane());
  for (int n = 0; n < x.n; ++n) {
    ConstMatMap<T> X(x.ptr(n), x.c, hw);
    ConstMatMap<T> dY(dy.ptr(n), dy.c, hw);
    dW.noalias() += dY * X.transpose();
    MatMap<T> dX(dx.ptr(n), x.c, hw);
    dX.noalias() = W.transpose() * dY;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
  std::vector<T> batch_mean;
  std::vector<T> batch_var;  // biased
};

/// Training mode normalizes with batch statistics and fills `cache`;
/// inference mode (cache == nullptr) uses the running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                            std::span<const T> running_mean, std::span<const T> running_var,
                            BatchNormCache<T>* cache) {
  Tensor<T> y(x.n, x.c, x.h, x.w);
  const std::size_t hw = x.plane();
  const double count = static_cast<double>(x.n) * static_cast<double>(hw);
  if (cache) {
    cache->xhat = Tensor<T>(x.n, x.c, x.h, x.w);
    cache->inv_std.assign(static_cast<std::size_t>(x.c), T(0));
    cache->batch_mean.assign(static_cast<std::size_t>(x.c), T(0));
    cache->batch_var.assign(static_cast<std::size_t>(x.c), T(0));
  }
  for (int c = 0; c < x.c; ++c) {
    T mean, inv_std;
    if (cache) {
      double s = 0;
      for (int n = 0; n < x.n; ++n) {
        const T* p = x.ptr(n, c);
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double m = s / count;
      double v = 0;
      for (int n = 0; n < x.n; ++n) {
        const T* p = x.ptr(n, c);
        for (std::size_t i = 0; i < hw; ++i) v += (p[i] - m) * (p[i] - m);
      }
      v /= count;
      mean = static_cast<T>(m);
      inv_std = static_cast<T>(1.0 / std::sqrt(v + kBatchNormEpsilon));
      cache->batch_mean[c] = mean;
      cache->batch_var[c] = static_cast<T>(v);
      cache->inv_std[c] = inv_std;
    } else {
      mean = running_mean[c];
      inv_std = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + kBatchNormEpsilon));
    }
    const T g = gamma[c], b = beta[c];
    for (int n = 0; n < x.n; ++n) {
      const T* p = x.ptr(n, c);
      T* q = y.ptr(n, c);
      T* xh = cache ? cache->xhat.ptr(n, c) : nullptr;
      for (std::size_t i = 0; i < hw; ++i) {
        const T h = (p[i] - mean) * inv_std;
        if (xh) xh[i] = h;
        q[i] = g * h + b;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma, const Tensor<T>& dy,
                             std::span<T> dgamma, std::span<T> dbeta) {
  Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
  const std::size_t hw = dy.plane();
  const double count = static_cast<double>(dy.n) * static_cast<double>(hw);
  for (int c = 0; c < dy.c; ++c) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int n = 0; n < dy.n; ++n) {
      const T* g = dy.ptr(n, c);
      const T* h = cache.xhat.ptr(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += g[i];
        sum_dy_xhat += g[i] * h[i];
      }
    }
    dgamma[c] += static_cast<T>(sum_dy_xhat);
    dbeta[c] += static_cast<T>(sum_dy);
    const T scale = static_cast<T>(gamma[c] * cache.inv_std[c] / count);
    const T mean_dy = static_cast<T>(sum_dy), mean_dyh = static_cast<T>(sum_dy_xhat);
    const T cnt = static_cast<T>(count);
    for (int n = 0; n < dy.n; ++n) {
      const T* g = dy.ptr(n, c);
      const T* h = cache.xhat.ptr(n, c);
      T* o = dx.ptr(n, c);
      for (std::size_t i = 0; i < hw; ++i) o[i] = scale * (cnt * g[i] - mean_dy - h[i] * mean_dyh);
    }
  }
  return dx;
}

/// Exponential moving average of batch statistics (unbiased variance).
template <typename T>
void update_running_stats(const BatchNormCache<T>& cache, std::size_t count, std::span<T> running_mean,
                          std::span<T> running_var) {
  const double m = kBatchNormMomentum;
  const double correction = count > 1 ? static_cast<double>(count) / static_cast<double>(count - 1) : 1.0;
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = static_cast<T>((1 - m) * running_mean[c] + m * cache.batch_mean[c]);
    running_var[c] = static_cast<T>((1 - m) * running_var[c] + m * cache.batch_var[c] * correction);
  }
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearity, pooling, head.

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(x.data[i] > T(0))) dx.data[i] = T(0);
  return dx;
}

/// 3 x 3 max pooling, stride 2, padding 1. `argmax` receives the flat
/// in-plane index of each output's source pixel.
template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& x, std::vector<std::int32_t>* argmax) {
  const int ho = conv_out_size(x.h, 3, 2, 1), wo = conv_out_size(x.w, 3, 2, 1);
  Tensor<T> y(x.n, x.c, ho, wo);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* in = x.ptr(n, c);
      T* out = y.ptr(n, c);
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::int32_t best_idx = -1;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * 2 + ky - 1;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * 2 + kx - 1;
              if (ix < 0 || ix >= x.w) continue;
              const T v = in[iy * x.w + ix];
              if (v > best || best_idx < 0) {
                best = v;
                best_idx = iy * x.w + ix;
              }
            }
          }
          out[oy * wo + ox] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
    }
  return y;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& x, const std::vector<std::int32_t>& argmax, const Tensor<T>& dy) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  std::size_t o = 0;
  for (int n = 0; n < dy.n; ++n)
    for (int c = 0; c < dy.c; ++c) {
      T* gin = dx.ptr(n, c);
      const T* g = dy.ptr(n, c);
      for (std::size_t i = 0; i < dy.plane(); ++i, ++o) gin[argmax[o]] += g[i];
    }
  return dx;
}

/// Global average pooling to (n, c, 1, 1).
template <typename T>
Tensor<T> gap_forward(const Tensor<T>& x) {
  Tensor<T> y(x.n, x.c, 1, 1);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T* p = x.ptr(n, c);
      T s = 0;
      for (std::size_t i = 0; i < x.plane(); ++i) s += p[i];
      y.at(n, c, 0, 0) = s / static_cast<T>(x.plane());
    }
  return y;
}

template <typename T>
Tensor<T> gap_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  const T inv = T(1) / static_cast<T>(x.plane());
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const T g = dy.at(n, c, 0, 0) * inv;
      T* p = dx.ptr(n, c);
      for (std::size_t i = 0; i < x.plane(); ++i) p[i] = g;
    }
  return dx;
}

/// Fully connected layer on (n, in, 1, 1); weight [out][in].
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias, int out) {
  if (weight.size() != static_cast<std::size_t>(out) * x.c) throw ShapeError("linear: weight shape mismatch");
  Tensor<T> y(x.n, out, 1, 1);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out; ++o) {
      T s = bias[o];
      const T* wr = weight.data() + static_cast<std::size_t>(o) * x.c;
      for (int i = 0; i < x.c; ++i) s += wr[i] * x.at(n, i, 0, 0);
      y.at(n, o, 0, 0) = s;
    }
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& dy, std::span<T> dweight,
                          std::span<T> dbias) {
  Tensor<T> dx(x.n, x.c, 1, 1);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < dy.c; ++o) {
      const T g = dy.at(n, o, 0, 0);
      dbias[o] += g;
      const T* wr = weight.data() + static_cast<std::size_t>(o) * x.c;
      T* dwr = dweight.data() + static_cast<std::size_t>(o) * x.c;
      for (int i = 0; i < x.c; ++i) {
        dwr[i] += g * x.at(n, i, 0, 0);
        dx.at(n, i, 0, 0) += g * wr[i];
      }
    }
  return dx;
}

}  // namespace deepstreets::layers

namespace deepstreets {

/// Depthwise-separable convolution: a per-channel k x k spatial convolution
/// ("same" padding, stride 1) followed by a 1 x 1 cross-channel mix.
/// `depthwise` is shaped (C, 1, k, k) and `pointwise` (C_out, C, 1, 1).
template <typename T>
Tensor<T> separable_conv(const Tensor<T>& input, const Tensor<T>& depthwise, const Tensor<T>& pointwise) {
  if (depthwise.n != input.c || depthwise.c != 1 || depthwise.h != depthwise.w || depthwise.h % 2 == 0)
    throw ShapeError("separable_conv: depthwise kernel " + depthwise.shape_string() + " does not fit input " +
                     input.shape_string());
  if (pointwise.c != input.c || pointwise.h != 1 || pointwise.w != 1)
    throw ShapeError("separable_conv: pointwise kernel " + pointwise.shape_string() + " does not fit input " +
                     input.shape_string());
  auto mid = layers::depthwise_forward<T>(input, depthwise.data, depthwise.h);
  return layers::pointwise_forward<T>(mid, pointwise.data, pointwise.n);
}

}  // namespace deepstreets
