#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "resp/eigen.hpp"

#include "resp/grad/var.hpp"

// Differentiable operations. Layouts: dense inputs are [N, F]; 1-D signals
// are [N, C, L]; images are [N, C, H, W]. All reductions that produce a loss
// average over elements.

namespace resp::grad {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

namespace ops_detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

template <class T>
void same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shapes " + shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
}

template <class T>
void accumulate(Node<T>& parent, const std::vector<T>& g) {
  if (!parent.requires_grad) return;
  auto& buf = parent.grad_buffer().data;
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

// 2-D convolution geometry; 1-D convolution uses H = KH = 1.
struct ConvGeom {
  std::size_t n, c, h, w, o, kh, kw, sh, sw, ph, pw, oh, ow;
};

// Calls fn(dst_offset, src_offset, count) for each run of in-bounds taps of
// kernel offset (ki, kj) over output positions [p0, p1); out-of-bounds taps
// are reported through pad(dst_offset, count).
template <class Fn, class Pad>
void conv_runs(const ConvGeom& g, std::size_t c, std::size_t ki, std::size_t kj, std::size_t p0, std::size_t p1,
               Fn&& fn, Pad&& pad) {
  const auto H = static_cast<long long>(g.h), Wd = static_cast<long long>(g.w);
  std::size_t p = p0;
  while (p < p1) {
    const std::size_t oi = p / g.ow, oj0 = p % g.ow;
    const std::size_t oj1 = std::min(g.ow, oj0 + (p1 - p));
    const long long ii = static_cast<long long>(oi * g.sh + ki) - static_cast<long long>(g.ph);
    const std::size_t dst = p - p0;
    if (ii < 0 || ii >= H) {
      pad(dst, oj1 - oj0);
    } else {
      const std::size_t row = (c * g.h + static_cast<std::size_t>(ii)) * g.w;
      if (g.sw == 1) {
        // jj = oj + kj - pw must lie in [0, w).
        const long long off = static_cast<long long>(kj) - static_cast<long long>(g.pw);
        const auto lo = static_cast<std::size_t>(std::clamp<long long>(-off, static_cast<long long>(oj0),
                                                                       static_cast<long long>(oj1)));
        const auto hi = static_cast<std::size_t>(std::clamp<long long>(Wd - off, static_cast<long long>(lo),
                                                                       static_cast<long long>(oj1)));
        if (lo > oj0) pad(dst, lo - oj0);
        if (hi > lo) fn(dst + (lo - oj0), row + static_cast<std::size_t>(static_cast<long long>(lo) + off), hi - lo);
        if (oj1 > hi) pad(dst + (hi - oj0), oj1 - hi);
      } else {
        for (std::size_t oj = oj0; oj < oj1; ++oj) {
          const long long jj = static_cast<long long>(oj * g.sw + kj) - static_cast<long long>(g.pw);
          if (jj < 0 || jj >= Wd) pad(dst + (oj - oj0), 1);
          else fn(dst + (oj - oj0), row + static_cast<std::size_t>(jj), 1);
        }
      }
    }
    p += oj1 - oj0;
  }
}

// Writes the im2col rows for output positions [p0, p1) into cols, which
// has (C KH KW) rows of p1 - p0 entries.
template <class T>
void im2col(const T* x, const ConvGeom& g, std::size_t p0, std::size_t p1, T* cols) {
  const std::size_t len = p1 - p0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * len;
        conv_runs(
            g, c, ki, kj, p0, p1, [&](std::size_t d, std::size_t s, std::size_t n) { std::copy_n(x + s, n, row + d); },
            [&](std::size_t d, std::size_t n) { std::fill_n(row + d, n, T(0)); });
      }
}

template <class T>
void col2im(const T* cols, const ConvGeom& g, std::size_t p0, std::size_t p1, T* dx) {
  const std::size_t len = p1 - p0;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * len;
        conv_runs(
            g, c, ki, kj, p0, p1,
            [&](std::size_t d, std::size_t s, std::size_t n) {
              for (std::size_t i = 0; i < n; ++i) dx[s + i] += row[d + i];
            },
            [](std::size_t, std::size_t) {});
      }
}

// Output positions per im2col tile; bounds the column buffer to about 2^20
// entries whatever the input length.
inline std::size_t conv_tile(std::size_t k, std::size_t p) {
  return std::min(p, std::max<std::size_t>(256, (std::size_t{1} << 20) / k));
}

template <class T>
Var<T> conv_impl(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvGeom& g, Shape out_shape,
                 const char* op) {
  const std::size_t P = g.oh * g.ow, K = g.c * g.kh * g.kw, tile = conv_tile(K, P);
  const std::size_t in_stride = g.c * g.h * g.w, out_stride = g.o * P;
  const auto O = static_cast<Eigen::Index>(g.o), KK = static_cast<Eigen::Index>(K),
             PP = static_cast<Eigen::Index>(P);
  Tensor<T> out(std::move(out_shape));
  std::vector<T> cols(K * tile);
  CMapR<T> W(weight.value().data.data(), O, KK);
  const T* b = bias ? bias.value().data.data() : nullptr;
  for (std::size_t n = 0; n < g.n; ++n) {
    MapR<T> Y(out.data.data() + n * out_stride, O, PP);
    for (std::size_t p0 = 0; p0 < P; p0 += tile) {
      const std::size_t p1 = std::min(P, p0 + tile);
      const auto len = static_cast<Eigen::Index>(p1 - p0);
      im2col(x.value().data.data() + n * in_stride, g, p0, p1, cols.data());
      Y.middleCols(static_cast<Eigen::Index>(p0), len).noalias() = W * CMapR<T>(cols.data(), KK, len);
    }
    if (b)
      for (std::size_t o = 0; o < g.o; ++o) Y.row(static_cast<Eigen::Index>(o)).array() += b[o];
  }
  std::vector<Var<T>> parents{x, weight};
  if (bias) parents.push_back(bias);
  return make_result<T>(
      std::move(out), parents,
      [g, P, K, tile, in_stride, out_stride, O, KK, PP](Node<T>& self) {
        Node<T>& xn = *self.parents[0];
        Node<T>& wn = *self.parents[1];
        Node<T>* bn = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        std::vector<T> cols(K * tile), dcols;
        if (xn.requires_grad) dcols.resize(K * tile);
        CMapR<T> W(wn.value.data.data(), O, KK);
        for (std::size_t n = 0; n < g.n; ++n) {
          CMapR<T> G(self.grad.data.data() + n * out_stride, O, PP);
          if (bn && bn->requires_grad) {
            auto& db = bn->grad_buffer().data;
            // Plain loop: Eigen's vectorized sum peels by address.
            const T* gp = self.grad.data.data() + n * out_stride;
            for (std::size_t o = 0; o < g.o; ++o) {
              T acc = 0;
              for (std::size_t p = 0; p < P; ++p) acc += gp[o * P + p];
              db[o] += acc;
            }
          }
          for (std::size_t p0 = 0; p0 < P; p0 += tile) {
            const std::size_t p1 = std::min(P, p0 + tile);
            const auto len = static_cast<Eigen::Index>(p1 - p0);
            const auto Gt = G.middleCols(static_cast<Eigen::Index>(p0), len);
            if (wn.requires_grad) {
              im2col(xn.value.data.data() + n * in_stride, g, p0, p1, cols.data());
              MapR<T>(wn.grad_buffer().data.data(), O, KK).noalias() +=
                  Gt * CMapR<T>(cols.data(), KK, len).transpose();
            }
            if (xn.requires_grad) {
              MapR<T>(dcols.data(), KK, len).noalias() = W.transpose() * Gt;
              col2im(dcols.data(), g, p0, p1, xn.grad_buffer().data.data() + n * in_stride);
            }
          }
        }
      },
      op);
}

}  // namespace ops_detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  ops_detail::same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& s) {
    ops_detail::accumulate(*s.parents[0], s.grad.data);
    ops_detail::accumulate(*s.parents[1], s.grad.data);
  }, "add");
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  ops_detail::same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& s) {
    ops_detail::accumulate(*s.parents[0], s.grad.data);
    if (s.parents[1]->requires_grad) {
      auto& g = s.parents[1]->grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s.grad[i];
    }
  }, "sub");
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  ops_detail::same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    Node<T>& bn = *s.parents[1];
    if (an.requires_grad) {
      auto& g = an.grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i] * an.value[i];
    }
  }, "mul");
}

template <class T>
Var<T> scale(const Var<T>& a, T c) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
  return make_result<T>(std::move(out), {a}, [c](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i] * c;
  }, "scale");
}

template <class T>
Var<T> sum(const Var<T>& a) {
  T acc = 0;
  for (T v : a.value().data) acc += v;
  return make_result<T>(Tensor<T>::scalar(acc), {a}, [](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (T& v : g) v += s.grad[0];
  }, "sum");
}

template <class T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.value().size()));
}

template <class T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  ops_detail::require(numel(shape) == a.value().size(), "reshape: element count differs");
  Tensor<T> out(std::move(shape), a.value().data);
  return make_result<T>(std::move(out), {a}, [](Node<T>& s) { ops_detail::accumulate(*s.parents[0], s.grad.data); },
                        "reshape");
}

// ---------------------------------------------------------------------------
// Activations

template <class T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] > T(0) ? a.value()[i] : T(0);
  return make_result<T>(std::move(out), {a}, [](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    auto& g = an.grad_buffer().data;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (an.value[i] > T(0)) g[i] += s.grad[i];
  }, "relu");
}

/// Parametric ReLU with one learnable slope per channel (dimension 1).
template <class T>
Var<T> prelu(const Var<T>& x, const Var<T>& slope) {
  ops_detail::require(x.shape().size() >= 2 && slope.value().size() == x.dim(1), "prelu: slope per channel");
  const std::size_t N = x.dim(0), C = x.dim(1), inner = x.value().size() / (N * C);
  Tensor<T> out(x.shape());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const T a = slope.value()[c];
      const std::size_t base = (n * C + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const T v = x.value()[base + i];
        out[base + i] = v > T(0) ? v : a * v;
      }
    }
  return make_result<T>(std::move(out), {x, slope}, [N, C, inner](Node<T>& s) {
    Node<T>& xn = *s.parents[0];
    Node<T>& an = *s.parents[1];
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        const T a = an.value[c];
        const std::size_t base = (n * C + c) * inner;
        T da = 0;
        if (xn.requires_grad) {
          auto& gx = xn.grad_buffer().data;
          for (std::size_t i = 0; i < inner; ++i) {
            const T v = xn.value[base + i];
            gx[base + i] += v > T(0) ? s.grad[base + i] : a * s.grad[base + i];
          }
        }
        for (std::size_t i = 0; i < inner; ++i) {
          const T v = xn.value[base + i];
          if (v <= T(0)) da += v * s.grad[base + i];
        }
        if (an.requires_grad) an.grad_buffer().data[c] += da;
      }
  }, "prelu");
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = a.value()[i];
    out[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  return make_result<T>(std::move(out), {a}, [](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i] * s.value[i] * (T(1) - s.value[i]);
  }, "sigmoid");
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  return make_result<T>(std::move(out), {a}, [](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i] * (T(1) - s.value[i] * s.value[i]);
  }, "tanh");
}

/// Row-wise softmax over the last dimension of a [N, K] tensor.
template <class T>
Var<T> softmax(const Var<T>& a) {
  ops_detail::require(a.shape().size() == 2, "softmax expects [N, K]");
  const std::size_t N = a.dim(0), K = a.dim(1);
  Tensor<T> out(a.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const T* z = &a.value()[n * K];
    const T m = *std::max_element(z, z + K);
    T s = 0;
    for (std::size_t k = 0; k < K; ++k) s += out[n * K + k] = std::exp(z[k] - m);
    for (std::size_t k = 0; k < K; ++k) out[n * K + k] /= s;
  }
  return make_result<T>(std::move(out), {a}, [N, K](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t n = 0; n < N; ++n) {
      T dot = 0;
      for (std::size_t k = 0; k < K; ++k) dot += s.grad[n * K + k] * s.value[n * K + k];
      for (std::size_t k = 0; k < K; ++k) g[n * K + k] += s.value[n * K + k] * (s.grad[n * K + k] - dot);
    }
  }, "softmax");
}

// ---------------------------------------------------------------------------
// Linear maps

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  ops_detail::require(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(1) == b.dim(0),
                      "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const auto M = static_cast<Eigen::Index>(a.dim(0)), K = static_cast<Eigen::Index>(a.dim(1)),
             N = static_cast<Eigen::Index>(b.dim(1));
  Tensor<T> out({a.dim(0), b.dim(1)});
  MapR<T>(out.data.data(), M, N).noalias() =
      CMapR<T>(a.value().data.data(), M, K) * CMapR<T>(b.value().data.data(), K, N);
  return make_result<T>(std::move(out), {a, b}, [M, K, N](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    Node<T>& bn = *s.parents[1];
    CMapR<T> G(s.grad.data.data(), M, N);
    if (an.requires_grad)
      MapR<T>(an.grad_buffer().data.data(), M, K).noalias() += G * CMapR<T>(bn.value.data.data(), K, N).transpose();
    if (bn.requires_grad)
      MapR<T>(bn.grad_buffer().data.data(), K, N).noalias() += CMapR<T>(an.value.data.data(), M, K).transpose() * G;
  }, "matmul");
}

/// x [N, in] * weight [in, out] + bias [out].
template <class T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  ops_detail::require(bias.value().size() == weight.dim(1), "dense: bias length");
  Var<T> y = matmul(x, weight);
  const std::size_t N = y.dim(0), O = y.dim(1);
  Tensor<T> out = y.value();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) out[n * O + o] += bias.value()[o];
  return make_result<T>(std::move(out), {y, bias}, [N, O](Node<T>& s) {
    ops_detail::accumulate(*s.parents[0], s.grad.data);
    Node<T>& bn = *s.parents[1];
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer().data;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) g[o] += s.grad[n * O + o];
    }
  }, "dense");
}

/// x [N, C, L], weight [O, C, K], optional bias [O].
template <class T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t stride = 1,
              std::size_t pad = 0) {
  ops_detail::require(x.shape().size() == 3 && weight.shape().size() == 3 && weight.dim(1) == x.dim(1),
                      "conv1d: input " + shape_str(x.shape()) + " weight " + shape_str(weight.shape()));
  ops_detail::require(stride > 0 && x.dim(2) + 2 * pad >= weight.dim(2), "conv1d: kernel longer than input");
  if (bias) ops_detail::require(bias.value().size() == weight.dim(0), "conv1d: bias length");
  ops_detail::ConvGeom g{x.dim(0), x.dim(1), 1, x.dim(2), weight.dim(0), 1, weight.dim(2), 1, stride, 0, pad, 1,
                         (x.dim(2) + 2 * pad - weight.dim(2)) / stride + 1};
  return ops_detail::conv_impl(x, weight, bias, g, Shape{g.n, g.o, g.ow}, "conv1d");
}

/// x [N, C, H, W], weight [O, C, KH, KW], optional bias [O].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t stride = 1,
              std::size_t pad = 0) {
  ops_detail::require(x.shape().size() == 4 && weight.shape().size() == 4 && weight.dim(1) == x.dim(1),
                      "conv2d: input " + shape_str(x.shape()) + " weight " + shape_str(weight.shape()));
  ops_detail::require(stride > 0 && x.dim(2) + 2 * pad >= weight.dim(2) && x.dim(3) + 2 * pad >= weight.dim(3),
                      "conv2d: kernel larger than input");
  if (bias) ops_detail::require(bias.value().size() == weight.dim(0), "conv2d: bias length");
  ops_detail::ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3),
                         stride, stride, pad, pad,
                         (x.dim(2) + 2 * pad - weight.dim(2)) / stride + 1,
                         (x.dim(3) + 2 * pad - weight.dim(3)) / stride + 1};
  return ops_detail::conv_impl(x, weight, bias, g, Shape{g.n, g.o, g.oh, g.ow}, "conv2d");
}

// ---------------------------------------------------------------------------
// Pooling and resampling

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
template <class T>
Var<T> max_pool2d(const Var<T>& x) {
  ops_detail::require(x.shape().size() == 4 && x.dim(2) >= 2 && x.dim(3) >= 2, "max_pool2d expects [N,C,H>=2,W>=2]");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), OH = H / 2, OW = W / 2;
  Tensor<T> out({N, C, OH, OW});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* src = &x.value()[nc * H * W];
    for (std::size_t i = 0; i < OH; ++i)
      for (std::size_t j = 0; j < OW; ++j) {
        std::size_t best = (2 * i) * W + 2 * j;
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (2 * i + di) * W + 2 * j + dj;
            if (src[idx] > src[best]) best = idx;
          }
        const std::size_t o = (nc * OH + i) * OW + j;
        out[o] = src[best];
        argmax[o] = nc * H * W + best;
      }
  }
  return make_result<T>(std::move(out), {x}, [argmax = std::move(argmax)](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += s.grad[o];
  }, "max_pool2d");
}

/// Mean over every axis after the channel axis: [N, C, ...] -> [N, C].
template <class T>
Var<T> avg_pool_global(const Var<T>& x) {
  ops_detail::require(x.shape().size() >= 3, "avg_pool_global expects [N, C, ...]");
  const std::size_t N = x.dim(0), C = x.dim(1), inner = x.value().size() / (N * C);
  Tensor<T> out({N, C});
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    T acc = 0;
    for (std::size_t i = 0; i < inner; ++i) acc += x.value()[nc * inner + i];
    out[nc] = acc / static_cast<T>(inner);
  }
  return make_result<T>(std::move(out), {x}, [N, C, inner](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t nc = 0; nc < N * C; ++nc) {
      const T v = s.grad[nc] / static_cast<T>(inner);
      for (std::size_t i = 0; i < inner; ++i) g[nc * inner + i] += v;
    }
  }, "avg_pool_global");
}

/// Keeps every second sample along the last axis of [N, C, L]: L -> ceil(L/2).
template <class T>
Var<T> decimate1d(const Var<T>& x) {
  ops_detail::require(x.shape().size() == 3, "decimate1d expects [N, C, L]");
  const std::size_t NC = x.dim(0) * x.dim(1), L = x.dim(2), OL = (L + 1) / 2;
  Tensor<T> out({x.dim(0), x.dim(1), OL});
  for (std::size_t r = 0; r < NC; ++r)
    for (std::size_t j = 0; j < OL; ++j) out[r * OL + j] = x.value()[r * L + 2 * j];
  return make_result<T>(std::move(out), {x}, [NC, L, OL](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t r = 0; r < NC; ++r)
      for (std::size_t j = 0; j < OL; ++j) g[r * L + 2 * j] += s.grad[r * OL + j];
  }, "decimate1d");
}

/// Linear interpolation x2 along the last axis of [N, C, L] (half-pixel
/// centers, edges clamped): L -> 2L.
template <class T>
Var<T> upsample_linear1d(const Var<T>& x) {
  ops_detail::require(x.shape().size() == 3, "upsample_linear1d expects [N, C, L]");
  const std::size_t NC = x.dim(0) * x.dim(1), L = x.dim(2), OL = 2 * L;
  // Each output mixes (i0, i1) with weights (1-f, f).
  std::vector<std::size_t> i0(OL), i1(OL);
  std::vector<T> f(OL);
  for (std::size_t i = 0; i < OL; ++i) {
    double src = (static_cast<double>(i) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    const auto lo = static_cast<std::size_t>(std::floor(src));
    i0[i] = std::min(lo, L - 1);
    i1[i] = std::min(lo + 1, L - 1);
    f[i] = static_cast<T>(src - static_cast<double>(lo));
  }
  Tensor<T> out({x.dim(0), x.dim(1), OL});
  for (std::size_t r = 0; r < NC; ++r) {
    const T* src = &x.value()[r * L];
    for (std::size_t i = 0; i < OL; ++i) out[r * OL + i] = (T(1) - f[i]) * src[i0[i]] + f[i] * src[i1[i]];
  }
  return make_result<T>(std::move(out), {x}, [NC, L, OL, i0, i1, f](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t r = 0; r < NC; ++r)
      for (std::size_t i = 0; i < OL; ++i) {
        g[r * L + i0[i]] += (T(1) - f[i]) * s.grad[r * OL + i];
        g[r * L + i1[i]] += f[i] * s.grad[r * OL + i];
      }
  }, "upsample_linear1d");
}

/// Concatenation along the channel axis (dimension 1).
template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  ops_detail::require(a.shape().size() == b.shape().size() && a.shape().size() >= 2 && a.dim(0) == b.dim(0),
                      "concat_channels: rank or batch mismatch");
  for (std::size_t d = 2; d < a.shape().size(); ++d)
    ops_detail::require(a.dim(d) == b.dim(d), "concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " +
                                                  shape_str(b.shape()));
  const std::size_t N = a.dim(0), sa = a.value().size() / N, sb = b.value().size() / N;
  Shape shape = a.shape();
  shape[1] += b.dim(1);
  Tensor<T> out(shape);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(&a.value()[n * sa], sa, &out[n * (sa + sb)]);
    std::copy_n(&b.value()[n * sb], sb, &out[n * (sa + sb) + sa]);
  }
  return make_result<T>(std::move(out), {a, b}, [N, sa, sb](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    Node<T>& bn = *s.parents[1];
    for (std::size_t n = 0; n < N; ++n) {
      if (an.requires_grad) {
        auto& g = an.grad_buffer().data;
        for (std::size_t i = 0; i < sa; ++i) g[n * sa + i] += s.grad[n * (sa + sb) + i];
      }
      if (bn.requires_grad) {
        auto& g = bn.grad_buffer().data;
        for (std::size_t i = 0; i < sb; ++i) g[n * sb + i] += s.grad[n * (sa + sb) + sa + i];
      }
    }
  }, "concat_channels");
}

/// Resizes the last axis of [N, C, L] to `len`, zero-padding or truncating
/// at the end.
template <class T>
Var<T> fit_length1d(const Var<T>& x, std::size_t len) {
  ops_detail::require(x.shape().size() == 3, "fit_length1d expects [N, C, L]");
  const std::size_t NC = x.dim(0) * x.dim(1), L = x.dim(2), keep = std::min(L, len);
  if (L == len) return x;
  Tensor<T> out({x.dim(0), x.dim(1), len});
  for (std::size_t r = 0; r < NC; ++r) std::copy_n(&x.value()[r * L], keep, &out[r * len]);
  return make_result<T>(std::move(out), {x}, [NC, L, len, keep](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t r = 0; r < NC; ++r)
      for (std::size_t i = 0; i < keep; ++i) g[r * L + i] += s.grad[r * len + i];
  }, "fit_length1d");
}

/// Rows [begin, end) of the leading axis.
template <class T>
Var<T> slice_rows(const Var<T>& x, std::size_t begin, std::size_t end) {
  ops_detail::require(!x.shape().empty() && begin < end && end <= x.dim(0),
                      "slice_rows: bad range for " + shape_str(x.shape()));
  const std::size_t row = x.value().size() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  Tensor<T> out(shape);
  std::copy_n(&x.value()[begin * row], out.size(), out.data.begin());
  return make_result<T>(std::move(out), {x}, [begin, row](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < s.grad.size(); ++i) g[begin * row + i] += s.grad[i];
  }, "slice_rows");
}

// ---------------------------------------------------------------------------
// Losses

/// Mean over rows of -sum_k target_k * log_softmax(logits)_k. Targets may be
/// soft; they are treated as constants.
template <class T>
Var<T> cross_entropy(const Var<T>& logits, const Tensor<T>& target) {
  ops_detail::require(logits.shape().size() == 2 && target.shape == logits.shape(),
                      "cross_entropy: logits " + shape_str(logits.shape()) + " target " + shape_str(target.shape));
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  std::vector<T> probs(N * K), tsum(N);
  T loss = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const T* z = &logits.value()[n * K];
    const T m = *std::max_element(z, z + K);
    T s = 0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(z[k] - m);
    const T lse = m + std::log(s);
    T ts = 0;
    for (std::size_t k = 0; k < K; ++k) {
      probs[n * K + k] = std::exp(z[k] - lse);
      loss -= target[n * K + k] * (z[k] - lse);
      ts += target[n * K + k];
    }
    tsum[n] = ts;
  }
  loss /= static_cast<T>(N);
  return make_result<T>(Tensor<T>::scalar(loss), {logits}, [N, K, probs, tsum, target](Node<T>& s) {
    auto& g = s.parents[0]->grad_buffer().data;
    const T go = s.grad[0] / static_cast<T>(N);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k) g[n * K + k] += go * (probs[n * K + k] * tsum[n] - target[n * K + k]);
  }, "cross_entropy");
}

template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  ops_detail::same_shape(a, b, "mse");
  const std::size_t n = a.value().size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = a.value()[i] - b.value()[i];
    acc += d * d;
  }
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {a, b}, [n](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    Node<T>& bn = *s.parents[1];
    const T c = T(2) * s.grad[0] / static_cast<T>(n);
    if (an.requires_grad) {
      auto& g = an.grad_buffer().data;
      for (std::size_t i = 0; i < n; ++i) g[i] += c * (an.value[i] - bn.value[i]);
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer().data;
      for (std::size_t i = 0; i < n; ++i) g[i] -= c * (an.value[i] - bn.value[i]);
    }
  }, "mse");
}

/// Mean absolute difference; the subgradient at zero is 0.
template <class T>
Var<T> l1(const Var<T>& a, const Var<T>& b) {
  ops_detail::same_shape(a, b, "l1");
  const std::size_t n = a.value().size();
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(a.value()[i] - b.value()[i]);
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {a, b}, [n](Node<T>& s) {
    Node<T>& an = *s.parents[0];
    Node<T>& bn = *s.parents[1];
    const T c = s.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = an.value[i] - bn.value[i];
      const T sg = d > T(0) ? c : (d < T(0) ? -c : T(0));
      if (an.requires_grad) an.grad_buffer().data[i] += sg;
      if (bn.requires_grad) bn.grad_buffer().data[i] -= sg;
    }
  }, "l1");
}

}  // namespace resp::grad
