// Copyright 2026 The MorphNet Authors
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

#include "autodiff/ops.hpp"

#include <cmath>
#include <memory>
#include <limits>

namespace morphnet::ad {
namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShape, op, ": shape mismatch ", shape_string(a.shape()),
         " vs ", shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    fail(ErrorCode::kShape, op, ": expected rank ", rank, ", got ",
         shape_string(a.shape()));
  }
}

// Adds `src` into the gradient of node `id` if that node wants one.
template <typename T>
void accumulate(Tape<T>& tape, std::size_t id, const Tensor<T>& src) {
  if (!tape.requires_grad_at(id)) return;
  auto dst = tape.grad_ref(id).data();
  auto s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s[i];
}

struct ConvGeometry {
  std::size_t n, h, w, cin;
  std::size_t k, stride;
  std::size_t oh, ow;
  std::size_t pad_top, pad_left;
};

ConvGeometry conv_geometry(const Shape& x, std::size_t k, std::size_t stride,
                           Padding padding, const char* op) {
  if (x.size() != 4) {
    fail(ErrorCode::kShape, op, ": expected N x H x W x C input, got ",
         shape_string(x));
  }
  if (stride == 0) fail(ErrorCode::kInvalidArgument, op, ": stride must be >= 1");
  if (k % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, op, ": kernel size must be odd, got ", k);
  }
  ConvGeometry g{x[0], x[1], x[2], x[3], k, stride, 0, 0, 0, 0};
  if (padding == Padding::kValid && (g.h < k || g.w < k)) {
    fail(ErrorCode::kShape, op, ": kernel ", k, " larger than input ",
         shape_string(x));
  }
  g.oh = conv_output_extent(g.h, k, stride, padding);
  g.ow = conv_output_extent(g.w, k, stride, padding);
  if (padding == Padding::kSame) {
    const std::size_t need_h = (g.oh - 1) * stride + k;
    const std::size_t need_w = (g.ow - 1) * stride + k;
    g.pad_top = need_h > g.h ? (need_h - g.h) / 2 : 0;
    g.pad_left = need_w > g.w ? (need_w - g.w) / 2 : 0;
  }
  return g;
}

// Maps output coordinate + kernel tap to an input coordinate; returns false
// when the tap lands in padding.
inline bool input_index(std::size_t out, std::size_t tap, std::size_t stride,
                        std::size_t pad, std::size_t extent, std::size_t& in) {
  const std::size_t pos = out * stride + tap;
  if (pos < pad) return false;
  in = pos - pad;
  return in < extent;
}

template <typename T>
Var unary(Tape<T>& tape, Var a, Tensor<T> out,
          std::function<T(T x, T y)> derivative) {
  return tape.record(
      std::move(out), {a}, [derivative](Tape<T>& t, std::size_t self) {
        const std::size_t in = t.input_id(self, 0);
        if (!t.requires_grad_at(in)) return;
        const auto& x = t.value_at(in);
        const auto& y = t.value_at(self);
        const auto& g = t.upstream(self);
        auto dx = t.grad_ref(in).data();
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] += g[i] * derivative(x[i], y[i]);
        }
      });
}

}  // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel,
                               std::size_t stride, Padding padding) {
  if (padding == Padding::kSame) return (input + stride - 1) / stride;
  if (input < kernel) return 0;
  return (input - kernel) / stride + 1;
}

template <typename T>
Tensor<T> he_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) fail(ErrorCode::kInvalidArgument, "he_init: fan_in must be >= 1");
  Tensor<T> out(shape);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (T& v : out.data()) v = static_cast<T>(rng.normal() * stddev);
  return out;
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const auto& x = tape.value(a);
  const auto& y = tape.value(b);
  require_same_shape(x, y, "add");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return tape.record(std::move(out), {a, b}, [](Tape<T>& t, std::size_t self) {
    accumulate(t, t.input_id(self, 0), t.upstream(self));
    accumulate(t, t.input_id(self, 1), t.upstream(self));
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  const auto& x = tape.value(a);
  const auto& y = tape.value(b);
  require_same_shape(x, y, "mul");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return tape.record(std::move(out), {a, b}, [](Tape<T>& t, std::size_t self) {
    const std::size_t ia = t.input_id(self, 0);
    const std::size_t ib = t.input_id(self, 1);
    const auto& g = t.upstream(self);
    if (t.requires_grad_at(ia)) {
      const auto& y = t.value_at(ib);
      auto d = t.grad_ref(ia).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i];
    }
    if (t.requires_grad_at(ib)) {
      const auto& x = t.value_at(ia);
      auto d = t.grad_ref(ib).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * x[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T factor) {
  const auto& x = tape.value(a);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return unary<T>(tape, a, std::move(out), [factor](T, T) { return factor; });
}

template <typename T>
Var square(Tape<T>& tape, Var a) {
  const auto& x = tape.value(a);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * x[i];
  return unary<T>(tape, a, std::move(out), [](T v, T) { return T(2) * v; });
}

template <typename T>
Var sum(Tape<T>& tape, Var a) {
  const auto& x = tape.value(a);
  T total = T(0);
  for (T v : x.data()) total += v;
  return tape.record(Tensor<T>({1}, {total}), {a},
                     [](Tape<T>& t, std::size_t self) {
                       const std::size_t in = t.input_id(self, 0);
                       if (!t.requires_grad_at(in)) return;
                       const T g = t.upstream(self)[0];
                       for (T& d : t.grad_ref(in).data()) d += g;
                     });
}

template <typename T>
Var mean(Tape<T>& tape, Var a) {
  const std::size_t n = tape.value(a).size();
  return scale(tape, sum(tape, a), T(1) / static_cast<T>(n));
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var a, const Tensor<T>& weights) {
  const auto& x = tape.value(a);
  if (x.size() != weights.size()) {
    fail(ErrorCode::kShape, "weighted_sum: ", x.size(), " values vs ",
         weights.size(), " weights");
  }
  T total = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * weights[i];
  return tape.record(Tensor<T>({1}, {total}), {a},
                     [weights](Tape<T>& t, std::size_t self) {
                       const std::size_t in = t.input_id(self, 0);
                       if (!t.requires_grad_at(in)) return;
                       const T g = t.upstream(self)[0];
                       auto d = t.grad_ref(in).data();
                       for (std::size_t i = 0; i < d.size(); ++i) {
                         d[i] += g * weights[i];
                       }
                     });
}

template <typename T>
Var reshape(Tape<T>& tape, Var a, Shape shape) {
  Tensor<T> out = tape.value(a).reshaped(std::move(shape));
  return tape.record(std::move(out), {a}, [](Tape<T>& t, std::size_t self) {
    const std::size_t in = t.input_id(self, 0);
    if (!t.requires_grad_at(in)) return;
    auto d = t.grad_ref(in).data();
    const auto& g = t.upstream(self);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var a) {
  const auto& x = tape.value(a);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  // Subgradient at 0 is 0.
  return unary<T>(tape, a, std::move(out),
                  [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var a) {
  const auto& x = tape.value(a);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return unary<T>(tape, a, std::move(out), [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var softmax(Tape<T>& tape, Var a) {
  const auto& x = tape.value(a);
  const std::size_t k = x.shape().back();
  const std::size_t rows = x.size() / k;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.raw() + r * k;
    T* o = out.raw() + r * k;
    T peak = in[0];
    for (std::size_t j = 1; j < k; ++j) peak = std::max(peak, in[j]);
    T total = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (std::size_t j = 0; j < k; ++j) o[j] /= total;
  }
  return tape.record(std::move(out), {a}, [k, rows](Tape<T>& t, std::size_t self) {
    const std::size_t in = t.input_id(self, 0);
    if (!t.requires_grad_at(in)) return;
    const auto& y = t.value_at(self);
    const auto& g = t.upstream(self);
    auto d = t.grad_ref(in).data();
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        d[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
      }
    }
  });
}

template <typename T>
Var activate(Tape<T>& tape, Var a, Activation act) {
  switch (act) {
    case Activation::kIdentity: return a;
    case Activation::kRelu: return relu(tape, a);
    case Activation::kSigmoid: return sigmoid(tape, a);
    case Activation::kSoftmax: return softmax(tape, a);
  }
  return a;
}

template <typename T>
Var dense(Tape<T>& tape, Var x, Var weights, Var bias, Activation act) {
  const auto& in = tape.value(x);
  const auto& w = tape.value(weights);
  const auto& b = tape.value(bias);
  if (in.rank() > 2) {
    fail(ErrorCode::kShape, "dense: input must be [N, in] or [in], got ",
         shape_string(in.shape()));
  }
  require_rank(w, 2, "dense weights");
  const std::size_t n_in = in.shape().back();
  const std::size_t rows = in.rank() == 2 ? in.dim(0) : 1;
  const std::size_t n_out = w.dim(1);
  if (w.dim(0) != n_in || b.size() != n_out) {
    fail(ErrorCode::kShape, "dense: input ", shape_string(in.shape()),
         " weights ", shape_string(w.shape()), " bias ",
         shape_string(b.shape()));
  }
  Shape out_shape = in.rank() == 2 ? Shape{rows, n_out} : Shape{n_out};
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    T* o = out.raw() + r * n_out;
    for (std::size_t j = 0; j < n_out; ++j) o[j] = b[j];
    for (std::size_t i = 0; i < n_in; ++i) {
      const T a = in[r * n_in + i];
      const T* wr = w.raw() + i * n_out;
      for (std::size_t j = 0; j < n_out; ++j) o[j] += a * wr[j];
    }
  }
  Var lin = tape.record(
      std::move(out), {x, weights, bias},
      [rows, n_in, n_out](Tape<T>& t, std::size_t self) {
        const std::size_t ix = t.input_id(self, 0);
        const std::size_t iw = t.input_id(self, 1);
        const std::size_t ib = t.input_id(self, 2);
        const auto& g = t.upstream(self);
        const auto& xv = t.value_at(ix);
        const auto& wv = t.value_at(iw);
        if (t.requires_grad_at(ix)) {
          auto dx = t.grad_ref(ix).data();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.raw() + r * n_out;
            for (std::size_t i = 0; i < n_in; ++i) {
              const T* wr = wv.raw() + i * n_out;
              T acc = T(0);
              for (std::size_t j = 0; j < n_out; ++j) acc += wr[j] * gr[j];
              dx[r * n_in + i] += acc;
            }
          }
        }
        if (t.requires_grad_at(iw)) {
          auto dw = t.grad_ref(iw).data();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* gr = g.raw() + r * n_out;
            for (std::size_t i = 0; i < n_in; ++i) {
              const T a = xv[r * n_in + i];
              T* dwr = dw.data() + i * n_out;
              for (std::size_t j = 0; j < n_out; ++j) dwr[j] += a * gr[j];
            }
          }
        }
        if (t.requires_grad_at(ib)) {
          auto db = t.grad_ref(ib).data();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n_out; ++j) db[j] += g[r * n_out + j];
          }
        }
      });
  return activate(tape, lin, act);
}

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias,
           std::size_t stride, Padding padding) {
  const auto& in = tape.value(x);
  const auto& k = tape.value(kernel);
  require_rank(k, 4, "conv2d kernel");
  if (k.dim(0) != k.dim(1)) {
    fail(ErrorCode::kShape, "conv2d: kernel must be square, got ",
         shape_string(k.shape()));
  }
  const ConvGeometry g = conv_geometry(in.shape(), k.dim(0), stride, padding,
                                       "conv2d");
  if (k.dim(2) != g.cin) {
    fail(ErrorCode::kShape, "conv2d: kernel expects ", k.dim(2),
         " input channels, input has ", g.cin);
  }
  const std::size_t cout = k.dim(3);
  if (bias && tape.value(*bias).size() != cout) {
    fail(ErrorCode::kShape, "conv2d: bias length ", tape.value(*bias).size(),
         " vs ", cout, " output channels");
  }

  Tensor<T> out({g.n, g.oh, g.ow, cout});
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        T* o = out.raw() + ((n * g.oh + oy) * g.ow + ox) * cout;
        if (bias) {
          const auto& b = tape.value(*bias);
          for (std::size_t co = 0; co < cout; ++co) o[co] = b[co];
        }
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          std::size_t iy;
          if (!input_index(oy, ky, stride, g.pad_top, g.h, iy)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            std::size_t ix;
            if (!input_index(ox, kx, stride, g.pad_left, g.w, ix)) continue;
            const T* xi = in.raw() + ((n * g.h + iy) * g.w + ix) * g.cin;
            const T* kk = k.raw() + (ky * g.k + kx) * g.cin * cout;
            for (std::size_t ci = 0; ci < g.cin; ++ci) {
              const T xv = xi[ci];
              const T* kr = kk + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) o[co] += xv * kr[co];
            }
          }
        }
      }
    }
  }

  std::vector<Var> inputs{x, kernel};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  return tape.record(
      std::move(out), std::move(inputs),
      [g, cout, stride, has_bias](Tape<T>& t, std::size_t self) {
        const std::size_t ixn = t.input_id(self, 0);
        const std::size_t ikn = t.input_id(self, 1);
        const auto& up = t.upstream(self);
        const auto& xv = t.value_at(ixn);
        const auto& kv = t.value_at(ikn);
        const bool want_x = t.requires_grad_at(ixn);
        const bool want_k = t.requires_grad_at(ikn);
        T* dx = want_x ? t.grad_ref(ixn).raw() : nullptr;
        T* dk = want_k ? t.grad_ref(ikn).raw() : nullptr;
        for (std::size_t n = 0; n < g.n; ++n) {
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const T* gr = up.raw() + ((n * g.oh + oy) * g.ow + ox) * cout;
              for (std::size_t ky = 0; ky < g.k; ++ky) {
                std::size_t iy;
                if (!input_index(oy, ky, stride, g.pad_top, g.h, iy)) continue;
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                  std::size_t ix;
                  if (!input_index(ox, kx, stride, g.pad_left, g.w, ix)) continue;
                  const std::size_t xoff = ((n * g.h + iy) * g.w + ix) * g.cin;
                  const std::size_t koff = (ky * g.k + kx) * g.cin * cout;
                  for (std::size_t ci = 0; ci < g.cin; ++ci) {
                    if (dx) {
                      const T* kr = kv.raw() + koff + ci * cout;
                      T acc = T(0);
                      for (std::size_t co = 0; co < cout; ++co) acc += kr[co] * gr[co];
                      dx[xoff + ci] += acc;
                    }
                    if (dk) {
                      const T a = xv[xoff + ci];
                      T* dkr = dk + koff + ci * cout;
                      for (std::size_t co = 0; co < cout; ++co) dkr[co] += a * gr[co];
                    }
                  }
                }
              }
            }
          }
        }
        if (has_bias) {
          const std::size_t ibn = t.input_id(self, 2);
          if (t.requires_grad_at(ibn)) {
            auto db = t.grad_ref(ibn).data();
            const std::size_t pixels = up.size() / cout;
            for (std::size_t p = 0; p < pixels; ++p) {
              for (std::size_t co = 0; co < cout; ++co) db[co] += up[p * cout + co];
            }
          }
        }
      });
}

template <typename T>
Var depthwise_conv2d(Tape<T>& tape, Var x, Var kernel,
                     std::optional<Var> bias, std::size_t stride,
                     Padding padding) {
  const auto& in = tape.value(x);
  const auto& k = tape.value(kernel);
  require_rank(k, 3, "depthwise_conv2d kernel");
  if (k.dim(0) != k.dim(1)) {
    fail(ErrorCode::kShape, "depthwise_conv2d: kernel must be square, got ",
         shape_string(k.shape()));
  }
  const ConvGeometry g = conv_geometry(in.shape(), k.dim(0), stride, padding,
                                       "depthwise_conv2d");
  const std::size_t c = g.cin;
  if (k.dim(2) != c) {
    fail(ErrorCode::kShape, "depthwise_conv2d: kernel has ", k.dim(2),
         " channels, input has ", c);
  }
  if (bias && tape.value(*bias).size() != c) {
    fail(ErrorCode::kShape, "depthwise_conv2d: bias length mismatch");
  }

  Tensor<T> out({g.n, g.oh, g.ow, c});
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        T* o = out.raw() + ((n * g.oh + oy) * g.ow + ox) * c;
        if (bias) {
          const auto& b = tape.value(*bias);
          for (std::size_t ch = 0; ch < c; ++ch) o[ch] = b[ch];
        }
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          std::size_t iy;
          if (!input_index(oy, ky, stride, g.pad_top, g.h, iy)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            std::size_t ix;
            if (!input_index(ox, kx, stride, g.pad_left, g.w, ix)) continue;
            const T* xi = in.raw() + ((n * g.h + iy) * g.w + ix) * c;
            const T* kk = k.raw() + (ky * g.k + kx) * c;
            for (std::size_t ch = 0; ch < c; ++ch) o[ch] += xi[ch] * kk[ch];
          }
        }
      }
    }
  }

  std::vector<Var> inputs{x, kernel};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  return tape.record(
      std::move(out), std::move(inputs),
      [g, c, stride, has_bias](Tape<T>& t, std::size_t self) {
        const std::size_t ixn = t.input_id(self, 0);
        const std::size_t ikn = t.input_id(self, 1);
        const auto& up = t.upstream(self);
        const auto& xv = t.value_at(ixn);
        const auto& kv = t.value_at(ikn);
        T* dx = t.requires_grad_at(ixn) ? t.grad_ref(ixn).raw() : nullptr;
        T* dk = t.requires_grad_at(ikn) ? t.grad_ref(ikn).raw() : nullptr;
        for (std::size_t n = 0; n < g.n; ++n) {
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const T* gr = up.raw() + ((n * g.oh + oy) * g.ow + ox) * c;
              for (std::size_t ky = 0; ky < g.k; ++ky) {
                std::size_t iy;
                if (!input_index(oy, ky, stride, g.pad_top, g.h, iy)) continue;
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                  std::size_t ix;
                  if (!input_index(ox, kx, stride, g.pad_left, g.w, ix)) continue;
                  const std::size_t xoff = ((n * g.h + iy) * g.w + ix) * c;
                  const std::size_t koff = (ky * g.k + kx) * c;
                  for (std::size_t ch = 0; ch < c; ++ch) {
                    if (dx) dx[xoff + ch] += kv[koff + ch] * gr[ch];
                    if (dk) dk[koff + ch] += xv[xoff + ch] * gr[ch];
                  }
                }
              }
            }
          }
        }
        if (has_bias) {
          const std::size_t ibn = t.input_id(self, 2);
          if (t.requires_grad_at(ibn)) {
            auto db = t.grad_ref(ibn).data();
            const std::size_t pixels = up.size() / c;
            for (std::size_t p = 0; p < pixels; ++p) {
              for (std::size_t ch = 0; ch < c; ++ch) db[ch] += up[p * c + ch];
            }
          }
        }
      });
}

template <typename T>
Var pointwise_conv(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias) {
  const auto& in = tape.value(x);
  const auto& k = tape.value(kernel);
  require_rank(in, 4, "pointwise_conv input");
  require_rank(k, 4, "pointwise_conv kernel");
  if (k.dim(0) != 1 || k.dim(1) != 1 || k.dim(2) != in.dim(3)) {
    fail(ErrorCode::kShape, "pointwise_conv: kernel ", shape_string(k.shape()),
         " incompatible with input ", shape_string(in.shape()));
  }
  const Shape in_shape = in.shape();
  const std::size_t cin = k.dim(2);
  const std::size_t cout = k.dim(3);
  const std::size_t pixels = in.size() / cin;
  Var flat = reshape(tape, x, Shape{pixels, cin});
  Var w = reshape(tape, kernel, Shape{cin, cout});
  Var b = bias ? *bias : tape.constant(Tensor<T>({cout}));
  if (tape.value(b).size() != cout) {
    fail(ErrorCode::kShape, "pointwise_conv: bias length mismatch");
  }
  Var y = dense(tape, flat, w, b);
  return reshape(tape, y, Shape{in_shape[0], in_shape[1], in_shape[2], cout});
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  const auto& in = tape.value(x);
  require_rank(in, 4, "global_avg_pool");
  const std::size_t n = in.dim(0), hw = in.dim(1) * in.dim(2), c = in.dim(3);
  Tensor<T> out({n, c});
  for (std::size_t b = 0; b < n; ++b) {
    T* o = out.raw() + b * c;
    for (std::size_t p = 0; p < hw; ++p) {
      const T* xi = in.raw() + (b * hw + p) * c;
      for (std::size_t ch = 0; ch < c; ++ch) o[ch] += xi[ch];
    }
    const T inv = T(1) / static_cast<T>(hw);
    for (std::size_t ch = 0; ch < c; ++ch) o[ch] *= inv;
  }
  return tape.record(std::move(out), {x}, [n, hw, c](Tape<T>& t, std::size_t self) {
    const std::size_t in_id = t.input_id(self, 0);
    if (!t.requires_grad_at(in_id)) return;
    const auto& g = t.upstream(self);
    auto d = t.grad_ref(in_id).data();
    const T inv = T(1) / static_cast<T>(hw);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t p = 0; p < hw; ++p) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          d[(b * hw + p) * c + ch] += g[b * c + ch] * inv;
        }
      }
    }
  });
}

template <typename T>
Var max_pool(Tape<T>& tape, Var x, std::size_t window, std::size_t stride) {
  const auto& in = tape.value(x);
  require_rank(in, 4, "max_pool");
  if (window == 0 || stride == 0) {
    fail(ErrorCode::kInvalidArgument, "max_pool: window and stride must be >= 1");
  }
  const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
  if (window > h || window > w) {
    fail(ErrorCode::kShape, "max_pool: window ", window, " larger than input ",
         shape_string(in.shape()));
  }
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  Tensor<T> out({n, oh, ow, c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = ((b * h + oy * stride) * w + ox * stride) * c + ch;
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx =
                  ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const std::size_t o = ((b * oh + oy) * ow + ox) * c + ch;
          out[o] = in[best];
          (*argmax)[o] = best;
        }
      }
    }
  }
  return tape.record(std::move(out), {x}, [argmax](Tape<T>& t, std::size_t self) {
    const std::size_t in_id = t.input_id(self, 0);
    if (!t.requires_grad_at(in_id)) return;
    const auto& g = t.upstream(self);
    auto d = t.grad_ref(in_id).data();
    for (std::size_t o = 0; o < argmax->size(); ++o) d[(*argmax)[o]] += g[o];
  });
}

template <typename T>
Var channel_scale(Tape<T>& tape, Var x, Var s) {
  const auto& in = tape.value(x);
  const auto& sv = tape.value(s);
  require_rank(in, 4, "channel_scale input");
  const std::size_t n = in.dim(0), hw = in.dim(1) * in.dim(2), c = in.dim(3);
  if (sv.size() != n * c) {
    fail(ErrorCode::kShape, "channel_scale: scales ", shape_string(sv.shape()),
         " do not match ", n, " x ", c, " channels");
  }
  Tensor<T> out(in.shape());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < hw; ++p) {
      const std::size_t off = (b * hw + p) * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[off + ch] = in[off + ch] * sv[b * c + ch];
      }
    }
  }
  return tape.record(std::move(out), {x, s}, [n, hw, c](Tape<T>& t, std::size_t self) {
    const std::size_t ix = t.input_id(self, 0);
    const std::size_t is = t.input_id(self, 1);
    const auto& g = t.upstream(self);
    const auto& xv = t.value_at(ix);
    const auto& sv2 = t.value_at(is);
    T* dx = t.requires_grad_at(ix) ? t.grad_ref(ix).raw() : nullptr;
    T* ds = t.requires_grad_at(is) ? t.grad_ref(is).raw() : nullptr;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t off = (b * hw + p) * c;
        for (std::size_t ch = 0; ch < c; ++ch) {
          if (dx) dx[off + ch] += g[off + ch] * sv2[b * c + ch];
          if (ds) ds[b * c + ch] += g[off + ch] * xv[off + ch];
        }
      }
    }
  });
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "dropout: rate must be in [0, 1), got ",
         rate);
  }
  if (!training || rate == 0.0) return x;
  const auto& in = tape.value(x);
  Tensor<T> mask(in.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (T& m : mask.data()) m = rng.uniform() < rate ? T(0) : keep_scale;
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * mask[i];
  return tape.record(std::move(out), {x},
                     [mask = std::move(mask)](Tape<T>& t, std::size_t self) {
                       const std::size_t in_id = t.input_id(self, 0);
                       if (!t.requires_grad_at(in_id)) return;
                       const auto& g = t.upstream(self);
                       auto d = t.grad_ref(in_id).data();
                       for (std::size_t i = 0; i < d.size(); ++i) {
                         d[i] += g[i] * mask[i];
                       }
                     });
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var pred, Var target) {
  const auto& p = tape.value(pred);
  const auto& y = tape.value(target);
  require_same_shape(p, y, "cross_entropy");
  if (p.rank() > 2) {
    fail(ErrorCode::kShape, "cross_entropy: expected [N, K] or [K], got ",
         shape_string(p.shape()));
  }
  const std::size_t rows = p.rank() == 2 ? p.dim(0) : 1;
  const T lo = static_cast<T>(kProbabilityClamp);
  const T hi = T(1) - lo;
  T total = T(0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T q = std::clamp(p[i], lo, hi);
    total -= y[i] * std::log(q);
  }
  total /= static_cast<T>(rows);
  return tape.record(
      Tensor<T>({1}, {total}), {pred, target},
      [rows, lo, hi](Tape<T>& t, std::size_t self) {
        const std::size_t ip = t.input_id(self, 0);
        const std::size_t iy = t.input_id(self, 1);
        const auto& pv = t.value_at(ip);
        const auto& yv = t.value_at(iy);
        const T g = t.upstream(self)[0] / static_cast<T>(rows);
        if (t.requires_grad_at(ip)) {
          auto d = t.grad_ref(ip).data();
          for (std::size_t i = 0; i < d.size(); ++i) {
            // The clamp is flat outside [lo, hi].
            if (pv[i] > lo && pv[i] < hi) d[i] -= g * yv[i] / pv[i];
          }
        }
        if (t.requires_grad_at(iy)) {
          auto d = t.grad_ref(iy).data();
          for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] -= g * std::log(std::clamp(pv[i], lo, hi));
          }
        }
      });
}

template <typename T>
Var mean_squared_error(Tape<T>& tape, Var pred, Var target) {
  const auto& p = tape.value(pred);
  const auto& y = tape.value(target);
  require_same_shape(p, y, "mean_squared_error");
  const std::size_t count = p.size();
  T total = T(0);
  for (std::size_t i = 0; i < count; ++i) {
    const T e = p[i] - y[i];
    total += e * e;
  }
  total /= static_cast<T>(count);
  return tape.record(
      Tensor<T>({1}, {total}), {pred, target},
      [count](Tape<T>& t, std::size_t self) {
        const std::size_t ip = t.input_id(self, 0);
        const std::size_t iy = t.input_id(self, 1);
        const auto& pv = t.value_at(ip);
        const auto& yv = t.value_at(iy);
        const T g = t.upstream(self)[0] * T(2) / static_cast<T>(count);
        if (t.requires_grad_at(ip)) {
          auto d = t.grad_ref(ip).data();
          for (std::size_t i = 0; i < count; ++i) d[i] += g * (pv[i] - yv[i]);
        }
        if (t.requires_grad_at(iy)) {
          auto d = t.grad_ref(iy).data();
          for (std::size_t i = 0; i < count; ++i) d[i] -= g * (pv[i] - yv[i]);
        }
      });
}

template <typename T>
Var rmse_loss(Tape<T>& tape, Var pred, Var target) {
  Var mse = mean_squared_error(tape, pred, target);
  const T floor = static_cast<T>(1e-12);
  const T v = std::sqrt(std::max(tape.value(mse)[0], floor));
  return tape.record(Tensor<T>({1}, {v}), {mse}, [floor](Tape<T>& t, std::size_t self) {
    const std::size_t in = t.input_id(self, 0);
    if (!t.requires_grad_at(in)) return;
    const T m = t.value_at(in)[0];
    if (m <= floor) return;
    t.grad_ref(in)[0] += t.upstream(self)[0] / (T(2) * t.value_at(self)[0]);
  });
}

#define MORPHNET_INSTANTIATE_OPS(T)                                            \
  template Tensor<T> he_init<T>(const Shape&, std::size_t, Rng&);              \
  template Var add<T>(Tape<T>&, Var, Var);                                     \
  template Var mul<T>(Tape<T>&, Var, Var);                                     \
  template Var scale<T>(Tape<T>&, Var, T);                                     \
  template Var square<T>(Tape<T>&, Var);                                       \
  template Var sum<T>(Tape<T>&, Var);                                          \
  template Var mean<T>(Tape<T>&, Var);                                         \
  template Var weighted_sum<T>(Tape<T>&, Var, const Tensor<T>&);               \
  template Var reshape<T>(Tape<T>&, Var, Shape);                               \
  template Var relu<T>(Tape<T>&, Var);                                         \
  template Var sigmoid<T>(Tape<T>&, Var);                                      \
  template Var softmax<T>(Tape<T>&, Var);                                      \
  template Var activate<T>(Tape<T>&, Var, Activation);                         \
  template Var dense<T>(Tape<T>&, Var, Var, Var, Activation);                  \
  template Var conv2d<T>(Tape<T>&, Var, Var, std::optional<Var>, std::size_t,  \
                         Padding);                                             \
  template Var depthwise_conv2d<T>(Tape<T>&, Var, Var, std::optional<Var>,     \
                                   std::size_t, Padding);                      \
  template Var pointwise_conv<T>(Tape<T>&, Var, Var, std::optional<Var>);      \
  template Var global_avg_pool<T>(Tape<T>&, Var);                              \
  template Var max_pool<T>(Tape<T>&, Var, std::size_t, std::size_t);           \
  template Var channel_scale<T>(Tape<T>&, Var, Var);                           \
  template Var dropout<T>(Tape<T>&, Var, double, bool, Rng&);                  \
  template Var cross_entropy<T>(Tape<T>&, Var, Var);                           \
  template Var mean_squared_error<T>(Tape<T>&, Var, Var);                      \
  template Var rmse_loss<T>(Tape<T>&, Var, Var);

MORPHNET_INSTANTIATE_OPS(float)
MORPHNET_INSTANTIATE_OPS(double)

}  // namespace morphnet::ad
