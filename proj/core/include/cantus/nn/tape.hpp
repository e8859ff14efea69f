// Copyright (c) 2026 Cantus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <cstring>
#include <deque>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cantus/dsp/audio.hpp"
#include "cantus/dsp/fft.hpp"
#include "cantus/nn/param.hpp"

namespace cantus::nn {

// Reverse-mode autodiff over dense tensors, define-by-run. A Tape owns every
// node created through it; creation order is a topological order, so
// backward() is a single reverse sweep. 2-d tensors are laid out
// channel-major: shape {C, T} stores row c = one channel over time.
template <class T>
struct Node {
  std::vector<int> shape;
  std::vector<T> val;
  std::vector<T> grad;  // allocated only when requires_grad
  bool requires_grad = false;
  std::function<void()> back;  // empty for leaves/constants
};

template <class T>
class Tape {
 public:
  using Var = Node<T>*;

  // ---- leaves --------------------------------------------------------------

  Var constant(std::vector<int> shape, std::vector<T> data) {
    if (shape_numel(shape) != data.size()) {
      throw std::logic_error("tape: constant data does not match shape");
    }
    Var n = make(std::move(shape), false);
    n->val = std::move(data);
    return n;
  }

  Var constant_scalar(T v) { return constant({1}, {v}); }

  // Parameter leaf. While param_grads_enabled(false) is in effect the leaf is
  // created without a gradient, which freezes the parameter for every op that
  // consumes this node (used to freeze G during the D update and vice versa).
  Var leaf(Param<T>& p) {
    auto& cache = param_grads_ ? leaf_cache_grad_ : leaf_cache_const_;
    auto it = cache.find(&p);
    if (it != cache.end()) return it->second;
    Var n = make(p.shape, param_grads_);
    n->val = p.val;
    if (param_grads_) param_leaves_.push_back({&p, n});
    cache[&p] = n;
    return n;
  }

  void param_grads_enabled(bool on) { param_grads_ = on; }
  bool param_grads_enabled() const { return param_grads_; }

  // ---- elementwise ---------------------------------------------------------

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var o = make(a->shape, a->requires_grad || b->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] + b->val[i];
    if (o->requires_grad) {
      o->back = [a, b, o] {
        if (a->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i];
        if (b->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) b->grad[i] += o->grad[i];
      };
    }
    return o;
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var o = make(a->shape, a->requires_grad || b->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] - b->val[i];
    if (o->requires_grad) {
      o->back = [a, b, o] {
        if (a->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i];
        if (b->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) b->grad[i] -= o->grad[i];
      };
    }
    return o;
  }

  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Var o = make(a->shape, a->requires_grad || b->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] * b->val[i];
    if (o->requires_grad) {
      o->back = [a, b, o] {
        if (a->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i] * b->val[i];
        if (b->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) b->grad[i] += o->grad[i] * a->val[i];
      };
    }
    return o;
  }

  Var div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Var o = make(a->shape, a->requires_grad || b->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] / b->val[i];
    if (o->requires_grad) {
      o->back = [a, b, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) {
          const T g = o->grad[i];
          if (a->requires_grad) a->grad[i] += g / b->val[i];
          if (b->requires_grad) b->grad[i] -= g * o->val[i] / b->val[i];
        }
      };
    }
    return o;
  }

  Var add_scalar(Var a, T c) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] + c;
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i];
      };
    }
    return o;
  }

  Var mul_scalar(Var a, T c) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] * c;
    if (o->requires_grad) {
      o->back = [a, o, c] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i] * c;
      };
    }
    return o;
  }

  Var exp_(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = std::exp(a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i] * o->val[i];
      };
    }
    return o;
  }

  Var log_(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = std::log(a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i] / a->val[i];
      };
    }
    return o;
  }

  Var tanh_(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = std::tanh(a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i)
          a->grad[i] += o->grad[i] * (T(1) - o->val[i] * o->val[i]);
      };
    }
    return o;
  }

  Var square(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] * a->val[i];
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i] * T(2) * a->val[i];
      };
    }
    return o;
  }

  Var sqrt_(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = std::sqrt(a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i)
          a->grad[i] += o->grad[i] * T(0.5) / o->val[i];
      };
    }
    return o;
  }

  Var abs_(Var a) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = std::fabs(a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) {
          const T s = a->val[i] > T(0) ? T(1) : (a->val[i] < T(0) ? T(-1) : T(0));
          a->grad[i] += o->grad[i] * s;
        }
      };
    }
    return o;
  }

  Var leaky_relu(Var a, T slope) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i)
      o->val[i] = a->val[i] > T(0) ? a->val[i] : slope * a->val[i];
    if (o->requires_grad) {
      o->back = [a, o, slope] {
        for (size_t i = 0; i < o->grad.size(); ++i)
          a->grad[i] += o->grad[i] * (a->val[i] > T(0) ? T(1) : slope);
      };
    }
    return o;
  }

  Var clamp(Var a, T lo, T hi) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i)
      o->val[i] = a->val[i] < lo ? lo : (a->val[i] > hi ? hi : a->val[i]);
    if (o->requires_grad) {
      o->back = [a, o, lo, hi] {
        for (size_t i = 0; i < o->grad.size(); ++i)
          if (a->val[i] >= lo && a->val[i] <= hi) a->grad[i] += o->grad[i];
      };
    }
    return o;
  }

  Var clamp_min(Var a, T lo) {
    Var o = make(a->shape, a->requires_grad);
    for (size_t i = 0; i < o->val.size(); ++i) o->val[i] = a->val[i] < lo ? lo : a->val[i];
    if (o->requires_grad) {
      o->back = [a, o, lo] {
        for (size_t i = 0; i < o->grad.size(); ++i)
          if (a->val[i] >= lo) a->grad[i] += o->grad[i];
      };
    }
    return o;
  }

  // ---- reductions ----------------------------------------------------------

  Var mean_all(Var a) {
    Var o = make({1}, a->requires_grad);
    double acc = 0.0;
    for (T v : a->val) acc += static_cast<double>(v);
    const T inv = T(1) / static_cast<T>(a->val.size());
    o->val[0] = static_cast<T>(acc) * inv;
    if (o->requires_grad) {
      o->back = [a, o, inv] {
        const T g = o->grad[0] * inv;
        for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
      };
    }
    return o;
  }

  Var sum_all(Var a) {
    Var o = make({1}, a->requires_grad);
    double acc = 0.0;
    for (T v : a->val) acc += static_cast<double>(v);
    o->val[0] = static_cast<T>(acc);
    if (o->requires_grad) {
      o->back = [a, o] {
        const T g = o->grad[0];
        for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
      };
    }
    return o;
  }

  // ---- linear algebra / shape ----------------------------------------------

  Var matmul(Var a, Var b) {
    check_rank(a, 2, "matmul lhs");
    check_rank(b, 2, "matmul rhs");
    const int m = a->shape[0], k = a->shape[1], k2 = b->shape[0], n = b->shape[1];
    if (k != k2) throw std::logic_error("matmul: inner dimensions differ");
    Var o = make({m, n}, a->requires_grad || b->requires_grad);
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const T av = a->val[i * k + p];
        if (av == T(0)) continue;
        const T* brow = &b->val[static_cast<size_t>(p) * n];
        T* orow = &o->val[static_cast<size_t>(i) * n];
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
    if (o->requires_grad) {
      o->back = [a, b, o, m, k, n] {
        for (int i = 0; i < m; ++i) {
          const T* grow = &o->grad[static_cast<size_t>(i) * n];
          for (int p = 0; p < k; ++p) {
            const T* brow = &b->val[static_cast<size_t>(p) * n];
            if (a->requires_grad) {
              T acc = T(0);
              for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
              a->grad[i * k + p] += acc;
            }
            if (b->requires_grad) {
              const T av = a->val[i * k + p];
              if (av != T(0)) {
                T* bg = &b->grad[static_cast<size_t>(p) * n];
                for (int j = 0; j < n; ++j) bg[j] += av * grow[j];
              }
            }
          }
        }
      };
    }
    return o;
  }

  Var transpose(Var a) {
    check_rank(a, 2, "transpose");
    const int r = a->shape[0], c = a->shape[1];
    Var o = make({c, r}, a->requires_grad);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) o->val[static_cast<size_t>(j) * r + i] = a->val[static_cast<size_t>(i) * c + j];
    if (o->requires_grad) {
      o->back = [a, o, r, c] {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            a->grad[static_cast<size_t>(i) * c + j] += o->grad[static_cast<size_t>(j) * r + i];
      };
    }
    return o;
  }

  Var reshape(Var a, std::vector<int> shape) {
    if (shape_numel(shape) != a->val.size()) {
      throw std::logic_error("reshape: element count mismatch");
    }
    Var o = make(std::move(shape), a->requires_grad);
    o->val = a->val;
    if (o->requires_grad) {
      o->back = [a, o] {
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i];
      };
    }
    return o;
  }

  // Concatenate along dim 0 (channels); every part must share the trailing
  // dimensions.
  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::logic_error("concat_rows: no inputs");
    std::vector<int> shape = parts[0]->shape;
    bool rg = false;
    int rows = 0;
    size_t tail = shape_numel(shape) / static_cast<size_t>(shape[0]);
    for (Var p : parts) {
      if (p->shape.size() != shape.size() ||
          shape_numel(p->shape) / static_cast<size_t>(p->shape[0]) != tail) {
        throw std::logic_error("concat_rows: trailing dimensions differ");
      }
      rows += p->shape[0];
      rg = rg || p->requires_grad;
    }
    shape[0] = rows;
    Var o = make(std::move(shape), rg);
    size_t off = 0;
    for (Var p : parts) {
      std::memcpy(o->val.data() + off, p->val.data(), p->val.size() * sizeof(T));
      off += p->val.size();
    }
    if (rg) {
      std::vector<Var> ps = parts;
      o->back = [ps, o] {
        size_t off2 = 0;
        for (Var p : ps) {
          if (p->requires_grad) {
            for (size_t i = 0; i < p->val.size(); ++i) p->grad[i] += o->grad[off2 + i];
          }
          off2 += p->val.size();
        }
      };
    }
    return o;
  }

  Var slice_rows(Var a, int r0, int len) {
    check_rank(a, 2, "slice_rows");
    const int r = a->shape[0], c = a->shape[1];
    if (r0 < 0 || len <= 0 || r0 + len > r) throw std::logic_error("slice_rows: out of range");
    Var o = make({len, c}, a->requires_grad);
    std::memcpy(o->val.data(), a->val.data() + static_cast<size_t>(r0) * c,
                o->val.size() * sizeof(T));
    if (o->requires_grad) {
      o->back = [a, o, r0, c] {
        const size_t base = static_cast<size_t>(r0) * c;
        for (size_t i = 0; i < o->grad.size(); ++i) a->grad[base + i] += o->grad[i];
      };
    }
    return o;
  }

  Var slice_cols(Var a, int c0, int len) {
    check_rank(a, 2, "slice_cols");
    const int r = a->shape[0], c = a->shape[1];
    if (c0 < 0 || len <= 0 || c0 + len > c) throw std::logic_error("slice_cols: out of range");
    Var o = make({r, len}, a->requires_grad);
    for (int i = 0; i < r; ++i)
      std::memcpy(o->val.data() + static_cast<size_t>(i) * len,
                  a->val.data() + static_cast<size_t>(i) * c + c0,
                  static_cast<size_t>(len) * sizeof(T));
    if (o->requires_grad) {
      o->back = [a, o, c0, r, c, len] {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < len; ++j)
            a->grad[static_cast<size_t>(i) * c + c0 + j] +=
                o->grad[static_cast<size_t>(i) * len + j];
      };
    }
    return o;
  }

  // Broadcast-add a column vector v (shape {C} or {C,1}) over time.
  Var add_col(Var a, Var v) {
    check_rank(a, 2, "add_col input");
    const int c = a->shape[0], t = a->shape[1];
    if (static_cast<int>(v->val.size()) != c) throw std::logic_error("add_col: size mismatch");
    Var o = make(a->shape, a->requires_grad || v->requires_grad);
    for (int i = 0; i < c; ++i) {
      const T vv = v->val[i];
      for (int j = 0; j < t; ++j)
        o->val[static_cast<size_t>(i) * t + j] = a->val[static_cast<size_t>(i) * t + j] + vv;
    }
    if (o->requires_grad) {
      o->back = [a, v, o, c, t] {
        if (a->requires_grad)
          for (size_t i = 0; i < o->grad.size(); ++i) a->grad[i] += o->grad[i];
        if (v->requires_grad) {
          for (int i = 0; i < c; ++i) {
            T acc = T(0);
            for (int j = 0; j < t; ++j) acc += o->grad[static_cast<size_t>(i) * t + j];
            v->grad[i] += acc;
          }
        }
      };
    }
    return o;
  }

  // Tile a column vector {C} or {C,1} into {C, t}.
  Var repeat_col(Var v, int t) {
    const int c = static_cast<int>(v->val.size());
    Var o = make({c, t}, v->requires_grad);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < t; ++j) o->val[static_cast<size_t>(i) * t + j] = v->val[i];
    if (o->requires_grad) {
      o->back = [v, o, c, t] {
        for (int i = 0; i < c; ++i) {
          T acc = T(0);
          for (int j = 0; j < t; ++j) acc += o->grad[static_cast<size_t>(i) * t + j];
          v->grad[i] += acc;
        }
      };
    }
    return o;
  }

  Var pad_cols(Var a, int new_t) {
    check_rank(a, 2, "pad_cols");
    const int c = a->shape[0], t = a->shape[1];
    if (new_t < t) throw std::logic_error("pad_cols: target shorter than input");
    Var o = make({c, new_t}, a->requires_grad);
    for (int i = 0; i < c; ++i)
      std::memcpy(o->val.data() + static_cast<size_t>(i) * new_t,
                  a->val.data() + static_cast<size_t>(i) * t, static_cast<size_t>(t) * sizeof(T));
    if (o->requires_grad) {
      o->back = [a, o, c, t, new_t] {
        for (int i = 0; i < c; ++i)
          for (int j = 0; j < t; ++j)
            a->grad[static_cast<size_t>(i) * t + j] += o->grad[static_cast<size_t>(i) * new_t + j];
      };
    }
    return o;
  }

  // ---- lookups / mixing ----------------------------------------------------

  // Gather rows of an embedding table {V, E} into an {E, T} feature map.
  Var embedding(Var table, std::vector<int> ids) {
    check_rank(table, 2, "embedding table");
    const int v = table->shape[0], e = table->shape[1];
    const int t = static_cast<int>(ids.size());
    for (int id : ids) {
      if (id < 0 || id >= v) throw std::invalid_argument("embedding: id out of range");
    }
    Var o = make({e, t}, table->requires_grad);
    for (int j = 0; j < t; ++j) {
      const T* row = &table->val[static_cast<size_t>(ids[j]) * e];
      for (int i = 0; i < e; ++i) o->val[static_cast<size_t>(i) * t + j] = row[i];
    }
    if (o->requires_grad) {
      o->back = [table, o, ids = std::move(ids), e, t] {
        for (int j = 0; j < t; ++j) {
          T* row = &table->grad[static_cast<size_t>(ids[j]) * e];
          for (int i = 0; i < e; ++i) row[i] += o->grad[static_cast<size_t>(i) * t + j];
        }
      };
    }
    return o;
  }

  Var softmax_vec(Var a) {
    check_rank(a, 1, "softmax_vec");
    Var o = make(a->shape, a->requires_grad);
    T mx = a->val[0];
    for (T v : a->val) mx = std::max(mx, v);
    double denom = 0.0;
    for (size_t i = 0; i < a->val.size(); ++i) {
      o->val[i] = std::exp(a->val[i] - mx);
      denom += static_cast<double>(o->val[i]);
    }
    for (auto& v : o->val) v = static_cast<T>(v / denom);
    if (o->requires_grad) {
      o->back = [a, o] {
        double dot = 0.0;
        for (size_t i = 0; i < o->val.size(); ++i)
          dot += static_cast<double>(o->grad[i]) * o->val[i];
        for (size_t i = 0; i < o->val.size(); ++i)
          a->grad[i] += o->val[i] * (o->grad[i] - static_cast<T>(dot));
      };
    }
    return o;
  }

  // r = sum_l alpha[l] * stack[l]; stack shape {L, D, T}, alpha {L} -> {D, T}.
  Var layer_combine(Var stack, Var alpha) {
    check_rank(stack, 3, "layer_combine stack");
    check_rank(alpha, 1, "layer_combine alpha");
    const int l = stack->shape[0], d = stack->shape[1], t = stack->shape[2];
    if (alpha->shape[0] != l) throw std::logic_error("layer_combine: layer count mismatch");
    Var o = make({d, t}, stack->requires_grad || alpha->requires_grad);
    const size_t plane = static_cast<size_t>(d) * t;
    for (int i = 0; i < l; ++i) {
      const T av = alpha->val[i];
      const T* src = &stack->val[i * plane];
      for (size_t j = 0; j < plane; ++j) o->val[j] += av * src[j];
    }
    if (o->requires_grad) {
      o->back = [stack, alpha, o, l, plane] {
        for (int i = 0; i < l; ++i) {
          const T* src = &stack->val[i * plane];
          if (alpha->requires_grad) {
            double acc = 0.0;
            for (size_t j = 0; j < plane; ++j)
              acc += static_cast<double>(o->grad[j]) * src[j];
            alpha->grad[i] += static_cast<T>(acc);
          }
          if (stack->requires_grad) {
            const T av = alpha->val[i];
            T* sg = &stack->grad[i * plane];
            for (size_t j = 0; j < plane; ++j) sg[j] += av * o->grad[j];
          }
        }
      };
    }
    return o;
  }

  // ---- convolutions ----------------------------------------------------------

  // Dilated 1-d convolution with same-length zero padding; odd kernel only.
  // x {Cin, T}, w {Cout, Cin, K}, b {Cout} -> {Cout, T}.
  Var conv1d(Var x, Var w, Var b, int dilation) {
    check_rank(x, 2, "conv1d input");
    check_rank(w, 3, "conv1d weight");
    const int cin = x->shape[0], t = x->shape[1];
    const int cout = w->shape[0], k = w->shape[2];
    if (w->shape[1] != cin) throw std::logic_error("conv1d: channel mismatch");
    if (k % 2 == 0) throw std::logic_error("conv1d: kernel must be odd");
    if (static_cast<int>(b->val.size()) != cout) throw std::logic_error("conv1d: bias mismatch");
    const int pad = dilation * (k - 1) / 2;

    Var o = make({cout, t}, x->requires_grad || w->requires_grad || b->requires_grad);
    for (int co = 0; co < cout; ++co) {
      T* orow = &o->val[static_cast<size_t>(co) * t];
      const T bv = b->val[co];
      for (int j = 0; j < t; ++j) orow[j] = bv;
      for (int ci = 0; ci < cin; ++ci) {
        const T* xrow = &x->val[static_cast<size_t>(ci) * t];
        for (int kk = 0; kk < k; ++kk) {
          const T wv = w->val[(static_cast<size_t>(co) * cin + ci) * k + kk];
          if (wv == T(0)) continue;
          const int off = dilation * kk - pad;
          const int j0 = std::max(0, -off);
          const int j1 = std::min(t, t - off);
          for (int j = j0; j < j1; ++j) orow[j] += wv * xrow[j + off];
        }
      }
    }
    if (o->requires_grad) {
      o->back = [x, w, b, o, cin, cout, t, k, dilation, pad] {
        for (int co = 0; co < cout; ++co) {
          const T* grow = &o->grad[static_cast<size_t>(co) * t];
          if (b->requires_grad) {
            T acc = T(0);
            for (int j = 0; j < t; ++j) acc += grow[j];
            b->grad[co] += acc;
          }
          for (int ci = 0; ci < cin; ++ci) {
            const T* xrow = &x->val[static_cast<size_t>(ci) * t];
            T* xg = x->requires_grad ? &x->grad[static_cast<size_t>(ci) * t] : nullptr;
            for (int kk = 0; kk < k; ++kk) {
              const size_t wi = (static_cast<size_t>(co) * cin + ci) * k + kk;
              const int off = dilation * kk - pad;
              const int j0 = std::max(0, -off);
              const int j1 = std::min(t, t - off);
              if (w->requires_grad) {
                T acc = T(0);
                for (int j = j0; j < j1; ++j) acc += grow[j] * xrow[j + off];
                w->grad[wi] += acc;
              }
              if (xg) {
                const T wv = w->val[wi];
                if (wv != T(0))
                  for (int j = j0; j < j1; ++j) xg[j + off] += wv * grow[j];
              }
            }
          }
        }
      };
    }
    return o;
  }

  // Transposed 1-d convolution. x {Cin, Tin}, w {Cin, Cout, K}, b {Cout};
  // output length (Tin - 1) * stride + K - 2 * pad.
  Var conv_transpose1d(Var x, Var w, Var b, int stride, int pad) {
    check_rank(x, 2, "conv_transpose1d input");
    check_rank(w, 3, "conv_transpose1d weight");
    const int cin = x->shape[0], tin = x->shape[1];
    const int cout = w->shape[1], k = w->shape[2];
    if (w->shape[0] != cin) throw std::logic_error("conv_transpose1d: channel mismatch");
    if (static_cast<int>(b->val.size()) != cout)
      throw std::logic_error("conv_transpose1d: bias mismatch");
    const int tout = (tin - 1) * stride + k - 2 * pad;
    if (tout <= 0) throw std::logic_error("conv_transpose1d: empty output");

    Var o = make({cout, tout}, x->requires_grad || w->requires_grad || b->requires_grad);
    for (int co = 0; co < cout; ++co) {
      T* orow = &o->val[static_cast<size_t>(co) * tout];
      const T bv = b->val[co];
      for (int j = 0; j < tout; ++j) orow[j] = bv;
    }
    // Valid input range for kernel tap kk: ti with 0 <= ti*stride+kk-pad < tout.
    const auto trange = [stride, pad, tout, tin](int kk, int& t0, int& t1) {
      const int off = kk - pad;
      t0 = off >= 0 ? 0 : (-off + stride - 1) / stride;
      t1 = std::min(tin, off >= tout ? 0 : (tout - 1 - off) / stride + 1);
    };

    for (int ci = 0; ci < cin; ++ci) {
      const T* xrow = &x->val[static_cast<size_t>(ci) * tin];
      for (int co = 0; co < cout; ++co) {
        T* orow = &o->val[static_cast<size_t>(co) * tout];
        for (int kk = 0; kk < k; ++kk) {
          const T wv = w->val[(static_cast<size_t>(ci) * cout + co) * k + kk];
          if (wv == T(0)) continue;
          int t0, t1;
          trange(kk, t0, t1);
          T* obase = orow + (kk - pad);
          for (int ti = t0; ti < t1; ++ti) obase[static_cast<long>(ti) * stride] += wv * xrow[ti];
        }
      }
    }
    if (o->requires_grad) {
      o->back = [x, w, b, o, cin, cout, tin, tout, k, pad, stride, trange] {
        if (b->requires_grad) {
          for (int co = 0; co < cout; ++co) {
            const T* grow = &o->grad[static_cast<size_t>(co) * tout];
            T acc = T(0);
            for (int j = 0; j < tout; ++j) acc += grow[j];
            b->grad[co] += acc;
          }
        }
        for (int ci = 0; ci < cin; ++ci) {
          const T* xrow = &x->val[static_cast<size_t>(ci) * tin];
          T* xg = x->requires_grad ? &x->grad[static_cast<size_t>(ci) * tin] : nullptr;
          for (int co = 0; co < cout; ++co) {
            const T* grow = &o->grad[static_cast<size_t>(co) * tout];
            for (int kk = 0; kk < k; ++kk) {
              const size_t wi = (static_cast<size_t>(ci) * cout + co) * k + kk;
              int t0, t1;
              trange(kk, t0, t1);
              const T* gbase = grow + (kk - pad);
              T wacc = T(0);
              const T wv = w->val[wi];
              if (w->requires_grad && xg) {
                for (int ti = t0; ti < t1; ++ti) {
                  const T g = gbase[static_cast<long>(ti) * stride];
                  wacc += g * xrow[ti];
                  xg[ti] += wv * g;
                }
              } else if (w->requires_grad) {
                for (int ti = t0; ti < t1; ++ti) wacc += gbase[static_cast<long>(ti) * stride] * xrow[ti];
              } else if (xg) {
                for (int ti = t0; ti < t1; ++ti) xg[ti] += wv * gbase[static_cast<long>(ti) * stride];
              }
              if (w->requires_grad) w->grad[wi] += wacc;
            }
          }
        }
      };
    }
    return o;
  }

  // 2-d convolution. x {C, H, W}, w {Co, C, KH, KW}, b {Co}; zero padding.
  Var conv2d(Var x, Var w, Var b, int sh, int sw, int ph, int pw) {
    check_rank(x, 3, "conv2d input");
    check_rank(w, 4, "conv2d weight");
    const int c = x->shape[0], h = x->shape[1], wd = x->shape[2];
    const int co = w->shape[0], kh = w->shape[2], kw = w->shape[3];
    if (w->shape[1] != c) throw std::logic_error("conv2d: channel mismatch");
    if (static_cast<int>(b->val.size()) != co) throw std::logic_error("conv2d: bias mismatch");
    const int ho = (h + 2 * ph - kh) / sh + 1;
    const int wo = (wd + 2 * pw - kw) / sw + 1;
    if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv2d: input smaller than kernel");

    // Valid output-column range per kernel column kj (j with 0 <= j*sw+kj-pw
    // < wd), precomputed once: kernels are tiny and rows are long, so the
    // bounds are loop invariants of every inner loop below.
    std::vector<int> jlo(kw), jhi(kw);
    for (int kj = 0; kj < kw; ++kj) {
      const int off = kj - pw;
      jlo[kj] = off >= 0 ? 0 : (-off + sw - 1) / sw;
      jhi[kj] = std::min(wo, off >= wd ? 0 : (wd - 1 - off) / sw + 1);
    }

    // Plane-sweep accumulation: for each (out channel, in channel, kernel
    // element) the full output plane is swept once. That keeps exactly two
    // sequential memory streams live (one input plane, one output plane),
    // which the hardware prefetchers follow well; finishing one output row
    // at a time instead measures slower because it interleaves c*kh streams.
    Var o = make({co, ho, wo}, x->requires_grad || w->requires_grad || b->requires_grad);
    for (int oc = 0; oc < co; ++oc) {
      T* oplane = &o->val[static_cast<size_t>(oc) * ho * wo];
      const T bv = b->val[oc];
      for (int i = 0; i < ho * wo; ++i) oplane[i] = bv;
      for (int ic = 0; ic < c; ++ic) {
        const T* xplane = &x->val[static_cast<size_t>(ic) * h * wd];
        for (int ki = 0; ki < kh; ++ki) {
          for (int kj = 0; kj < kw; ++kj) {
            const T wv = w->val[((static_cast<size_t>(oc) * c + ic) * kh + ki) * kw + kj];
            const int j0 = jlo[kj], j1 = jhi[kj];
            if (j0 >= j1) continue;
            const int woff = kj - pw;
            const int n = j1 - j0;
            for (int i = 0; i < ho; ++i) {
              const int hi = i * sh + ki - ph;
              if (hi < 0 || hi >= h) continue;
              const T* xp = &xplane[static_cast<size_t>(hi) * wd + woff +
                                    static_cast<size_t>(j0) * sw];
              T* op = &oplane[static_cast<size_t>(i) * wo + j0];
              if (sw == 1) {
                for (int k = 0; k < n; ++k) op[k] += wv * xp[k];
              } else {
                for (int k = 0; k < n; ++k) op[k] += wv * xp[static_cast<size_t>(k) * sw];
              }
            }
          }
        }
      }
    }
    if (o->requires_grad) {
      o->back = [x, w, b, o, c, h, wd, co, kh, kw, sh, sw, ph, pw, ho, wo, jlo, jhi] {
        for (int oc = 0; oc < co; ++oc) {
          const T* gplane = &o->grad[static_cast<size_t>(oc) * ho * wo];
          if (b->requires_grad) {
            T acc = T(0);
            for (int i = 0; i < ho * wo; ++i) acc += gplane[i];
            b->grad[oc] += acc;
          }
          for (int ic = 0; ic < c; ++ic) {
            const T* xplane = &x->val[static_cast<size_t>(ic) * h * wd];
            T* xgp = x->requires_grad ? &x->grad[static_cast<size_t>(ic) * h * wd] : nullptr;
            for (int ki = 0; ki < kh; ++ki) {
              for (int kj = 0; kj < kw; ++kj) {
                const size_t widx = ((static_cast<size_t>(oc) * c + ic) * kh + ki) * kw + kj;
                const T wv = w->val[widx];
                T wacc = T(0);
                const int j0 = jlo[kj], j1 = jhi[kj];
                if (j0 >= j1) continue;
                const int woff = kj - pw;
                const int n = j1 - j0;
                for (int i = 0; i < ho; ++i) {
                  const int hi = i * sh + ki - ph;
                  if (hi < 0 || hi >= h) continue;
                  const size_t xoff = static_cast<size_t>(hi) * wd + woff +
                                      static_cast<size_t>(j0) * sw;
                  const T* gp = &gplane[static_cast<size_t>(i) * wo + j0];
                  if (w->requires_grad) {
                    const T* xp = &xplane[xoff];
                    if (sw == 1) {
                      for (int k = 0; k < n; ++k) wacc += gp[k] * xp[k];
                    } else {
                      for (int k = 0; k < n; ++k) wacc += gp[k] * xp[static_cast<size_t>(k) * sw];
                    }
                  }
                  if (xgp) {
                    T* xgrow = &xgp[xoff];
                    if (sw == 1) {
                      for (int k = 0; k < n; ++k) xgrow[k] += wv * gp[k];
                    } else {
                      for (int k = 0; k < n; ++k) xgrow[static_cast<size_t>(k) * sw] += wv * gp[k];
                    }
                  }
                }
                if (w->requires_grad) w->grad[widx] += wacc;
              }
            }
          }
        }
      };
    }
    return o;
  }

  // Non-overlapping average pooling along time; remainder samples dropped.
  Var avg_pool1d(Var x, int k) {
    check_rank(x, 2, "avg_pool1d");
    const int c = x->shape[0], t = x->shape[1];
    const int to = t / k;
    if (to <= 0) throw std::invalid_argument("avg_pool1d: input shorter than window");
    Var o = make({c, to}, x->requires_grad);
    const T inv = T(1) / static_cast<T>(k);
    for (int i = 0; i < c; ++i) {
      const T* xrow = &x->val[static_cast<size_t>(i) * t];
      T* orow = &o->val[static_cast<size_t>(i) * to];
      for (int j = 0; j < to; ++j) {
        T acc = T(0);
        for (int u = 0; u < k; ++u) acc += xrow[j * k + u];
        orow[j] = acc * inv;
      }
    }
    if (o->requires_grad) {
      o->back = [x, o, c, t, to, k, inv] {
        for (int i = 0; i < c; ++i) {
          T* xg = &x->grad[static_cast<size_t>(i) * t];
          const T* grow = &o->grad[static_cast<size_t>(i) * to];
          for (int j = 0; j < to; ++j) {
            const T g = grow[j] * inv;
            for (int u = 0; u < k; ++u) xg[j * k + u] += g;
          }
        }
      };
    }
    return o;
  }

  // ---- spectral -------------------------------------------------------------

  // Power spectrogram |FFT|^2 of a 1-d signal -> {n_fft/2 + 1, frames}.
  // centered = true: frames centered at t * hop with reflect padding,
  // frame count ceil(n / hop) (the mel analysis convention). centered =
  // false: valid framing, requires n >= n_fft and window length == n_fft.
  // The backward pass is the exact rFFT adjoint.
  Var stft_power(Var x, int n_fft, int hop, const std::vector<double>& window, bool centered) {
    check_rank(x, 1, "stft_power");
    const long n = static_cast<long>(x->val.size());
    const int win = static_cast<int>(window.size());
    if (win > n_fft) throw std::logic_error("stft_power: window longer than n_fft");
    if (!centered && win != n_fft) {
      throw std::logic_error("stft_power: valid framing expects window == n_fft");
    }
    int frames;
    if (centered) {
      if (n < 1) throw std::invalid_argument("stft_power: empty input");
      frames = dsp::frame_count(static_cast<size_t>(n), hop);
    } else {
      if (n < n_fft) {
        throw std::invalid_argument("stft_power: input shorter than one frame");
      }
      frames = 1 + static_cast<int>((n - n_fft) / hop);
    }
    const int bins = n_fft / 2 + 1;
    const int woff = (n_fft - win) / 2;

    auto wt = std::make_shared<std::vector<T>>(win);
    for (int i = 0; i < win; ++i) (*wt)[i] = static_cast<T>(window[i]);

    Var o = make({bins, frames}, x->requires_grad);
    std::vector<std::complex<T>> spec(n_fft);
    for (int f = 0; f < frames; ++f) {
      std::fill(spec.begin(), spec.end(), std::complex<T>(0, 0));
      const long start = centered ? static_cast<long>(f) * hop - win / 2
                                  : static_cast<long>(f) * hop;
      for (int j = 0; j < win; ++j) {
        const long src = centered ? dsp::reflect_index(start + j, n) : start + j;
        spec[woff + j] = std::complex<T>(x->val[src] * (*wt)[j], T(0));
      }
      dsp::fft_inplace(spec.data(), spec.size(), -1);
      for (int k = 0; k < bins; ++k) {
        o->val[static_cast<size_t>(k) * frames + f] =
            spec[k].real() * spec[k].real() + spec[k].imag() * spec[k].imag();
      }
    }
    if (o->requires_grad) {
      o->back = [x, o, n, n_fft, hop, win, woff, frames, bins, wt, centered] {
        std::vector<std::complex<T>> spec(n_fft);
        std::vector<std::complex<T>> gs(n_fft);
        for (int f = 0; f < frames; ++f) {
          // Recompute this frame's spectrum (cheaper than caching them all).
          std::fill(spec.begin(), spec.end(), std::complex<T>(0, 0));
          const long start = centered ? static_cast<long>(f) * hop - win / 2
                                      : static_cast<long>(f) * hop;
          for (int j = 0; j < win; ++j) {
            const long src = centered ? dsp::reflect_index(start + j, n) : start + j;
            spec[woff + j] = std::complex<T>(x->val[src] * (*wt)[j], T(0));
          }
          dsp::fft_inplace(spec.data(), spec.size(), -1);
          // d|X|^2 -> complex gradient, then the adjoint transform
          // g[n] = Re(sum_{k<=N/2} C_k exp(+2 pi i k n / N)).
          std::fill(gs.begin(), gs.end(), std::complex<T>(0, 0));
          for (int k = 0; k < bins; ++k) {
            const T g = o->grad[static_cast<size_t>(k) * frames + f];
            if (g != T(0)) {
              gs[k] = std::complex<T>(T(2) * spec[k].real() * g, T(2) * spec[k].imag() * g);
            }
          }
          dsp::fft_inplace(gs.data(), gs.size(), +1);
          for (int j = 0; j < win; ++j) {
            const long src = centered ? dsp::reflect_index(start + j, n) : start + j;
            x->grad[src] += gs[woff + j].real() * (*wt)[j];
          }
        }
      };
    }
    return o;
  }

  // ---- driver ---------------------------------------------------------------

  // Reverse sweep from a scalar loss. Parameter gradients are flushed into
  // their Param::grad accumulators at the end.
  void backward(Var loss) {
    if (loss->val.size() != 1) throw std::logic_error("backward: loss must be scalar");
    if (!loss->requires_grad) return;
    loss->grad[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>* node = it->get();
      if (node->requires_grad && node->back) node->back();
    }
    for (auto& [p, node] : param_leaves_) {
      for (size_t i = 0; i < node->grad.size(); ++i) p->grad[i] += node->grad[i];
    }
  }

  bool all_values_finite() const {
    for (const auto& node : nodes_) {
      for (T v : node->val) {
        if (!std::isfinite(static_cast<double>(v))) return false;
      }
    }
    return true;
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  Var make(std::vector<int> shape, bool requires_grad) {
    nodes_.emplace_back(std::make_unique<Node<T>>());
    Node<T>* n = nodes_.back().get();
    n->shape = std::move(shape);
    n->val.assign(shape_numel(n->shape), T(0));
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->val.size(), T(0));
    return n;
  }

  static void check_rank(Var a, size_t rank, const char* what) {
    if (a->shape.size() != rank) {
      throw std::logic_error(std::string(what) + ": expected rank " + std::to_string(rank));
    }
  }

  static void check_same_shape(Var a, Var b, const char* what) {
    if (a->shape != b->shape) {
      throw std::logic_error(std::string(what) + ": shape mismatch");
    }
  }

  std::deque<std::unique_ptr<Node<T>>> nodes_;
  std::vector<std::pair<Param<T>*, Node<T>*>> param_leaves_;
  std::unordered_map<const Param<T>*, Node<T>*> leaf_cache_grad_;
  std::unordered_map<const Param<T>*, Node<T>*> leaf_cache_const_;
  bool param_grads_ = true;
};

}  // namespace cantus::nn
