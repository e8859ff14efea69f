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

#include <string>

#include "cantus/nn/param.hpp"
#include "cantus/nn/tape.hpp"

namespace cantus::nn {

// Thin layer wrappers: each owns nothing, it registers its parameters in a
// ParamStore under "<prefix>.w" / "<prefix>.b" and replays the op on a tape.
// Weight init is uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded by the
// parameter name so construction order never changes the numbers.

template <class T>
struct Conv1d {
  Param<T>* w = nullptr;
  Param<T>* b = nullptr;
  int dilation = 1;

  Conv1d() = default;
  Conv1d(ParamStore<T>& ps, const std::string& prefix, int cin, int cout, int k, int dil,
         uint64_t seed)
      : dilation(dil) {
    w = &ps.create(prefix + ".w", {cout, cin, k});
    b = &ps.create(prefix + ".b", {cout});
    init_uniform(*w, fan_in_bound(cin * k), seed);
    init_uniform(*b, fan_in_bound(cin * k), seed);
  }

  typename Tape<T>::Var forward(Tape<T>& tape, typename Tape<T>::Var x) const {
    return tape.conv1d(x, tape.leaf(*w), tape.leaf(*b), dilation);
  }
};

template <class T>
struct ConvTranspose1d {
  Param<T>* w = nullptr;
  Param<T>* b = nullptr;
  int stride = 1;
  int pad = 0;

  ConvTranspose1d() = default;
  ConvTranspose1d(ParamStore<T>& ps, const std::string& prefix, int cin, int cout, int k,
                  int stride_, int pad_, uint64_t seed)
      : stride(stride_), pad(pad_) {
    w = &ps.create(prefix + ".w", {cin, cout, k});
    b = &ps.create(prefix + ".b", {cout});
    init_uniform(*w, fan_in_bound(cin * k), seed);
    init_uniform(*b, fan_in_bound(cin * k), seed);
  }

  typename Tape<T>::Var forward(Tape<T>& tape, typename Tape<T>::Var x) const {
    return tape.conv_transpose1d(x, tape.leaf(*w), tape.leaf(*b), stride, pad);
  }
};

template <class T>
struct Conv2d {
  Param<T>* w = nullptr;
  Param<T>* b = nullptr;
  int sh = 1, sw = 1, ph = 0, pw = 0;

  Conv2d() = default;
  Conv2d(ParamStore<T>& ps, const std::string& prefix, int cin, int cout, int kh, int kw,
         int sh_, int sw_, int ph_, int pw_, uint64_t seed)
      : sh(sh_), sw(sw_), ph(ph_), pw(pw_) {
    w = &ps.create(prefix + ".w", {cout, cin, kh, kw});
    b = &ps.create(prefix + ".b", {cout});
    init_uniform(*w, fan_in_bound(cin * kh * kw), seed);
    init_uniform(*b, fan_in_bound(cin * kh * kw), seed);
  }

  typename Tape<T>::Var forward(Tape<T>& tape, typename Tape<T>::Var x) const {
    return tape.conv2d(x, tape.leaf(*w), tape.leaf(*b), sh, sw, ph, pw);
  }
};

// y = W x + b as a column transform: x {Din} or {Din,1} -> {Dout,1}.
template <class T>
struct Linear {
  Param<T>* w = nullptr;
  Param<T>* b = nullptr;

  Linear() = default;
  Linear(ParamStore<T>& ps, const std::string& prefix, int din, int dout, uint64_t seed) {
    w = &ps.create(prefix + ".w", {dout, din});
    b = &ps.create(prefix + ".b", {dout});
    init_uniform(*w, fan_in_bound(din), seed);
    init_uniform(*b, fan_in_bound(din), seed);
  }

  typename Tape<T>::Var forward(Tape<T>& tape, typename Tape<T>::Var x) const {
    auto xc = x->shape.size() == 1 ? tape.reshape(x, {x->shape[0], 1}) : x;
    auto y = tape.matmul(tape.leaf(*w), xc);
    return tape.add_col(y, tape.leaf(*b));
  }
};

template <class T>
struct Embedding {
  Param<T>* table = nullptr;

  Embedding() = default;
  Embedding(ParamStore<T>& ps, const std::string& prefix, int vocab, int dim, uint64_t seed) {
    table = &ps.create(prefix + ".table", {vocab, dim});
    init_uniform(*table, T(0.1), seed);
  }

  typename Tape<T>::Var forward(Tape<T>& tape, const std::vector<int>& ids) const {
    return tape.embedding(tape.leaf(*table), ids);
  }
};

}  // namespace cantus::nn
