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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cantus/common/rng.hpp"

namespace cantus::nn {

inline size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

// One named trainable tensor. Values and gradients live here, outside any
// tape, so they persist across training steps.
template <class T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> val;
  std::vector<T> grad;

  size_t numel() const { return val.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Owns parameters in creation order; addresses stay stable (deque).
template <class T>
class ParamStore {
 public:
  Param<T>& create(const std::string& name, std::vector<int> shape) {
    if (by_name_.count(name)) {
      throw std::logic_error("param store: duplicate name " + name);
    }
    params_.emplace_back();
    Param<T>& p = params_.back();
    p.name = name;
    p.shape = std::move(shape);
    p.val.assign(shape_numel(p.shape), T(0));
    p.grad.assign(p.val.size(), T(0));
    by_name_[name] = &p;
    order_.push_back(&p);
    return p;
  }

  Param<T>* find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }
  const Param<T>* find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }

  const std::vector<Param<T>*>& all() { return order_; }
  std::vector<const Param<T>*> all() const {
    return std::vector<const Param<T>*>(order_.begin(), order_.end());
  }

  void zero_grad() {
    for (auto* p : order_) p->zero_grad();
  }

  size_t total_numel() const {
    size_t n = 0;
    for (auto* p : order_) n += p->numel();
    return n;
  }

 private:
  std::deque<Param<T>> params_;
  std::vector<Param<T>*> order_;
  std::unordered_map<std::string, Param<T>*> by_name_;
};

// Uniform(-bound, bound) init with a generator keyed on (seed, name) so a
// given config + seed always yields the same network regardless of
// construction interleaving.
template <class T>
void init_uniform(Param<T>& p, double bound, uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a(p.name)));
  for (auto& v : p.val) v = static_cast<T>(rng.uniform(-bound, bound));
}

// Kaiming-style bound for a layer with the given fan-in.
inline double fan_in_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace cantus::nn
