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
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cantus/nn/param.hpp"

namespace cantus::nn {

template <class T>
struct AdamWConfig {
  T lr = T(2e-4);
  T beta1 = T(0.8);
  T beta2 = T(0.99);
  T eps = T(1e-9);
  T weight_decay = T(0);
};

// Decoupled-weight-decay Adam over a fixed parameter set. Moment slots are
// exposed so checkpoints can round-trip the full optimizer state.
template <class T>
class AdamW {
 public:
  AdamW(std::vector<Param<T>*> params, AdamWConfig<T> cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->val.size(), T(0));
      v_[i].assign(params_[i]->val.size(), T(0));
    }
  }

  void set_lr(T lr) { cfg_.lr = lr; }
  T lr() const { return cfg_.lr; }

  void step() {
    ++step_;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(cfg_.beta1), step_));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(cfg_.beta2), step_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Param<T>& p = *params_[i];
      for (size_t j = 0; j < p.val.size(); ++j) {
        const T g = p.grad[j];
        m_[i][j] = cfg_.beta1 * m_[i][j] + (T(1) - cfg_.beta1) * g;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (T(1) - cfg_.beta2) * g * g;
        const T mhat = m_[i][j] / bc1;
        const T vhat = v_[i][j] / bc2;
        p.val[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p.val[j]);
      }
    }
  }

  const std::vector<Param<T>*>& params() const { return params_; }
  std::vector<T>& moment1(size_t i) { return m_[i]; }
  std::vector<T>& moment2(size_t i) { return v_[i]; }
  uint64_t step_count() const { return step_; }
  void set_step_count(uint64_t s) { step_ = s; }

 private:
  std::vector<Param<T>*> params_;
  AdamWConfig<T> cfg_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  uint64_t step_ = 0;
};

}  // namespace cantus::nn
