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

#include "cantus/gan/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace cantus::gan {

double kl_divergence_mean(const MatD& mu_q, const MatD& lv_q, const MatD& mu_p,
                          const MatD& lv_p) {
  const size_t n = mu_q.v.size();
  if (lv_q.v.size() != n || mu_p.v.size() != n || lv_p.v.size() != n || n == 0) {
    throw std::invalid_argument("kl_divergence_mean: shape mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = mu_q.v[i] - mu_p.v[i];
    acc += 0.5 * (lv_p.v[i] - lv_q.v[i]) +
           (std::exp(lv_q.v[i]) + d * d) / (2.0 * std::exp(lv_p.v[i])) - 0.5;
  }
  return acc / static_cast<double>(n);
}

}  // namespace cantus::gan
