/* Copyright 2026 The atraj Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATRAJ_ADAM_HPP_
#define ATRAJ_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "atraj/tensor.hpp"

namespace atraj {

template <typename S>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Vector<S>> m;
  std::map<std::string, Vector<S>> v;
};

/// One bias-corrected Adam update of every tensor in `params` from its
/// populated gradient.
template <typename S>
void adam_step(std::map<std::string, Tensor<S>> &params, AdamState<S> &state) {
  for (const auto &[name, t] : params) {
    if (!t.requires_grad() || static_cast<std::size_t>(t.grad().size()) != t.size()) {
      throw ContractError("adam_step: missing gradient for '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const S b1 = static_cast<S>(state.beta1), b2 = static_cast<S>(state.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(state.beta1, t));
  const S c2 = static_cast<S>(1.0 - std::pow(state.beta2, t));
  const S lr = static_cast<S>(state.lr), eps = static_cast<S>(state.eps);
  for (auto &[name, tensor] : params) {
    const Vector<S> &g = tensor.grad();
    auto &m = state.m[name];
    auto &v = state.v[name];
    if (m.size() != g.size()) m = Vector<S>::Zero(g.size());
    if (v.size() != g.size()) v = Vector<S>::Zero(g.size());
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
    const auto m_hat = m.array() / c1;
    const auto v_hat = v.array() / c2;
    tensor.values().array() -= lr * m_hat / (v_hat.sqrt() + eps);
  }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
template <typename S>
double clip_grad_norm(std::map<std::string, Tensor<S>> &params, double max_norm) {
  double sq = 0.0;
  for (const auto &[name, t] : params) {
    if (t.requires_grad()) sq += static_cast<double>(t.grad().squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const S k = static_cast<S>(max_norm / norm);
    for (auto &[name, t] : params) {
      if (t.requires_grad()) t.grad() *= k;
    }
  }
  return norm;
}

} // namespace atraj

#endif // ATRAJ_ADAM_HPP_
