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

#ifndef ATRAJ_LOSSES_HPP_
#define ATRAJ_LOSSES_HPP_

#include <cmath>
#include <numbers>

#include "atraj/hyperparams.hpp"
#include "atraj/model.hpp"

namespace atraj {

/// Per-vehicle weights [B, N]: 1 / (valid vehicles of the scene * B) for
/// valid slots, 0 for padding. Losses are means over vehicles, then over
/// scenes.
template <typename S>
Tensor<S> vehicle_weights(const KeyMask &mask) {
  Tensor<S> w({mask.batch, mask.n_keys});
  for (std::size_t b = 0; b < mask.batch; ++b) {
    std::size_t valid = 0;
    for (std::size_t i = 0; i < mask.n_keys; ++i) valid += mask.is_valid(b, i);
    if (valid == 0) throw DegenerateError("loss over a scene without valid vehicles");
    const S value = static_cast<S>(1.0 / (static_cast<double>(valid) * mask.batch));
    for (std::size_t i = 0; i < mask.n_keys; ++i) {
      if (mask.is_valid(b, i)) w[b * mask.n_keys + i] = value;
    }
  }
  return w;
}

/// -mean over valid vehicles of sum_t log N(y_t | mu_t, Sigma_t).
template <typename S>
Var<S> nll_loss(const ForecastVars<S> &f, Var<S> y, const KeyMask &mask) {
  const Shape &shape = f.mu.shape();  // [B, N, T, 2]
  detail::require_same_shape("nll_loss", shape, y.shape());
  Var<S> det = sub(mul(f.s00, f.s11), mul(f.s01, f.s01));
  if ((det.value().values().array() <= S(0)).any()) {
    throw ContractError("internal invariant violated: covariance not positive-definite");
  }
  Var<S> d = sub(y, f.mu);
  Var<S> dx = slice_last(d, 0, 1);
  Var<S> dy = slice_last(d, 1, 1);
  Var<S> quad_num =
      add(sub(mul(f.s11, mul(dx, dx)), scale(mul(f.s01, mul(dx, dy)), 2.0)),
          mul(f.s00, mul(dy, dy)));
  Var<S> quad = div(quad_num, det);
  Var<S> per_step = add_scalar(add(scale(log(det), 0.5), scale(quad, 0.5)),
                               std::log(2.0 * std::numbers::pi));

  const std::size_t B = shape[0], N = shape[1], T = shape[2];
  const Tensor<S> wv = vehicle_weights<S>(mask);
  Tensor<S> w({B, N, T, 1});
  for (std::size_t k = 0; k < B * N; ++k) {
    for (std::size_t t = 0; t < T; ++t) w[k * T + t] = wv[k];
  }
  return weighted_sum(per_step, std::move(w));
}

/// mean over valid vehicles of ||Y_i - mu_i|| with the norm over the
/// flattened T x 2 residual.
template <typename S>
Var<S> recon_loss(const ForecastVars<S> &f, Var<S> y, const KeyMask &mask) {
  const Shape &shape = f.mu.shape();
  detail::require_same_shape("recon_loss", shape, y.shape());
  const std::size_t B = shape[0], N = shape[1], T = shape[2];
  Var<S> d = reshape(sub(y, f.mu), {B, N, 2 * T});
  Var<S> norms = sqrt(sum_last(mul(d, d)));
  return weighted_sum(norms, vehicle_weights<S>(mask));
}

template <typename S>
Var<S> total_loss(const ForecastVars<S> &f, Var<S> y, const KeyMask &mask,
                  const LossWeights &w) {
  w.validate();
  if (w.w_recon == 0.0) return scale(nll_loss(f, y, mask), w.w_nll);
  if (w.w_nll == 0.0) return scale(recon_loss(f, y, mask), w.w_recon);
  return add(scale(nll_loss(f, y, mask), w.w_nll),
             scale(recon_loss(f, y, mask), w.w_recon));
}

} // namespace atraj

#endif // ATRAJ_LOSSES_HPP_
