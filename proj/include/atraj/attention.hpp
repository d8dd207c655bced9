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

#ifndef ATRAJ_ATTENTION_HPP_
#define ATRAJ_ATTENTION_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "atraj/ops.hpp"

namespace atraj {

/// Validity of attention keys, laid out [batch, n_keys]. An empty `valid`
/// vector means every key is valid.
struct KeyMask {
  std::size_t batch = 1;
  std::size_t n_keys = 0;
  std::vector<std::uint8_t> valid;

  static KeyMask all(std::size_t batch, std::size_t n_keys) {
    return {batch, n_keys, {}};
  }

  bool all_valid() const {
    for (auto v : valid) {
      if (!v) return false;
    }
    return true;
  }

  bool is_valid(std::size_t b, std::size_t k) const {
    return valid.empty() || valid[b * n_keys + k] != 0;
  }
};

/// Additive logit bias shaped like `logits_shape` = [..., n_q, n_k]: zero
/// for valid keys and kMaskLogit for masked ones.
template <typename S>
Tensor<S> mask_bias(const KeyMask &mask, const Shape &logits_shape) {
  const std::size_t n_k = logits_shape.back();
  const std::size_t n_q = logits_shape[logits_shape.size() - 2];
  const std::size_t batch = numel(logits_shape) / (n_q * n_k);
  if (mask.n_keys != n_k || mask.batch != batch ||
      (!mask.valid.empty() && mask.valid.size() != batch * n_k)) {
    throw DimensionError("key mask [" + std::to_string(mask.batch) + ", " +
                         std::to_string(mask.n_keys) + "] vs logits " +
                         shape_str(logits_shape));
  }
  Tensor<S> bias(logits_shape);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < n_k; ++k) {
      if (mask.is_valid(b, k)) continue;
      for (std::size_t q = 0; q < n_q; ++q) {
        bias[(b * n_q + q) * n_k + k] = static_cast<S>(kMaskLogit);
      }
    }
  }
  return bias;
}

template <typename S>
struct ScaledDotResult {
  Var<S> output;
  Var<S> attention;  // [..., n_q, n_k], row-stochastic
  Var<S> logits;     // QK^T / sqrt(d_k), before masking
};

/// softmax(Q K^T / sqrt(d_k) + mask) V.
template <typename S>
ScaledDotResult<S> scaled_dot_attention(Var<S> q, Var<S> k, Var<S> v,
                                        const KeyMask &mask) {
  if (q.extent(-1) != k.extent(-1) || k.extent(-2) != v.extent(-2)) {
    throw DimensionError("attention: Q " + shape_str(q.shape()) + ", K " +
                         shape_str(k.shape()) + ", V " + shape_str(v.shape()));
  }
  const double d_k = static_cast<double>(k.extent(-1));
  Var<S> logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d_k));
  Var<S> masked = logits;
  if (!mask.all_valid()) {
    masked = add(logits, q.graph->constant(mask_bias<S>(mask, logits.shape())));
  }
  Var<S> attn = softmax(masked, -1);
  return {matmul(attn, v), attn, logits};
}

struct MultiHeadConfig {
  std::size_t heads = 4;
  std::size_t d_q_in = 16;
  std::size_t d_kv_in = 16;
  std::size_t d_head = 8;
  std::size_t d_out = 16;

  void validate() const {
    if (heads < 1 || d_head < 1 || d_q_in < 1 || d_kv_in < 1) {
      throw ParameterError("multi-head config needs positive extents");
    }
    if (d_out != d_q_in) {
      throw ParameterError("multi-head d_out " + std::to_string(d_out) +
                           " must equal d_q_in " + std::to_string(d_q_in) +
                           " for the residual connection");
    }
  }
};

/// Per-head projections W_i^Q [d_q_in, d_head], W_i^K and W_i^V
/// [d_kv_in, d_head], and the output projection [heads * d_head, d_out].
template <typename S>
struct MultiHeadWeights {
  std::vector<Var<S>> query;
  std::vector<Var<S>> key;
  std::vector<Var<S>> value;
  Var<S> output;
};

template <typename S>
struct AttentionBlockWeights {
  MultiHeadWeights<S> heads;
  Var<S> ln_gain;
  Var<S> ln_bias;
};

template <typename S>
struct MultiHeadResult {
  Var<S> output;
  std::vector<ScaledDotResult<S>> heads;
};

namespace detail {

inline void expect_shape(const char *what, const Shape &got, const Shape &want) {
  if (got != want) {
    throw DimensionError(std::string(what) + " has shape " + shape_str(got) +
                         ", config expects " + shape_str(want));
  }
}

} // namespace detail

/// Concat(head_1, ..., head_h) W^O with head_i = Attention(Q W_i^Q,
/// K W_i^K, V W_i^V).
template <typename S>
MultiHeadResult<S> multi_head(Var<S> q_in, Var<S> k_in, Var<S> v_in,
                              const KeyMask &mask, const MultiHeadConfig &cfg,
                              const MultiHeadWeights<S> &w) {
  cfg.validate();
  if (w.query.size() != cfg.heads || w.key.size() != cfg.heads ||
      w.value.size() != cfg.heads) {
    throw DimensionError("multi-head weights hold " +
                         std::to_string(w.query.size()) + " heads, config " +
                         std::to_string(cfg.heads));
  }
  if (q_in.extent(-1) != cfg.d_q_in || k_in.extent(-1) != cfg.d_kv_in ||
      v_in.extent(-1) != cfg.d_kv_in) {
    throw DimensionError("multi-head inputs Q " + shape_str(q_in.shape()) +
                         ", K " + shape_str(k_in.shape()) + ", V " +
                         shape_str(v_in.shape()) + " disagree with config");
  }
  detail::expect_shape("W^O", w.output.shape(),
                       {cfg.heads * cfg.d_head, cfg.d_out});

  MultiHeadResult<S> result;
  std::vector<Var<S>> outputs;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    detail::expect_shape("W^Q", w.query[h].shape(), {cfg.d_q_in, cfg.d_head});
    detail::expect_shape("W^K", w.key[h].shape(), {cfg.d_kv_in, cfg.d_head});
    detail::expect_shape("W^V", w.value[h].shape(), {cfg.d_kv_in, cfg.d_head});
    auto head = scaled_dot_attention(matmul(q_in, w.query[h]),
                                     matmul(k_in, w.key[h]),
                                     matmul(v_in, w.value[h]), mask);
    outputs.push_back(head.output);
    result.heads.push_back(head);
  }
  Var<S> joined = outputs.size() == 1 ? outputs.front() : concat(outputs, -1);
  result.output = matmul(joined, w.output);
  return result;
}

struct BlockOptions {
  double p_drop = 0.0;
  Mode mode = Mode::kEval;
  double epsilon = 1e-6;
  std::mt19937_64 *rng = nullptr;
};

template <typename S>
struct AttentionBlockResult {
  Var<S> output;
  MultiHeadResult<S> attention;
};

/// layer_norm(Q_in + dropout(MultiHead(Q_in, K_in, V_in))). Attention
/// matrices are taken before dropout.
template <typename S>
AttentionBlockResult<S> attention_block(Var<S> q_in, Var<S> k_in, Var<S> v_in,
                                        const KeyMask &mask,
                                        const MultiHeadConfig &cfg,
                                        const AttentionBlockWeights<S> &w,
                                        const BlockOptions &opts) {
  auto mh = multi_head(q_in, k_in, v_in, mask, cfg, w.heads);
  Var<S> dropped = dropout(mh.output, opts.p_drop, opts.mode, opts.rng);
  Var<S> out = layer_norm(add(q_in, dropped), w.ln_gain, w.ln_bias, opts.epsilon);
  return {out, std::move(mh)};
}

} // namespace atraj

#endif // ATRAJ_ATTENTION_HPP_
