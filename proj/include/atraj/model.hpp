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

#ifndef ATRAJ_MODEL_HPP_
#define ATRAJ_MODEL_HPP_

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "atraj/attention.hpp"
#include "atraj/hyperparams.hpp"
#include "atraj/ops.hpp"
#include "atraj/scene.hpp"

namespace atraj {

// --- parameters -------------------------------------------------------------

/// Named parameter tensors plus the hyperparameters that shaped them.
template <typename S>
struct ModelParams {
  Hyperparams hyper;
  std::map<std::string, Tensor<S>> tensors;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto &[name, t] : tensors) n += t.size();
    return n;
  }

  void set_trainable(bool on) {
    for (auto &[name, t] : tensors) t.set_requires_grad(on);
  }

  template <typename T>
  ModelParams<T> cast() const {
    ModelParams<T> out{hyper, {}};
    for (const auto &[name, t] : tensors) {
      out.tensors.emplace(name, Tensor<T>(t.shape(), t.values().template cast<T>().eval()));
    }
    return out;
  }
};

struct BlockLayout {
  std::string prefix;
  MultiHeadConfig config;
};

/// The three attention layers: vehicle and lane attention in the encoder,
/// vehicle attention over Z in the decoder.
inline std::vector<BlockLayout> block_layouts(const Hyperparams &h) {
  return {
      {"enc_vehicle", {h.heads, h.d_veh_embed, h.d_veh_embed, h.d_head_veh, h.d_veh_embed}},
      {"enc_lane", {h.heads, h.d_veh_embed, h.d_lane_embed, h.d_head_lane, h.d_veh_embed}},
      {"dec_vehicle", {h.heads, h.d_z(), h.d_z(), h.d_head_veh, h.d_z()}},
  };
}

/// Weight matrices ~ U(-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))),
/// biases 0, layer-norm gains 1. Tensors are drawn from one stream in a
/// fixed creation order.
template <typename S>
ModelParams<S> init_params(const Hyperparams &h, std::uint64_t seed) {
  h.validate();
  ModelParams<S> p{h, {}};
  std::mt19937_64 rng(seed);
  auto matrix = [&](const std::string &name, std::size_t n_in, std::size_t n_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    Tensor<S> t({n_in, n_out});
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<S>((2.0 * uniform01(rng) - 1.0) * limit);
    }
    p.tensors.emplace(name, std::move(t));
  };
  auto filled = [&](const std::string &name, std::size_t n, double value) {
    p.tensors.emplace(name, Tensor<S>({n}, static_cast<S>(value)));
  };

  matrix("veh_embed.weight", h.vehicle_feature_dim(), h.d_veh_embed);
  filled("veh_embed.bias", h.d_veh_embed, 0.0);
  matrix("lane_embed.weight", h.d_lane_feat, h.d_lane_embed);
  filled("lane_embed.bias", h.d_lane_embed, 0.0);
  for (const auto &[prefix, cfg] : block_layouts(h)) {
    for (std::size_t i = 0; i < cfg.heads; ++i) {
      const auto idx = std::to_string(i);
      matrix(prefix + ".query" + idx, cfg.d_q_in, cfg.d_head);
      matrix(prefix + ".key" + idx, cfg.d_kv_in, cfg.d_head);
      matrix(prefix + ".value" + idx, cfg.d_kv_in, cfg.d_head);
    }
    matrix(prefix + ".out", cfg.heads * cfg.d_head, cfg.d_out);
    filled(prefix + ".ln_gain", cfg.d_out, 1.0);
    filled(prefix + ".ln_bias", cfg.d_out, 0.0);
  }
  matrix("head.weight", h.d_z(), 5 * h.t_pred);
  filled("head.bias", 5 * h.t_pred, 0.0);
  return p;
}

/// Resolves parameter names to graph variables. Bound to mutable
/// parameters it registers differentiable leaves; bound to const
/// parameters it references them read-only, so concurrent forward passes
/// may share one ModelParams.
template <typename S>
class Binding {
 public:
  Binding(Graph<S> &g, ModelParams<S> &p) : graph_(g), mutable_(&p), const_(&p) {}
  Binding(Graph<S> &g, const ModelParams<S> &p) : graph_(g), const_(&p) {}

  Var<S> operator()(const std::string &name) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    auto found = const_->tensors.find(name);
    if (found == const_->tensors.end()) {
      throw NotFoundError("missing model parameter '" + name + "'");
    }
    Var<S> v = mutable_ ? graph_.parameter(mutable_->tensors.at(name))
                        : graph_.input(found->second);
    cache_.emplace(name, v);
    return v;
  }

  AttentionBlockWeights<S> block(const std::string &prefix, std::size_t heads) {
    AttentionBlockWeights<S> w;
    for (std::size_t i = 0; i < heads; ++i) {
      const auto idx = std::to_string(i);
      w.heads.query.push_back((*this)(prefix + ".query" + idx));
      w.heads.key.push_back((*this)(prefix + ".key" + idx));
      w.heads.value.push_back((*this)(prefix + ".value" + idx));
    }
    w.heads.output = (*this)(prefix + ".out");
    w.ln_gain = (*this)(prefix + ".ln_gain");
    w.ln_bias = (*this)(prefix + ".ln_bias");
    return w;
  }

  Graph<S> &graph() { return graph_; }
  const Hyperparams &hyper() const { return const_->hyper; }

 private:
  Graph<S> &graph_;
  ModelParams<S> *mutable_ = nullptr;
  const ModelParams<S> *const_ = nullptr;
  std::map<std::string, Var<S>> cache_;
};

// --- batching ---------------------------------------------------------------

/// Scenes padded to the largest N and M of the batch.
template <typename S>
struct SceneBatch {
  std::size_t batch = 0;
  std::size_t n_vehicles = 0;
  std::size_t n_lanes = 0;
  Tensor<S> vehicles;  // [B, N, 2 t_obs + k_props], scaled
  Tensor<S> lanes;     // [B, M, d_lane_feat], scaled
  Tensor<S> anchors;   // [B, N, t_pred, 2], meters
  Tensor<S> futures;   // [B, N, t_pred, 2], meters
  KeyMask vehicle_mask;
  KeyMask lane_mask;
  KeyMask loss_mask;  // vehicle_mask, minus the ego when it is excluded
  std::vector<std::uint64_t> scene_ids;
  std::vector<std::size_t> valid_vehicles;
};

/// Least-squares constant-velocity extrapolation of `past` (dt spacing)
/// to the next `t_pred` steps.
inline Trajectory constant_velocity_extrapolation(const Trajectory &past,
                                                  double dt, std::size_t t_pred) {
  const Eigen::Index n = past.rows();
  Eigen::VectorXd tau(n);
  for (Eigen::Index j = 0; j < n; ++j) tau[j] = static_cast<double>(j - (n - 1)) * dt;
  const double tau_mean = tau.mean();
  const Eigen::VectorXd centered = tau.array() - tau_mean;
  const Eigen::RowVector2d mean = past.colwise().mean();
  const Eigen::RowVector2d slope =
      (centered.transpose() * (past.rowwise() - mean)) / centered.squaredNorm();
  const Eigen::RowVector2d at_zero = mean - slope * tau_mean;
  Trajectory out(static_cast<Eigen::Index>(t_pred), 2);
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    out.row(t) = at_zero + slope * (static_cast<double>(t + 1) * dt);
  }
  return out;
}

inline Trajectory mean_anchor(const Trajectory &past, double dt, std::size_t t_pred,
                              MeanAnchor anchor) {
  switch (anchor) {
    case MeanAnchor::kLastObserved:
      return past.row(past.rows() - 1).replicate(static_cast<Eigen::Index>(t_pred), 1);
    case MeanAnchor::kConstantVelocity:
      return constant_velocity_extrapolation(past, dt, t_pred);
    case MeanAnchor::kNone:
      break;
  }
  return Trajectory::Zero(static_cast<Eigen::Index>(t_pred), 2);
}

template <typename S>
SceneBatch<S> make_batch(const std::vector<const Scene *> &scenes,
                         const Hyperparams &h) {
  if (scenes.empty()) throw ContractError("make_batch: no scenes");
  SceneBatch<S> out;
  out.batch = scenes.size();
  for (const Scene *s : scenes) {
    out.n_vehicles = std::max(out.n_vehicles, s->n_vehicles());
    out.n_lanes = std::max(out.n_lanes, s->n_lanes());
  }
  const std::size_t B = out.batch, N = out.n_vehicles, M = out.n_lanes;
  const std::size_t F = h.vehicle_feature_dim(), L = h.d_lane_feat, T = h.t_pred;
  if (N == 0 || M == 0) throw DegenerateError("make_batch: scene without vehicles or lanes");
  const double inv_long = 1.0 / h.position_scale;
  const double inv_lat = 1.0 / h.lateral_scale;
  out.vehicles = Tensor<S>({B, N, F});
  out.lanes = Tensor<S>({B, M, L});
  out.anchors = Tensor<S>({B, N, T, 2});
  out.futures = Tensor<S>({B, N, T, 2});
  out.vehicle_mask = {B, N, std::vector<std::uint8_t>(B * N, 0)};
  out.lane_mask = {B, M, std::vector<std::uint8_t>(B * M, 0)};
  out.loss_mask = out.vehicle_mask;

  for (std::size_t b = 0; b < B; ++b) {
    const Scene &s = *scenes[b];
    if (s.n_valid_vehicles() == 0) {
      throw DegenerateError("scene " + std::to_string(s.scene_id) + " has no valid vehicle");
    }
    if (s.n_valid_lanes() == 0) {
      throw DegenerateError("scene " + std::to_string(s.scene_id) + " has no valid lane");
    }
    out.scene_ids.push_back(s.scene_id);
    out.valid_vehicles.push_back(s.n_valid_vehicles());
    for (std::size_t i = 0; i < s.n_vehicles(); ++i) {
      if (!s.vehicle_valid[i]) continue;
      const VehicleTrack &v = s.vehicles[i];
      if (static_cast<std::size_t>(v.past.rows()) != h.t_obs ||
          static_cast<std::size_t>(v.future.rows()) != T ||
          static_cast<std::size_t>(v.props.size()) != h.k_props) {
        throw DimensionError("scene " + std::to_string(s.scene_id) +
                             ": trajectory extents disagree with hyperparameters");
      }
      out.vehicle_mask.valid[b * N + i] = 1;
      out.loss_mask.valid[b * N + i] = 1;
      S *feat = out.vehicles.data() + (b * N + i) * F;
      const Eigen::RowVector2d last = v.past.row(static_cast<Eigen::Index>(h.t_obs - 1));
      for (std::size_t t = 0; t < h.t_obs; ++t) {
        Eigen::RowVector2d p = v.past.row(static_cast<Eigen::Index>(t));
        if (h.relative_past && t + 1 < h.t_obs) p -= last;
        feat[2 * t] = static_cast<S>(p.x() * inv_long);
        feat[2 * t + 1] = static_cast<S>(p.y() * inv_lat);
      }
      for (std::size_t k = 0; k < h.k_props; ++k) {
        feat[2 * h.t_obs + k] = static_cast<S>(v.props[k] * inv_long);
      }
      const Trajectory anchor = mean_anchor(v.past, s.dt, T, h.mean_anchor);
      S *an = out.anchors.data() + (b * N + i) * T * 2;
      S *fu = out.futures.data() + (b * N + i) * T * 2;
      for (std::size_t t = 0; t < T; ++t) {
        an[2 * t] = static_cast<S>(anchor(t, 0));
        an[2 * t + 1] = static_cast<S>(anchor(t, 1));
        fu[2 * t] = static_cast<S>(v.future(t, 0));
        fu[2 * t + 1] = static_cast<S>(v.future(t, 1));
      }
    }
    if (h.exclude_ego) {
      if (s.n_valid_vehicles() < 2) {
        throw DegenerateError("scene " + std::to_string(s.scene_id) +
                              " has no vehicle to score besides the ego");
      }
      out.loss_mask.valid[b * N + s.index_of(s.ego_id)] = 0;
    }
    for (std::size_t m = 0; m < s.n_lanes(); ++m) {
      if (!s.lane_valid[m]) continue;
      if (L != 3) throw DimensionError("lane features: expected 3, config has " + std::to_string(L));
      out.lane_mask.valid[b * M + m] = 1;
      for (std::size_t k = 0; k < L; ++k) {
        out.lanes[(b * M + m) * L + k] =
            static_cast<S>(s.lanes[m][static_cast<Eigen::Index>(k)] * inv_lat);
      }
    }
  }
  return out;
}

template <typename S>
SceneBatch<S> make_batch(const Scene &scene, const Hyperparams &h) {
  return make_batch<S>(std::vector<const Scene *>{&scene}, h);
}

// --- forward ----------------------------------------------------------------

struct RunMode {
  Mode mode = Mode::kEval;
  std::mt19937_64 *rng = nullptr;
};

template <typename S>
Var<S> embed_vehicles(Var<S> features, Binding<S> &p) {
  return affine(features, p("veh_embed.weight"), p("veh_embed.bias"));
}

template <typename S>
Var<S> embed_lanes(Var<S> features, Binding<S> &p) {
  return affine(features, p("lane_embed.weight"), p("lane_embed.bias"));
}

template <typename S>
struct EncoderOutput {
  Var<S> z;  // [B, N, 2 d_veh_embed]
  Var<S> vehicle_embedding;
  Var<S> lane_embedding;
  AttentionBlockResult<S> vehicle;
  AttentionBlockResult<S> lane;
};

template <typename S>
EncoderOutput<S> encode(const SceneBatch<S> &batch, Binding<S> &p, RunMode run) {
  const Hyperparams &h = p.hyper();
  Graph<S> &g = p.graph();
  for (std::size_t b = 0; b < batch.batch; ++b) {
    if (batch.valid_vehicles.at(b) == 0) {
      throw DegenerateError("encode: scene without unmasked vehicles");
    }
  }
  const auto layouts = block_layouts(h);
  const BlockOptions opts{h.p_drop, run.mode, h.epsilon_ln, run.rng};
  EncoderOutput<S> out;
  out.vehicle_embedding = embed_vehicles(g.input(batch.vehicles), p);
  out.lane_embedding = embed_lanes(g.input(batch.lanes), p);
  const Var<S> ve = out.vehicle_embedding;
  const Var<S> le = out.lane_embedding;
  out.vehicle = attention_block(ve, ve, ve, batch.vehicle_mask, layouts[0].config,
                                p.block(layouts[0].prefix, h.heads), opts);
  out.lane = attention_block(ve, le, le, batch.lane_mask, layouts[1].config,
                             p.block(layouts[1].prefix, h.heads), opts);
  out.z = concat<S>({out.vehicle.output, out.lane.output}, -1);
  return out;
}

template <typename S>
AttentionBlockResult<S> decode(const EncoderOutput<S> &enc, const SceneBatch<S> &batch,
                               Binding<S> &p, RunMode run) {
  const Hyperparams &h = p.hyper();
  const auto layout = block_layouts(h)[2];
  const BlockOptions opts{h.p_drop, run.mode, h.epsilon_ln, run.rng};
  return attention_block(enc.z, enc.z, enc.z, batch.vehicle_mask, layout.config,
                         p.block(layout.prefix, h.heads), opts);
}

/// Per-timestep bivariate Gaussians. Sigma = L L^T + floor^2 I with
/// L = [[softplus(a), 0], [c, softplus(b)]].
template <typename S>
struct ForecastVars {
  Var<S> raw;  // [B, N, T, 5]: mean offset x, y, then a, b, c
  Var<S> mu;   // [B, N, T, 2], meters
  Var<S> s00, s01, s11;  // [B, N, T, 1], meters^2
};

template <typename S>
Eigen::Matrix<S, 2, 2> covariance_from_cholesky(S a, S b, S c, double sigma_floor) {
  Eigen::Matrix<S, 2, 2> L;
  L << softplus_value(a), S(0), c, softplus_value(b);
  return L * L.transpose() +
         static_cast<S>(sigma_floor * sigma_floor) * Eigen::Matrix<S, 2, 2>::Identity();
}

/// Builds covariance entries from raw (a, b, c) columns.
template <typename S>
void assemble_covariance(ForecastVars<S> &f, Var<S> a, Var<S> b, Var<S> c,
                         double sigma_floor) {
  const double floor2 = sigma_floor * sigma_floor;
  Var<S> l11 = softplus(a);
  Var<S> l22 = softplus(b);
  f.s00 = add_scalar(mul(l11, l11), floor2);
  f.s01 = mul(l11, c);
  f.s11 = add_scalar(add(mul(c, c), mul(l22, l22)), floor2);
}

template <typename S>
ForecastVars<S> gaussian_head(Var<S> dec, const SceneBatch<S> &batch, Binding<S> &p) {
  const Hyperparams &h = p.hyper();
  Graph<S> &g = p.graph();
  ForecastVars<S> f;
  Var<S> flat = affine(dec, p("head.weight"), p("head.bias"));
  f.raw = reshape(flat, {batch.batch, batch.n_vehicles, h.t_pred, 5});
  f.mu = add(g.input(batch.anchors), scale(slice_last(f.raw, 0, 2), h.output_scale));
  assemble_covariance(f, slice_last(f.raw, 2, 1), slice_last(f.raw, 3, 1),
                      slice_last(f.raw, 4, 1), h.sigma_floor);
  return f;
}

template <typename S>
struct ForwardResult {
  EncoderOutput<S> encoder;
  AttentionBlockResult<S> decoder;
  ForecastVars<S> forecast;
};

template <typename S>
ForwardResult<S> forward(const SceneBatch<S> &batch, Binding<S> &p, RunMode run) {
  ForwardResult<S> r;
  r.encoder = encode(batch, p, run);
  r.decoder = decode(r.encoder, batch, p, run);
  r.forecast = gaussian_head(r.decoder.output, batch, p);
  return r;
}

// --- extraction -------------------------------------------------------------

/// Per-vehicle, per-timestep bivariate normal forecast of one scene.
struct GaussianForecast {
  double sigma_floor = 0.0;
  std::vector<Trajectory> mean;                             // [N][T x 2]
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> chol;  // [N][T x 3] raw (a, b, c); may be empty
  std::vector<std::vector<Eigen::Matrix2d>> covariance;     // [N][T]
};

template <typename S>
GaussianForecast extract_forecast(const ForecastVars<S> &f, std::size_t b,
                                  std::size_t n_vehicles, double sigma_floor) {
  const Shape &shape = f.mu.shape();
  const std::size_t N = shape[1], T = shape[2];
  GaussianForecast out;
  out.sigma_floor = sigma_floor;
  const auto &mu = f.mu.value();
  const auto &raw = f.raw.value();
  const auto &s00 = f.s00.value();
  const auto &s01 = f.s01.value();
  const auto &s11 = f.s11.value();
  for (std::size_t i = 0; i < n_vehicles; ++i) {
    Trajectory m(static_cast<Eigen::Index>(T), 2);
    Eigen::Matrix<double, Eigen::Dynamic, 3> c(static_cast<Eigen::Index>(T), 3);
    std::vector<Eigen::Matrix2d> cov(T);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = (b * N + i) * T + t;
      m(t, 0) = static_cast<double>(mu[2 * k]);
      m(t, 1) = static_cast<double>(mu[2 * k + 1]);
      for (int j = 0; j < 3; ++j) c(t, j) = static_cast<double>(raw[5 * k + 2 + j]);
      cov[t] << s00[k], s01[k], s01[k], s11[k];
    }
    out.mean.push_back(std::move(m));
    out.chol.push_back(std::move(c));
    out.covariance.push_back(std::move(cov));
  }
  return out;
}

enum class LayerTag { kVehicleEncoder, kLaneEncoder, kVehicleDecoder };

inline std::string to_string(LayerTag tag) {
  switch (tag) {
    case LayerTag::kVehicleEncoder: return "vehicle-encoder";
    case LayerTag::kLaneEncoder: return "lane-encoder";
    case LayerTag::kVehicleDecoder: return "vehicle-decoder";
  }
  return "?";
}

/// One head's attention matrix (queries x keys) of one layer.
struct AttentionRecord {
  LayerTag layer = LayerTag::kVehicleEncoder;
  std::size_t head = 0;
  Eigen::MatrixXd weights;
};

template <typename S>
std::vector<AttentionRecord> extract_attention(const ForwardResult<S> &r, std::size_t b) {
  std::vector<AttentionRecord> out;
  auto take = [&](LayerTag tag, const MultiHeadResult<S> &mh) {
    for (std::size_t h = 0; h < mh.heads.size(); ++h) {
      const Tensor<S> &a = mh.heads[h].attention.value();
      const std::size_t nq = a.extent(-2), nk = a.extent(-1);
      const auto block = detail::cmat(a.data() + b * nq * nk, nq, nk);
      out.push_back({tag, h, block.template cast<double>()});
    }
  };
  take(LayerTag::kVehicleEncoder, r.encoder.vehicle.attention);
  take(LayerTag::kLaneEncoder, r.encoder.lane.attention);
  take(LayerTag::kVehicleDecoder, r.decoder.attention);
  return out;
}

struct Prediction {
  GaussianForecast forecast;
  std::vector<AttentionRecord> attention;
};

/// Eval-mode forward of a single scene over read-only parameters.
template <typename S>
Prediction predict(const Scene &scene, const ModelParams<S> &params) {
  const SceneBatch<S> batch = make_batch<S>(scene, params.hyper);
  Graph<S> g;
  Binding<S> binding(g, params);
  const auto r = forward(batch, binding, RunMode{});
  return {extract_forecast(r.forecast, 0, scene.n_vehicles(), params.hyper.sigma_floor),
          extract_attention(r, 0)};
}

} // namespace atraj

#endif // ATRAJ_MODEL_HPP_
