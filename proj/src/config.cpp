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

#include "atraj/config.hpp"

#include <algorithm>
#include <sstream>

#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

const std::vector<ConfigKey> &RunConfig::keys() {
  static const std::vector<ConfigKey> table = {
      {"seed", KeyType::kUnsigned, "0", "seed of data generation, init, shuffling and dropout"},
      {"threads", KeyType::kCount, "1", "worker cap for parallel evaluation"},
      // model
      {"t_obs", KeyType::kCount, "10", "observed steps"},
      {"t_pred", KeyType::kCount, "15", "predicted steps"},
      {"k_props", KeyType::kCount, "2", "vehicle property features"},
      {"d_veh_embed", KeyType::kCount, "16", "vehicle embedding width"},
      {"d_lane_embed", KeyType::kCount, "4", "lane embedding width"},
      {"heads", KeyType::kCount, "4", "attention heads per layer"},
      {"d_head_veh", KeyType::kCount, "8", "per-head width of vehicle attention"},
      {"d_head_lane", KeyType::kCount, "32", "per-head width of lane attention"},
      {"d_lane_feat", KeyType::kCount, "3", "lane features"},
      {"p_drop", KeyType::kReal, "0.7", "dropout probability after multi-head attention"},
      {"epsilon_ln", KeyType::kReal, "1e-06", "layer-norm epsilon"},
      {"sigma_floor", KeyType::kReal, "0.01", "covariance floor (m)"},
      {"position_scale", KeyType::kReal, "10", "longitudinal input scale (m)"},
      {"lateral_scale", KeyType::kReal, "1", "lateral input scale (m)"},
      {"output_scale", KeyType::kReal, "1", "mean-offset output scale (m)"},
      {"relative_past", KeyType::kCount, "1", "1: past steps as offsets from the last one"},
      {"exclude_ego", KeyType::kCount, "0", "1: leave the ego out of losses and metrics"},
      {"mean_anchor", KeyType::kAnchor, "cv", "mean reference: none, last or cv"},
      // loss
      {"w_nll", KeyType::kReal, "1", "weight of the NLL loss"},
      {"w_recon", KeyType::kReal, "1", "weight of the reconstruction loss"},
      // baseline
      {"kalman_q", KeyType::kReal, "0.5", "Kalman process noise accel std (m/s^2)"},
      {"kalman_r", KeyType::kReal, "0.1", "Kalman measurement noise std (m)"},
      {"kalman_initial_velocity_var", KeyType::kReal, "10000", "Kalman velocity prior variance"},
      // synthetic data
      {"n_scenes", KeyType::kCount, "2000", "synthetic scenes"},
      {"min_vehicles", KeyType::kCount, "3", "vehicles per synthetic scene, minimum"},
      {"max_vehicles", KeyType::kCount, "10", "vehicles per synthetic scene, maximum"},
      {"n_lanes", KeyType::kCount, "3", "synthetic lanes"},
      {"lane_change_prob", KeyType::kReal, "0.3", "per-vehicle lane-change probability"},
      {"noise_sigma", KeyType::kReal, "0.05", "position noise std (m)"},
      {"dt", KeyType::kReal, "0.2", "synthetic sampling interval (s)"},
      {"speed_min", KeyType::kReal, "20", "minimum speed (m/s)"},
      {"speed_max", KeyType::kReal, "35", "maximum speed (m/s)"},
      {"road_half_length", KeyType::kReal, "100", "longitudinal spread around the ego (m)"},
      {"lane_width", KeyType::kReal, "3.5", "lane width (m)"},
      {"lane_change_duration", KeyType::kReal, "4", "lane-change duration (s)"},
      {"first_scene_id", KeyType::kUnsigned, "0", "id of the first synthetic scene"},
      // highD ingestion
      {"window_stride", KeyType::kCount, "1", "window stride in downsampled steps"},
      {"target_rate_hz", KeyType::kReal, "5", "downsampled rate (Hz)"},
      {"ego_stride", KeyType::kCount, "1", "every k-th covering vehicle is an ego"},
      {"radius_m", KeyType::kReal, "100", "neighbourhood radius (m)"},
      {"max_neighbors", KeyType::kCount, "30", "vehicle cap per scene, ego included"},
      // training
      {"epochs", KeyType::kCount, "30", "training epochs"},
      {"batch_size", KeyType::kCount, "128", "scenes per batch"},
      {"lr", KeyType::kReal, "0.001", "Adam learning rate"},
      {"clip_norm", KeyType::kReal, "0", "global gradient-norm cap, 0 disables"},
      {"val_fraction", KeyType::kReal, "0.1", "validation share of scene ids"},
      // evaluation and benchmarks
      {"horizons", KeyType::kRealList, "1,2,3", "RMSE horizons (s)"},
      {"bench_vehicles", KeyType::kCount, "30", "vehicles in the latency benchmark"},
      {"bench_repeats", KeyType::kCount, "200", "timed forwards"},
      {"bench_warmup", KeyType::kCount, "10", "untimed warm-up forwards"},
  };
  return table;
}

namespace {

const ConfigKey &key_of(std::string_view key) {
  for (const auto &k : RunConfig::keys()) {
    if (key == k.name) return k;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

std::string normalize(const ConfigKey &k, std::string_view raw) {
  const std::string what = std::string("config key ") + k.name;
  raw = trim(raw);
  try {
    switch (k.type) {
      case KeyType::kCount:
      case KeyType::kUnsigned: {
        const auto v = parse_int(raw, what);
        if (v < 0) throw ConfigError(what + " must be non-negative");
        return std::to_string(v);
      }
      case KeyType::kReal:
        return format_double(parse_double(raw, what));
      case KeyType::kAnchor:
        return to_string(parse_mean_anchor(raw));
      case KeyType::kRealList: {
        std::string out;
        for (auto part : split(raw, ',')) {
          if (!out.empty()) out += ',';
          out += format_double(parse_double(part, what));
        }
        return out;
      }
    }
  } catch (const ParseError &e) {
    throw ConfigError(e.what());
  }
  return std::string(raw);
}

} // namespace

RunConfig::RunConfig() {
  for (const auto &k : keys()) values_[k.name] = normalize(k, k.default_value);
}

void RunConfig::merge_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    set(std::string(trim(line.substr(0, eq))), std::string(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string &key, const std::string &value) {
  values_[key] = normalize(key_of(key), value);
}

const std::string &RunConfig::get(const std::string &key) const {
  key_of(key);
  return values_.find(key)->second;
}

std::size_t RunConfig::count(const std::string &key) const {
  return static_cast<std::size_t>(parse_int(get(key), key));
}

std::uint64_t RunConfig::u64(const std::string &key) const {
  return static_cast<std::uint64_t>(parse_int(get(key), key));
}

double RunConfig::real(const std::string &key) const { return parse_double(get(key), key); }

std::vector<double> RunConfig::reals(const std::string &key) const {
  std::vector<double> out;
  for (auto part : split(get(key), ',')) out.push_back(parse_double(part, key));
  return out;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto &k : keys()) {
    if (std::string_view(k.name) == "threads") continue;
    os << k.name << " = " << values_.find(k.name)->second << '\n';
  }
  return os.str();
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical())); }

Hyperparams RunConfig::hyper() const {
  Hyperparams h;
  h.t_obs = count("t_obs");
  h.t_pred = count("t_pred");
  h.k_props = count("k_props");
  h.d_veh_embed = count("d_veh_embed");
  h.d_lane_embed = count("d_lane_embed");
  h.heads = count("heads");
  h.d_head_veh = count("d_head_veh");
  h.d_head_lane = count("d_head_lane");
  h.d_lane_feat = count("d_lane_feat");
  h.p_drop = real("p_drop");
  h.epsilon_ln = real("epsilon_ln");
  h.sigma_floor = real("sigma_floor");
  h.position_scale = real("position_scale");
  h.lateral_scale = real("lateral_scale");
  h.output_scale = real("output_scale");
  if (count("relative_past") > 1) throw ConfigError("relative_past must be 0 or 1");
  h.relative_past = count("relative_past") == 1;
  if (count("exclude_ego") > 1) throw ConfigError("exclude_ego must be 0 or 1");
  h.exclude_ego = count("exclude_ego") == 1;
  h.mean_anchor = parse_mean_anchor(get("mean_anchor"));
  h.validate();
  return h;
}

LossWeights RunConfig::loss_weights() const {
  LossWeights w{real("w_nll"), real("w_recon")};
  w.validate();
  return w;
}

KalmanCVConfig RunConfig::kalman() const {
  KalmanCVConfig k;
  k.q = real("kalman_q");
  k.r = real("kalman_r");
  k.dt = real("dt");
  k.initial_velocity_var = real("kalman_initial_velocity_var");
  k.validate();
  return k;
}

SynthConfig RunConfig::synth() const {
  SynthConfig s;
  s.n_scenes = count("n_scenes");
  s.min_vehicles = count("min_vehicles");
  s.max_vehicles = count("max_vehicles");
  s.n_lanes = count("n_lanes");
  s.lane_change_prob = real("lane_change_prob");
  s.noise_sigma = real("noise_sigma");
  s.dt = real("dt");
  s.t_obs = count("t_obs");
  s.t_pred = count("t_pred");
  s.speed_min = real("speed_min");
  s.speed_max = real("speed_max");
  s.road_half_length = real("road_half_length");
  s.lane_width = real("lane_width");
  s.lane_change_duration = real("lane_change_duration");
  s.seed = seed();
  s.first_scene_id = u64("first_scene_id");
  s.validate();
  return s;
}

BuildOptions RunConfig::build() const {
  BuildOptions b;
  b.t_obs = count("t_obs");
  b.t_pred = count("t_pred");
  b.stride = count("window_stride");
  b.target_rate_hz = real("target_rate_hz");
  b.ego_stride = count("ego_stride");
  b.radius_m = real("radius_m");
  b.max_vehicles = count("max_neighbors");
  return b;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.epochs = count("epochs");
  t.batch_size = count("batch_size");
  t.seed = seed();
  t.lr = real("lr");
  t.clip_norm = real("clip_norm");
  t.val_fraction = real("val_fraction");
  t.threads = threads();
  t.weights = loss_weights();
  t.config_hash = hash();
  t.config_text = canonical();
  t.validate();
  return t;
}

std::vector<std::string> RunConfig::provenance() const {
  return {"config_hash = " + hash(), "seed = " + get("seed")};
}

} // namespace atraj
