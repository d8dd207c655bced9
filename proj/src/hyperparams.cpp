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

#include "atraj/hyperparams.hpp"

#include <map>
#include <sstream>

#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

std::string to_string(MeanAnchor anchor) {
  switch (anchor) {
    case MeanAnchor::kNone: return "none";
    case MeanAnchor::kLastObserved: return "last";
    case MeanAnchor::kConstantVelocity: return "cv";
  }
  return "none";
}

MeanAnchor parse_mean_anchor(std::string_view text) {
  text = trim(text);
  if (text == "none") return MeanAnchor::kNone;
  if (text == "last") return MeanAnchor::kLastObserved;
  if (text == "cv") return MeanAnchor::kConstantVelocity;
  throw ParseError("mean_anchor must be none|last|cv, got '" +
                   std::string(text) + "'");
}

void Hyperparams::validate() const {
  if (t_obs < 2 || t_pred < 1 || k_props < 1 || d_veh_embed < 1 ||
      d_lane_embed < 1 || heads < 1 || d_head_veh < 1 || d_head_lane < 1 ||
      d_lane_feat < 1) {
    throw ParameterError("hyperparameter extents must be positive (t_obs >= 2)");
  }
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw ParameterError("p_drop must lie in [0, 1)");
  }
  if (!(epsilon_ln > 0.0) || !(sigma_floor > 0.0) || !(position_scale > 0.0) ||
      !(lateral_scale > 0.0) || !(output_scale > 0.0)) {
    throw ParameterError("epsilon_ln, sigma_floor and the scales must be > 0");
  }
}

std::string Hyperparams::canonical() const {
  std::ostringstream os;
  os << "t_obs = " << t_obs << '\n'
     << "t_pred = " << t_pred << '\n'
     << "k_props = " << k_props << '\n'
     << "d_veh_embed = " << d_veh_embed << '\n'
     << "d_lane_embed = " << d_lane_embed << '\n'
     << "heads = " << heads << '\n'
     << "d_head_veh = " << d_head_veh << '\n'
     << "d_head_lane = " << d_head_lane << '\n'
     << "d_lane_feat = " << d_lane_feat << '\n'
     << "p_drop = " << format_double(p_drop) << '\n'
     << "epsilon_ln = " << format_double(epsilon_ln) << '\n'
     << "sigma_floor = " << format_double(sigma_floor) << '\n'
     << "position_scale = " << format_double(position_scale) << '\n'
     << "lateral_scale = " << format_double(lateral_scale) << '\n'
     << "output_scale = " << format_double(output_scale) << '\n'
     << "relative_past = " << (relative_past ? 1 : 0) << '\n'
     << "exclude_ego = " << (exclude_ego ? 1 : 0) << '\n'
     << "mean_anchor = " << to_string(mean_anchor) << '\n';
  return os.str();
}

Hyperparams Hyperparams::from_canonical(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("hyperparameter line without '=': " + std::string(line));
    }
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  Hyperparams h;
  auto take = [&](const char *key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw SchemaError(std::string("missing hyperparameter ") + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto size = [&](const char *key) {
    const auto v = parse_int(take(key), key);
    if (v < 0) throw ParseError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  h.t_obs = size("t_obs");
  h.t_pred = size("t_pred");
  h.k_props = size("k_props");
  h.d_veh_embed = size("d_veh_embed");
  h.d_lane_embed = size("d_lane_embed");
  h.heads = size("heads");
  h.d_head_veh = size("d_head_veh");
  h.d_head_lane = size("d_head_lane");
  h.d_lane_feat = size("d_lane_feat");
  h.p_drop = parse_double(take("p_drop"), "p_drop");
  h.epsilon_ln = parse_double(take("epsilon_ln"), "epsilon_ln");
  h.sigma_floor = parse_double(take("sigma_floor"), "sigma_floor");
  h.position_scale = parse_double(take("position_scale"), "position_scale");
  h.lateral_scale = parse_double(take("lateral_scale"), "lateral_scale");
  h.output_scale = parse_double(take("output_scale"), "output_scale");
  {
    const auto flag = parse_int(take("relative_past"), "relative_past");
    if (flag != 0 && flag != 1) throw ParseError("relative_past must be 0 or 1");
    h.relative_past = flag == 1;
  }
  {
    const auto flag = parse_int(take("exclude_ego"), "exclude_ego");
    if (flag != 0 && flag != 1) throw ParseError("exclude_ego must be 0 or 1");
    h.exclude_ego = flag == 1;
  }
  h.mean_anchor = parse_mean_anchor(take("mean_anchor"));
  if (!kv.empty()) throw SchemaError("unknown hyperparameter " + kv.begin()->first);
  h.validate();
  return h;
}

void LossWeights::validate() const {
  if (w_nll < 0.0 || w_recon < 0.0 || (w_nll == 0.0 && w_recon == 0.0)) {
    throw ParameterError("loss weights must be >= 0 and not both zero");
  }
}

} // namespace atraj
