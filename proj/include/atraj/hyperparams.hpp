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

#ifndef ATRAJ_HYPERPARAMS_HPP_
#define ATRAJ_HYPERPARAMS_HPP_

#include <cstddef>
#include <string>
#include <string_view>

namespace atraj {

/// Reference point that the predicted means are expressed relative to.
/// kNone: the head emits ego-frame positions directly. kLastObserved: the
/// head emits displacements from each vehicle's last observed position.
/// kConstantVelocity: the head emits residuals over a least-squares
/// constant-velocity extrapolation of the observed past.
enum class MeanAnchor { kNone, kLastObserved, kConstantVelocity };

std::string to_string(MeanAnchor anchor);
MeanAnchor parse_mean_anchor(std::string_view text);

struct Hyperparams {
  std::size_t t_obs = 10;
  std::size_t t_pred = 15;
  std::size_t k_props = 2;  // length, width
  std::size_t d_veh_embed = 16;
  std::size_t d_lane_embed = 4;
  std::size_t heads = 4;
  std::size_t d_head_veh = 8;
  std::size_t d_head_lane = 32;
  std::size_t d_lane_feat = 3;
  double p_drop = 0.7;
  double epsilon_ln = 1e-6;
  double sigma_floor = 0.01;    // meters
  double position_scale = 10.0; // meters per longitudinal input unit
  double lateral_scale = 1.0;   // meters per lateral input unit
  double output_scale = 1.0;    // meters per mean-offset output unit
  bool relative_past = true;    // past steps as offsets from the last one
  bool exclude_ego = false;     // ego left out of losses and metrics
  MeanAnchor mean_anchor = MeanAnchor::kConstantVelocity;

  std::size_t vehicle_feature_dim() const { return 2 * t_obs + k_props; }
  std::size_t d_z() const { return 2 * d_veh_embed; }

  void validate() const;

  /// "key = value" lines in a fixed order; the textual block stored in
  /// checkpoints.
  std::string canonical() const;
  static Hyperparams from_canonical(std::string_view text);

  bool operator==(const Hyperparams &) const = default;
};

/// Weights of the two training loss terms.
struct LossWeights {
  double w_nll = 1.0;
  double w_recon = 1.0;

  void validate() const;
};

} // namespace atraj

#endif // ATRAJ_HYPERPARAMS_HPP_
