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

#include <cmath>
#include <numbers>
#include <random>

#include "atraj/data.hpp"
#include "atraj/errors.hpp"
#include "atraj/ops.hpp"
#include "atraj/util.hpp"

namespace atraj {

void SynthConfig::validate() const {
  if (n_scenes == 0) throw ParameterError("n_scenes must be positive");
  if (n_lanes < 2) throw ParameterError("n_lanes must be >= 2");
  if (min_vehicles < 1 || min_vehicles > max_vehicles) {
    throw ParameterError("need 1 <= min_vehicles <= max_vehicles");
  }
  if (!(lane_change_prob >= 0.0 && lane_change_prob <= 1.0)) {
    throw ParameterError("lane_change_prob must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");
  if (!(dt > 0.0) || t_obs < 2 || t_pred < 1) {
    throw ParameterError("need dt > 0, t_obs >= 2, t_pred >= 1");
  }
  if (!(speed_min > 0.0 && speed_min <= speed_max)) {
    throw ParameterError("need 0 < speed_min <= speed_max");
  }
  if (!(road_half_length > 0.0 && lane_width > 0.0 && lane_change_duration > 0.0)) {
    throw ParameterError("road_half_length, lane_width, lane_change_duration must be > 0");
  }
}

namespace {

double uniform(std::mt19937_64 &rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double gaussian(std::mt19937_64 &rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

} // namespace

SyntheticSet synth_generate(const SynthConfig &cfg) {
  cfg.validate();
  const std::size_t window = cfg.t_obs + cfg.t_pred;
  const double t_last_obs = static_cast<double>(cfg.t_obs - 1) * cfg.dt;
  const double t_end = static_cast<double>(window - 1) * cfg.dt;
  // Logistic slope so that 1%..99% of the transition spans the duration.
  const double slope = 2.0 * std::log(99.0) / cfg.lane_change_duration;

  SyntheticSet out;
  out.scenes.reserve(cfg.n_scenes);
  out.maneuvers.reserve(cfg.n_scenes);
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    std::mt19937_64 rng(mix_seed(cfg.seed, s));
    const std::size_t n = cfg.min_vehicles +
                          uniform_index(rng, cfg.max_vehicles - cfg.min_vehicles + 1);
    std::vector<Trajectory> paths;
    std::vector<Eigen::Vector2d> props;
    std::vector<LaneChange> maneuvers;
    for (std::size_t i = 0; i < n; ++i) {
      const int lane = static_cast<int>(uniform_index(rng, cfg.n_lanes));
      const double x_obs =
          i == 0 ? 0.0 : uniform(rng, -cfg.road_half_length, cfg.road_half_length);
      const double speed = uniform(rng, cfg.speed_min, cfg.speed_max);
      props.emplace_back(uniform(rng, 4.0, 5.0), uniform(rng, 1.7, 2.0));

      LaneChange lc;
      lc.from_lane = lc.to_lane = lane;
      if (uniform01(rng) < cfg.lane_change_prob) {
        int dir;
        if (lane == 0) {
          dir = 1;
        } else if (lane == static_cast<int>(cfg.n_lanes) - 1) {
          dir = -1;
        } else {
          dir = uniform01(rng) < 0.5 ? -1 : 1;
        }
        lc.active = true;
        lc.to_lane = lane + dir;
        lc.center_time = uniform(rng, 0.0, t_end);
      }
      Trajectory path(static_cast<Eigen::Index>(window), 2);
      for (std::size_t j = 0; j < window; ++j) {
        const double t = static_cast<double>(j) * cfg.dt;
        double y = lane * cfg.lane_width;
        if (lc.active) {
          const double progress = 1.0 / (1.0 + std::exp(-slope * (t - lc.center_time)));
          y += (lc.to_lane - lc.from_lane) * cfg.lane_width * progress;
        }
        path(j, 0) = x_obs + speed * (t - t_last_obs) + cfg.noise_sigma * gaussian(rng);
        path(j, 1) = y + cfg.noise_sigma * gaussian(rng);
      }
      paths.push_back(std::move(path));
      maneuvers.push_back(lc);
    }

    const Eigen::RowVector2d origin = paths[0].row(static_cast<Eigen::Index>(cfg.t_obs - 1));
    Scene scene;
    scene.scene_id = cfg.first_scene_id + s;
    scene.ego_id = 0;
    scene.dt = cfg.dt;
    for (std::size_t i = 0; i < n; ++i) {
      const Trajectory rel = paths[i].rowwise() - origin;
      VehicleTrack v;
      v.id = static_cast<std::int64_t>(i);
      v.past = rel.topRows(static_cast<Eigen::Index>(cfg.t_obs));
      v.future = rel.bottomRows(static_cast<Eigen::Index>(cfg.t_pred));
      v.props = props[i];
      scene.vehicles.push_back(std::move(v));
      scene.vehicle_valid.push_back(1);
    }
    for (std::size_t m = 0; m < cfg.n_lanes; ++m) {
      const double center = static_cast<double>(m) * cfg.lane_width - origin(1);
      scene.lanes.emplace_back(center, center + 0.5 * cfg.lane_width,
                               center - 0.5 * cfg.lane_width);
      scene.lane_valid.push_back(1);
    }
    out.scenes.push_back(std::move(scene));
    out.maneuvers.push_back(std::move(maneuvers));
  }
  return out;
}

std::vector<std::vector<std::size_t>> batch_indices(
    std::size_t n_scenes, std::size_t batch_size,
    std::optional<std::uint64_t> shuffle_seed) {
  if (n_scenes == 0) throw ContractError("batch: empty scene set");
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  std::vector<std::size_t> order(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) order[i] = i;
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    for (std::size_t i = n_scenes - 1; i > 0; --i) {
      std::swap(order[i], order[uniform_index(rng, i + 1)]);
    }
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < n_scenes; k += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(k),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n_scenes, k + batch_size)));
  }
  return out;
}

} // namespace atraj
