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

#ifndef ATRAJ_KALMAN_HPP_
#define ATRAJ_KALMAN_HPP_

#include <Eigen/Core>

#include <vector>

#include "atraj/model.hpp"
#include "atraj/scene.hpp"

namespace atraj {

/// Constant-velocity Kalman filter over the state (x, y, vx, vy) with
/// white-acceleration process noise of std `q` (m/s^2) per axis and
/// isotropic position measurement noise of std `r` (m).
struct KalmanCVConfig {
  double q = 0.5;
  double r = 0.1;
  double dt = 0.2;
  double initial_velocity_var = 1e4;  // (m/s)^2, diffuse prior on velocity

  void validate() const;
};

struct KalmanPrediction {
  Trajectory mean;                           // [t_pred, 2]
  std::vector<Eigen::Matrix2d> covariance;   // position block per step
};

/// Filters `past` and propagates the state `t_pred` steps open-loop.
KalmanPrediction kalman_cv_predict(const Trajectory &past, const KalmanCVConfig &cfg,
                                   std::size_t t_pred);

/// Baseline forecast for every vehicle slot of a scene (masked slots get a
/// zero mean and an identity covariance). `cfg.dt` is taken from the scene.
GaussianForecast kalman_forecast(const Scene &scene, KalmanCVConfig cfg,
                                 std::size_t t_pred);

} // namespace atraj

#endif // ATRAJ_KALMAN_HPP_
