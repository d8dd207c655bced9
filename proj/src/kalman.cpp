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

#include "atraj/kalman.hpp"

#include <Eigen/LU>

#include <cmath>

#include "atraj/errors.hpp"

namespace atraj {

void KalmanCVConfig::validate() const {
  if (!(q > 0.0) || !(r > 0.0)) throw ParameterError("kalman: q and r must be positive");
  if (!(dt > 0.0)) throw ParameterError("kalman: dt must be positive");
  if (!(initial_velocity_var > 0.0)) {
    throw ParameterError("kalman: initial_velocity_var must be positive");
  }
}

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

Mat4 transition(double dt) {
  Mat4 f = Mat4::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

Mat4 process_noise(double q, double dt) {
  const double q2 = q * q;
  const double a = q2 * dt * dt * dt * dt / 4.0;
  const double b = q2 * dt * dt * dt / 2.0;
  const double c = q2 * dt * dt;
  Mat4 m = Mat4::Zero();
  m(0, 0) = m(1, 1) = a;
  m(0, 2) = m(2, 0) = m(1, 3) = m(3, 1) = b;
  m(2, 2) = m(3, 3) = c;
  return m;
}

} // namespace

KalmanPrediction kalman_cv_predict(const Trajectory &past, const KalmanCVConfig &cfg,
                                   std::size_t t_pred) {
  cfg.validate();
  if (past.rows() < 2) throw ParameterError("kalman: need at least 2 past positions");
  if (t_pred == 0) throw ParameterError("kalman: t_pred must be positive");
  const Mat4 F = transition(cfg.dt);
  const Mat4 Q = process_noise(cfg.q, cfg.dt);
  const Eigen::Matrix2d R = cfg.r * cfg.r * Eigen::Matrix2d::Identity();
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1.0;

  Vec4 x(past(0, 0), past(0, 1), 0.0, 0.0);
  Mat4 P = Mat4::Zero();
  P.topLeftCorner<2, 2>() = R;
  P.bottomRightCorner<2, 2>() = cfg.initial_velocity_var * Eigen::Matrix2d::Identity();

  for (Eigen::Index k = 1; k < past.rows(); ++k) {
    x = F * x;
    P = F * P * F.transpose() + Q;
    const Eigen::Vector2d innovation = past.row(k).transpose() - H * x;
    const Eigen::Matrix2d S = H * P * H.transpose() + R;
    const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
    x += K * innovation;
    // Joseph form keeps P symmetric positive semi-definite.
    const Mat4 I_KH = Mat4::Identity() - K * H;
    P = I_KH * P * I_KH.transpose() + K * R * K.transpose();
  }

  KalmanPrediction out;
  out.mean.resize(static_cast<Eigen::Index>(t_pred), 2);
  out.covariance.reserve(t_pred);
  for (std::size_t t = 0; t < t_pred; ++t) {
    x = F * x;
    P = F * P * F.transpose() + Q;
    out.mean.row(static_cast<Eigen::Index>(t)) = x.head<2>().transpose();
    out.covariance.push_back(P.topLeftCorner<2, 2>());
  }
  return out;
}

GaussianForecast kalman_forecast(const Scene &scene, KalmanCVConfig cfg,
                                 std::size_t t_pred) {
  cfg.dt = scene.dt;
  GaussianForecast out;
  for (std::size_t i = 0; i < scene.n_vehicles(); ++i) {
    const auto T = static_cast<Eigen::Index>(t_pred);
    if (!scene.vehicle_valid[i]) {
      out.mean.push_back(Trajectory::Zero(T, 2));
      out.covariance.emplace_back(t_pred, Eigen::Matrix2d::Identity());
      continue;
    }
    KalmanPrediction p = kalman_cv_predict(scene.vehicles[i].past, cfg, t_pred);
    out.mean.push_back(std::move(p.mean));
    out.covariance.push_back(std::move(p.covariance));
  }
  return out;
}

} // namespace atraj
