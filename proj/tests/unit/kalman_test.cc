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
#include <random>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "atraj/evaluation.hpp"
#include "atraj/kalman.hpp"
#include "test_util.hpp"

namespace atraj {
namespace {

Trajectory line(int n, double x0, double vx, double y0, double vy, double dt) {
  Trajectory t(n, 2);
  for (int k = 0; k < n; ++k) t.row(k) << x0 + vx * k * dt, y0 + vy * k * dt;
  return t;
}

TEST(KalmanTest, LinearPastExtrapolatesExactly) {
  KalmanCVConfig cfg;
  cfg.dt = 1.0;
  cfg.q = 1e-6;
  cfg.r = 1e-6;
  const auto p = kalman_cv_predict(line(10, 0.0, 1.0, 0.0, 0.0, 1.0), cfg, 3);
  EXPECT_NEAR(p.mean(0, 0), 10.0, 1e-6);
  EXPECT_NEAR(p.mean(1, 0), 11.0, 1e-6);
  EXPECT_NEAR(p.mean(2, 0), 12.0, 1e-6);
  EXPECT_NEAR(p.mean.col(1).cwiseAbs().maxCoeff(), 0.0, 1e-6);
}

TEST(KalmanTest, DefaultNoiseStillTracksAStraightLine) {
  const auto p = kalman_cv_predict(line(10, -54.0, 30.0, 1.0, -0.5, 0.2), KalmanCVConfig{}, 15);
  for (int t = 0; t < 15; ++t) {
    EXPECT_NEAR(p.mean(t, 0), -54.0 + 30.0 * 0.2 * (t + 10), 1e-4);
    EXPECT_NEAR(p.mean(t, 1), 1.0 - 0.5 * 0.2 * (t + 10), 1e-4);
  }
}

TEST(KalmanTest, StationaryPastStaysPut) {
  Trajectory past = Trajectory::Zero(10, 2);
  past.col(0).setConstant(3.0);
  past.col(1).setConstant(-2.0);
  const auto p = kalman_cv_predict(past, KalmanCVConfig{}, 15);
  for (int t = 0; t < 15; ++t) {
    EXPECT_NEAR(p.mean(t, 0), 3.0, 1e-9);
    EXPECT_NEAR(p.mean(t, 1), -2.0, 1e-9);
  }
}

TEST(KalmanTest, CovarianceGrowsAndStaysPositiveDefinite) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  Trajectory past = line(10, -50.0, 25.0, 0.3, 0.1, 0.2);
  for (int k = 0; k < 10; ++k) past.row(k) += Eigen::RowVector2d(noise(rng), noise(rng));
  const auto p = kalman_cv_predict(past, KalmanCVConfig{}, 15);
  ASSERT_EQ(p.covariance.size(), 15u);
  double prev = 0.0;
  for (const auto &c : p.covariance) {
    EXPECT_GT(c.trace(), prev);
    prev = c.trace();
    EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(c.determinant(), 0.0);
    EXPECT_GT(c(0, 0), 0.0);
  }
}

TEST(KalmanTest, TranslationAndRotationEquivariance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory past(10, 2);
    for (int k = 0; k < 10; ++k) past.row(k) << 5.0 * k + u(rng) * 0.1, u(rng) * 0.1;
    const KalmanCVConfig cfg;
    const auto base = kalman_cv_predict(past, cfg, 15);

    const Eigen::RowVector2d shift(u(rng), u(rng));
    Trajectory moved = past;
    moved.rowwise() += shift;
    const auto tp = kalman_cv_predict(moved, cfg, 15);
    Trajectory expect = base.mean;
    expect.rowwise() += shift;
    EXPECT_LE((tp.mean - expect).cwiseAbs().maxCoeff(), 1e-9);
    for (int t = 0; t < 15; ++t) {
      EXPECT_LE((tp.covariance[t] - base.covariance[t]).cwiseAbs().maxCoeff(), 1e-9);
    }

    const double theta = u(rng);
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const Trajectory rotated = past * R.transpose();
    const auto rp = kalman_cv_predict(rotated, cfg, 15);
    EXPECT_LE((rp.mean - base.mean * R.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    for (int t = 0; t < 15; ++t) {
      const Eigen::Matrix2d c = R * base.covariance[t] * R.transpose();
      EXPECT_LE((rp.covariance[t] - c).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(KalmanTest, LaneKeepingTrafficIsPredictedWell) {
  auto cfg = testing::small_synth(200, 12, 2, 8);
  cfg.lane_change_prob = 0.0;
  const auto scenes = synth_generate(cfg).scenes;
  const auto forecasts = kalman_scenes(scenes, KalmanCVConfig{}, 15);
  const auto r = rmse(means_of(forecasts), scenes);
  EXPECT_LE(r.longitudinal[2], 0.2);
  EXPECT_LE(r.lateral[2], 0.2);
}

TEST(KalmanTest, MaskedSlotsGetPlaceholders) {
  std::mt19937_64 rng(1);
  Scene s = testing::random_scene(3, 2, rng);
  s.vehicle_valid[2] = 0;
  s.vehicles[2].past.setZero();
  s.vehicles[2].future.setZero();
  s.vehicles[2].props.setZero();
  s.dt = 0.1;
  const auto f = kalman_forecast(s, KalmanCVConfig{}, 15);
  ASSERT_EQ(f.mean.size(), 3u);
  EXPECT_TRUE(f.mean[2].isZero(0));
  EXPECT_EQ(f.covariance[2][0], Eigen::Matrix2d::Identity());
  KalmanCVConfig direct;
  direct.dt = 0.1;
  EXPECT_EQ(f.mean[1], kalman_cv_predict(s.vehicles[1].past, direct, 15).mean);
}

TEST(KalmanTest, RejectsBadParameters) {
  const Trajectory past = line(10, 0.0, 1.0, 0.0, 0.0, 0.2);
  KalmanCVConfig cfg;
  cfg.q = 0.0;
  EXPECT_THROW(kalman_cv_predict(past, cfg, 15), ParameterError);
  cfg = KalmanCVConfig{};
  cfg.r = -1.0;
  EXPECT_THROW(kalman_cv_predict(past, cfg, 15), ParameterError);
  EXPECT_THROW(kalman_cv_predict(line(1, 0, 0, 0, 0, 1), KalmanCVConfig{}, 15), ParameterError);
  EXPECT_THROW(kalman_cv_predict(past, KalmanCVConfig{}, 0), ParameterError);
}

} // namespace
} // namespace atraj
