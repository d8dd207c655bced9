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

#ifndef ATRAJ_EVALUATION_HPP_
#define ATRAJ_EVALUATION_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "atraj/data.hpp"
#include "atraj/kalman.hpp"
#include "atraj/model.hpp"
#include "atraj/scene.hpp"

namespace atraj {

/// Predicted means of one scene, one [t_pred, 2] trajectory per vehicle
/// slot (masked slots are ignored).
using ScenePrediction = std::vector<Trajectory>;

/// Zero-based future index of horizon `seconds`; ConfigError when the
/// horizon is not on the dt grid or beyond t_pred.
std::size_t horizon_index(double seconds, double dt, std::size_t t_pred);

struct RmseReport {
  std::vector<double> horizons;      // seconds
  std::vector<double> longitudinal;  // m
  std::vector<double> lateral;       // m
  std::vector<std::size_t> counts;
};

/// Axis-separated RMSE over all unmasked vehicles (optionally without the
/// ego) at each horizon, in the ego frame.
RmseReport rmse(const std::vector<ScenePrediction> &predictions,
                const std::vector<Scene> &scenes,
                const std::vector<double> &horizons = {1.0, 2.0, 3.0},
                bool exclude_ego = false);

/// True iff (y - mu)^T Sigma^-1 (y - mu) <= 9.
bool inside_3sigma(const Eigen::Vector2d &y, const Eigen::Vector2d &mu,
                   const Eigen::Matrix2d &sigma);

struct CalibrationReport {
  std::vector<double> horizons;
  std::vector<double> coverage;  // fraction inside the 3-sigma ellipse
  std::vector<std::size_t> counts;
};

CalibrationReport calibration(const std::vector<GaussianForecast> &forecasts,
                              const std::vector<Scene> &scenes,
                              const std::vector<double> &horizons = {1.0, 2.0, 3.0},
                              bool exclude_ego = false);

/// Fraction of `draws` samples from randomly chosen forecast Gaussians that
/// fall inside their own 3-sigma ellipse.
double self_sampled_coverage(const std::vector<GaussianForecast> &forecasts,
                             std::size_t draws, std::uint64_t seed);

/// Eval-mode forecasts for every scene, computed in double precision from
/// `params` in chunks of `chunk` scenes over `threads` workers. The result
/// does not depend on the thread count.
std::vector<GaussianForecast> predict_scenes(const ModelParams<double> &params,
                                             const std::vector<Scene> &scenes,
                                             unsigned threads = 1, std::size_t chunk = 64);

std::vector<GaussianForecast> kalman_scenes(const std::vector<Scene> &scenes,
                                            const KalmanCVConfig &cfg, std::size_t t_pred);

std::vector<ScenePrediction> means_of(const std::vector<GaussianForecast> &forecasts);

/// Ground truth as predictions.
std::vector<ScenePrediction> truth_of(const std::vector<Scene> &scenes);

/// Mean trace of the predicted covariance over all unmasked vehicles and
/// timesteps.
double mean_covariance_trace(const std::vector<GaussianForecast> &forecasts,
                             const std::vector<Scene> &scenes, bool exclude_ego = false);

// --- attention reporting ------------------------------------------------------

struct AttentionRow {
  LayerTag layer = LayerTag::kVehicleEncoder;
  std::size_t head = 0;
  std::int64_t query_id = 0;
  std::vector<std::string> peers;  // vehicle ids, or "lane<m>" for lane keys
  std::vector<double> weights;     // descending
};

/// Rows of the requested vehicles in every head of every layer, with
/// unmasked peers sorted by descending weight. NotFoundError for unknown
/// vehicle ids.
std::vector<AttentionRow> attention_report(const std::vector<AttentionRecord> &records,
                                           const Scene &scene,
                                           const std::vector<std::int64_t> &vehicle_ids);

/// One block per (layer, head): a header line, then one line per query.
std::string format_attention(const std::vector<AttentionRow> &rows,
                             const std::vector<std::string> &preamble = {});

// --- experiments --------------------------------------------------------------

struct ScalabilityRow {
  std::size_t n_vehicles = 0;
  std::size_t scenes = 0;
  RmseReport rmse;
  double mean_cov_trace = 0.0;
};

std::vector<ScalabilityRow> scalability_experiment(
    const ModelParams<double> &params,
    const std::vector<std::pair<std::size_t, std::vector<Scene>>> &sets, unsigned threads);

struct LatencyReport {
  std::size_t n_vehicles = 0;
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Wall-clock time of an eval-mode forward of one N-vehicle scene in
/// single precision, after `warmup` untimed runs.
LatencyReport latency_benchmark(const ModelParams<float> &params, std::size_t n_vehicles,
                                std::size_t repeats, std::size_t warmup = 10,
                                std::uint64_t seed = 0);

struct LaneChangeAttention {
  std::size_t considered = 0;
  std::size_t hits = 0;
  double rate() const { return considered ? static_cast<double>(hits) / considered : 0.0; }
};

/// For every lane-changing vehicle whose target lane is occupied, checks
/// whether its largest off-self weight in the head-averaged encoder
/// vehicle attention falls on a vehicle in the target lane.
LaneChangeAttention lane_change_attention(const ModelParams<double> &params,
                                          const SyntheticSet &set);

// --- reports and files --------------------------------------------------------

/// Rows = methods, columns = horizon x axis.
std::string format_rmse_table(const std::vector<std::pair<std::string, RmseReport>> &rows);

std::string rmse_csv(const std::vector<std::pair<std::string, RmseReport>> &rows,
                     const std::vector<std::string> &preamble = {});
std::string calibration_csv(const std::vector<std::pair<std::string, CalibrationReport>> &rows,
                            const std::vector<std::string> &preamble = {});

/// CSV with header "scene_id,vehicle_id,t_index,mu_x,mu_y".
std::string predictions_csv(const std::vector<ScenePrediction> &predictions,
                            const std::vector<Scene> &scenes,
                            const std::vector<std::string> &preamble = {});

/// Parses a prediction file and aligns it with `scenes`; every unmasked
/// vehicle-timestep must be present.
std::vector<ScenePrediction> parse_predictions_csv(std::string_view text,
                                                   const std::vector<Scene> &scenes,
                                                   std::size_t t_pred);

} // namespace atraj

#endif // ATRAJ_EVALUATION_HPP_
