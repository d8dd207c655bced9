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

#ifndef ATRAJ_DATA_HPP_
#define ATRAJ_DATA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atraj/model.hpp"
#include "atraj/scene.hpp"

namespace atraj {

// --- synthetic highway scenes -------------------------------------------------

struct SynthConfig {
  std::size_t n_scenes = 2000;
  std::size_t min_vehicles = 3;  // including the ego
  std::size_t max_vehicles = 10;
  std::size_t n_lanes = 3;
  double lane_change_prob = 0.3;
  double noise_sigma = 0.05;  // m
  double dt = 0.2;
  std::size_t t_obs = 10;
  std::size_t t_pred = 15;
  double speed_min = 20.0;  // m/s
  double speed_max = 35.0;
  double road_half_length = 100.0;  // m, around the ego
  double lane_width = 3.5;
  double lane_change_duration = 4.0;  // s, 1%..99% of the logistic profile
  std::uint64_t seed = 0;
  std::uint64_t first_scene_id = 0;

  void validate() const;
};

/// Ground-truth maneuver of one synthetic vehicle.
struct LaneChange {
  bool active = false;
  int from_lane = 0;
  int to_lane = 0;
  double center_time = 0.0;  // s from window start
};

struct SyntheticSet {
  std::vector<Scene> scenes;
  std::vector<std::vector<LaneChange>> maneuvers;  // [scene][vehicle]
};

/// Parallel straight lanes, constant speeds, optional single logistic lane
/// change per vehicle, i.i.d. Gaussian position noise. Vehicle 0 is the
/// ego. Each scene draws from its own seeded stream.
SyntheticSet synth_generate(const SynthConfig &cfg);

// --- highD ingestion ----------------------------------------------------------

struct TrackRow {
  std::int64_t frame = 0;
  std::int64_t id = 0;
  double x = 0.0;  // bounding-box corner, road frame (m)
  double y = 0.0;
  double width = 0.0;   // extent along x: vehicle length
  double height = 0.0;  // extent along y: vehicle width
  std::int64_t lane_id = 0;
};

struct TrackTable {
  double frame_rate = 25.0;
  std::vector<double> upper_markings;
  std::vector<double> lower_markings;
  std::vector<TrackRow> rows;
};

TrackTable parse_highd_text(std::string_view tracks_csv, std::string_view meta_csv);
TrackTable parse_highd(const std::string &tracks_path, const std::string &meta_path);

struct BuildOptions {
  std::size_t t_obs = 10;
  std::size_t t_pred = 15;
  std::size_t stride = 1;  // in downsampled steps
  double target_rate_hz = 5.0;
  std::size_t ego_stride = 1;  // every k-th covering vehicle serves as ego
  double radius_m = 100.0;
  std::size_t max_vehicles = 30;
};

struct BuildResult {
  std::vector<Scene> scenes;
  std::size_t skipped_windows = 0;
};

/// Downsamples to the target rate, slides a (t_obs + t_pred)-step window
/// and emits one ego-frame scene per ego for every window.
BuildResult build_scenes(const TrackTable &table, const BuildOptions &opts);

/// Start offsets of all full windows over `n_steps` samples.
std::vector<std::size_t> window_starts(std::size_t n_steps, std::size_t window,
                                       std::size_t stride);

/// Frames kept by integer decimation (frame % factor == 0).
std::vector<std::int64_t> decimate_frames(const std::vector<std::int64_t> &frames,
                                          std::int64_t factor);

/// Writes scenes in the highD column schema: scene s occupies its own
/// block of frames, vehicles drive in the +x direction.
std::pair<std::string, std::string> export_highd_text(const std::vector<Scene> &scenes);
void export_highd(const std::vector<Scene> &scenes, const std::string &tracks_path,
                  const std::string &meta_path);

// --- batching -----------------------------------------------------------------

/// Index groups of at most `batch_size`, in input order or shuffled by a
/// seeded Fisher-Yates permutation.
std::vector<std::vector<std::size_t>> batch_indices(
    std::size_t n_scenes, std::size_t batch_size,
    std::optional<std::uint64_t> shuffle_seed);

/// Iterates padded SceneBatch values over a scene collection.
template <typename S>
class Batcher {
 public:
  Batcher(const std::vector<Scene> &scenes, const Hyperparams &hyper,
          std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed)
      : scenes_(scenes), hyper_(hyper),
        order_(batch_indices(scenes.size(), batch_size, shuffle_seed)) {}

  std::size_t size() const { return order_.size(); }
  const std::vector<std::size_t> &indices(std::size_t k) const { return order_.at(k); }

  std::optional<SceneBatch<S>> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    std::vector<const Scene *> group;
    for (auto i : order_[cursor_]) group.push_back(&scenes_[i]);
    ++cursor_;
    return make_batch<S>(group, hyper_);
  }

 private:
  const std::vector<Scene> &scenes_;
  Hyperparams hyper_;
  std::vector<std::vector<std::size_t>> order_;
  std::size_t cursor_ = 0;
};

} // namespace atraj

#endif // ATRAJ_DATA_HPP_
