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

#ifndef ATRAJ_SCENE_HPP_
#define ATRAJ_SCENE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace atraj {

/// T x 2 positions in meters, one row per timestep (x longitudinal,
/// y lateral, left of travel positive).
using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct VehicleTrack {
  std::int64_t id = 0;
  Trajectory past;       // [t_obs, 2], ego frame
  Trajectory future;     // [t_pred, 2], ego frame
  Eigen::Vector2d props = Eigen::Vector2d::Zero();  // length, width (m)
};

/// One prediction instance. Positions are translated so that the ego's
/// last observed position is the origin. Lane features are
/// (center offset, left boundary offset, right boundary offset).
/// Masked slots are zero-filled.
struct Scene {
  std::uint64_t scene_id = 0;
  std::int64_t ego_id = 0;
  double dt = 0.2;
  std::vector<VehicleTrack> vehicles;
  std::vector<Eigen::Vector3d> lanes;
  std::vector<std::uint8_t> vehicle_valid;
  std::vector<std::uint8_t> lane_valid;

  std::size_t n_vehicles() const { return vehicles.size(); }
  std::size_t n_lanes() const { return lanes.size(); }
  std::size_t n_valid_vehicles() const;
  std::size_t n_valid_lanes() const;
  bool vehicle_is_valid(std::size_t i) const { return vehicle_valid.at(i) != 0; }

  /// Index of the vehicle with `id`; throws NotFoundError.
  std::size_t index_of(std::int64_t id) const;

  /// Checks the structural invariants: one valid ego at the origin, finite
  /// coordinates, matching extents, zero-filled masked slots.
  void validate(std::size_t t_obs, std::size_t t_pred) const;

  bool operator==(const Scene &other) const;
};

/// Header of a scene archive: free-form provenance text stored verbatim.
struct SceneArchive {
  std::string provenance;
  std::vector<Scene> scenes;
};

/// Binary, little-endian archive: magic "ATRS", u32 version, u32-prefixed
/// provenance text, u64 scene count, then one record per scene with
/// 64-bit floats.
std::string encode_scenes(const SceneArchive &archive);
SceneArchive decode_scenes(std::string_view bytes);
void save_scenes(const std::string &path, const SceneArchive &archive);
SceneArchive load_scenes(const std::string &path);

inline constexpr std::uint32_t kSceneArchiveVersion = 1;

} // namespace atraj

#endif // ATRAJ_SCENE_HPP_
