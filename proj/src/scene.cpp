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

#include "atraj/scene.hpp"

#include <cmath>

#include "atraj/binary_io.hpp"
#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

std::size_t Scene::n_valid_vehicles() const {
  std::size_t n = 0;
  for (auto v : vehicle_valid) n += v != 0;
  return n;
}

std::size_t Scene::n_valid_lanes() const {
  std::size_t n = 0;
  for (auto v : lane_valid) n += v != 0;
  return n;
}

std::size_t Scene::index_of(std::int64_t id) const {
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i].id == id && vehicle_valid[i]) return i;
  }
  throw NotFoundError("vehicle " + std::to_string(id) + " not in scene " +
                      std::to_string(scene_id));
}

void Scene::validate(std::size_t t_obs, std::size_t t_pred) const {
  const std::string where = "scene " + std::to_string(scene_id);
  if (vehicle_valid.size() != vehicles.size() || lane_valid.size() != lanes.size()) {
    throw DimensionError(where + ": mask length disagrees with slot count");
  }
  if (!(dt > 0.0)) throw ParameterError(where + ": dt must be positive");
  std::size_t egos = 0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto &v = vehicles[i];
    if (static_cast<std::size_t>(v.past.rows()) != t_obs ||
        static_cast<std::size_t>(v.future.rows()) != t_pred) {
      throw DimensionError(where + ": vehicle " + std::to_string(v.id) +
                           " has wrong trajectory length");
    }
    if (!v.past.allFinite() || !v.future.allFinite() || !v.props.allFinite()) {
      throw NumericError(where + ": non-finite coordinate");
    }
    if (!vehicle_valid[i]) {
      if (!v.past.isZero(0) || !v.future.isZero(0) || !v.props.isZero(0)) {
        throw ContractError(where + ": masked vehicle slot is not zero-filled");
      }
      continue;
    }
    if (v.id == ego_id) {
      ++egos;
      if (v.past.row(t_obs - 1).norm() != 0.0) {
        throw ContractError(where + ": ego is not at the origin");
      }
    }
  }
  if (egos != 1) throw ContractError(where + ": expected exactly one ego");
  for (std::size_t m = 0; m < lanes.size(); ++m) {
    if (!lanes[m].allFinite()) throw NumericError(where + ": non-finite lane");
    if (!lane_valid[m] && !lanes[m].isZero(0)) {
      throw ContractError(where + ": masked lane slot is not zero-filled");
    }
  }
}

bool Scene::operator==(const Scene &o) const {
  if (scene_id != o.scene_id || ego_id != o.ego_id || dt != o.dt ||
      vehicles.size() != o.vehicles.size() || lanes != o.lanes ||
      vehicle_valid != o.vehicle_valid || lane_valid != o.lane_valid) {
    return false;
  }
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto &a = vehicles[i];
    const auto &b = o.vehicles[i];
    if (a.id != b.id || a.props != b.props || a.past.rows() != b.past.rows() ||
        a.future.rows() != b.future.rows() || a.past != b.past ||
        a.future != b.future) {
      return false;
    }
  }
  return true;
}

namespace {

constexpr char kMagic[4] = {'A', 'T', 'R', 'S'};

void put_trajectory(ByteWriter &w, const Trajectory &t) {
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    w.put<double>(t(r, 0));
    w.put<double>(t(r, 1));
  }
}

Trajectory get_trajectory(ByteReader &r, std::size_t rows) {
  Trajectory t(static_cast<Eigen::Index>(rows), 2);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    t(i, 0) = r.get<double>();
    t(i, 1) = r.get<double>();
  }
  return t;
}

} // namespace

std::string encode_scenes(const SceneArchive &archive) {
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kSceneArchiveVersion);
  w.put_string(archive.provenance);
  w.put<std::uint64_t>(archive.scenes.size());
  for (const auto &s : archive.scenes) {
    const std::size_t t_obs = s.vehicles.empty() ? 0 : s.vehicles[0].past.rows();
    const std::size_t t_pred = s.vehicles.empty() ? 0 : s.vehicles[0].future.rows();
    w.put<std::uint64_t>(s.scene_id);
    w.put<std::int64_t>(s.ego_id);
    w.put<double>(s.dt);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.vehicles.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.lanes.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t_obs));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t_pred));
    for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
      const auto &v = s.vehicles[i];
      if (static_cast<std::size_t>(v.past.rows()) != t_obs ||
          static_cast<std::size_t>(v.future.rows()) != t_pred) {
        throw DimensionError("scene " + std::to_string(s.scene_id) +
                             ": ragged trajectories");
      }
      w.put<std::int64_t>(v.id);
      w.put<std::uint8_t>(s.vehicle_valid.at(i));
      w.put<double>(v.props.x());
      w.put<double>(v.props.y());
      put_trajectory(w, v.past);
      put_trajectory(w, v.future);
    }
    for (std::size_t m = 0; m < s.lanes.size(); ++m) {
      w.put<std::uint8_t>(s.lane_valid.at(m));
      for (int k = 0; k < 3; ++k) w.put<double>(s.lanes[m][k]);
    }
  }
  return w.take();
}

SceneArchive decode_scenes(std::string_view bytes) {
  ByteReader r(bytes, "scene archive");
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) {
    throw CorruptFileError("scene archive: bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kSceneArchiveVersion) {
    throw UnsupportedVersionError("scene archive version " + std::to_string(version) +
                                  " (supported: " +
                                  std::to_string(kSceneArchiveVersion) + ")");
  }
  SceneArchive archive;
  archive.provenance = r.get_string();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    Scene s;
    s.scene_id = r.get<std::uint64_t>();
    s.ego_id = r.get<std::int64_t>();
    s.dt = r.get<double>();
    const auto n = r.get<std::uint32_t>();
    const auto m = r.get<std::uint32_t>();
    const auto t_obs = r.get<std::uint32_t>();
    const auto t_pred = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      VehicleTrack v;
      v.id = r.get<std::int64_t>();
      s.vehicle_valid.push_back(r.get<std::uint8_t>());
      v.props.x() = r.get<double>();
      v.props.y() = r.get<double>();
      v.past = get_trajectory(r, t_obs);
      v.future = get_trajectory(r, t_pred);
      s.vehicles.push_back(std::move(v));
    }
    for (std::uint32_t j = 0; j < m; ++j) {
      s.lane_valid.push_back(r.get<std::uint8_t>());
      Eigen::Vector3d f;
      for (int c = 0; c < 3; ++c) f[c] = r.get<double>();
      s.lanes.push_back(f);
    }
    archive.scenes.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw CorruptFileError("scene archive: trailing bytes");
  return archive;
}

void save_scenes(const std::string &path, const SceneArchive &archive) {
  write_file(path, encode_scenes(archive));
}

SceneArchive load_scenes(const std::string &path) {
  return decode_scenes(read_file(path));
}

} // namespace atraj
