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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "atraj/data.hpp"
#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(std::string_view text, const char *what) {
  CsvTable table;
  std::size_t line_no = 0;
  bool have_header = false;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (auto &c : cells) c = trim(c);
    if (!have_header) {
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw SchemaError(std::string(what) + ": missing header row");
  return table;
}

std::size_t column(const CsvTable &t, const char *name, const char *what) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) {
    throw SchemaError(std::string(what) + ": missing column \"" + name + "\"");
  }
  return static_cast<std::size_t>(it - t.header.begin());
}

std::string_view cell(const CsvTable &t, std::size_t r, std::size_t c, const char *what) {
  if (c >= t.rows[r].size()) {
    throw ParseError(std::string(what) + " row " + std::to_string(t.line_numbers[r]) +
                     ": too few cells");
  }
  return t.rows[r][c];
}

std::string row_label(const CsvTable &t, std::size_t r, const char *what,
                      const std::string &col) {
  return std::string(what) + " row " + std::to_string(t.line_numbers[r]) +
         " column " + col;
}

std::vector<double> parse_markings(std::string_view text, const std::string &label) {
  std::vector<double> out;
  for (auto part : split(text, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    out.push_back(parse_double(part, label));
  }
  return out;
}

} // namespace

TrackTable parse_highd_text(std::string_view tracks_csv, std::string_view meta_csv) {
  TrackTable out;
  {
    const CsvTable meta = read_csv(meta_csv, "recording meta");
    const std::size_t c_rate = column(meta, "frameRate", "recording meta");
    const std::size_t c_up = column(meta, "upperLaneMarkings", "recording meta");
    const std::size_t c_low = column(meta, "lowerLaneMarkings", "recording meta");
    if (meta.rows.empty()) throw SchemaError("recording meta: no data row");
    out.frame_rate = parse_double(cell(meta, 0, c_rate, "recording meta"),
                                  row_label(meta, 0, "recording meta", "frameRate"));
    if (!(out.frame_rate > 0.0)) {
      throw ParseError("recording meta: frameRate must be positive");
    }
    out.upper_markings =
        parse_markings(cell(meta, 0, c_up, "recording meta"),
                       row_label(meta, 0, "recording meta", "upperLaneMarkings"));
    out.lower_markings =
        parse_markings(cell(meta, 0, c_low, "recording meta"),
                       row_label(meta, 0, "recording meta", "lowerLaneMarkings"));
  }

  const CsvTable tracks = read_csv(tracks_csv, "tracks");
  const char *names[] = {"frame", "id", "x", "y", "width", "height", "laneId"};
  std::size_t cols[7];
  for (int k = 0; k < 7; ++k) cols[k] = column(tracks, names[k], "tracks");
  std::unordered_map<std::int64_t, std::int64_t> last_frame;
  out.rows.reserve(tracks.rows.size());
  for (std::size_t r = 0; r < tracks.rows.size(); ++r) {
    auto num = [&](int k) {
      return parse_double(cell(tracks, r, cols[k], "tracks"),
                          row_label(tracks, r, "tracks", names[k]));
    };
    auto integer = [&](int k) {
      return parse_int(cell(tracks, r, cols[k], "tracks"),
                       row_label(tracks, r, "tracks", names[k]));
    };
    TrackRow row;
    row.frame = integer(0);
    row.id = integer(1);
    row.x = num(2);
    row.y = num(3);
    row.width = num(4);
    row.height = num(5);
    row.lane_id = integer(6);
    auto [it, fresh] = last_frame.try_emplace(row.id, row.frame);
    if (!fresh) {
      if (row.frame <= it->second) {
        throw ParseError("tracks row " + std::to_string(tracks.line_numbers[r]) +
                         ": frames of id " + std::to_string(row.id) +
                         " are not strictly increasing");
      }
      it->second = row.frame;
    }
    out.rows.push_back(row);
  }
  return out;
}

TrackTable parse_highd(const std::string &tracks_path, const std::string &meta_path) {
  return parse_highd_text(read_file(tracks_path), read_file(meta_path));
}

std::vector<std::size_t> window_starts(std::size_t n_steps, std::size_t window,
                                       std::size_t stride) {
  if (window == 0 || stride == 0) throw ParameterError("window and stride must be positive");
  std::vector<std::size_t> out;
  if (n_steps < window) return out;
  for (std::size_t s = 0; s + window <= n_steps; s += stride) out.push_back(s);
  return out;
}

std::vector<std::int64_t> decimate_frames(const std::vector<std::int64_t> &frames,
                                          std::int64_t factor) {
  if (factor < 1) throw ParameterError("decimation factor must be >= 1");
  std::vector<std::int64_t> out;
  for (auto f : frames) {
    if (f % factor == 0) out.push_back(f);
  }
  return out;
}

namespace {

struct Track {
  std::int64_t id = 0;
  std::int64_t first_step = 0;  // downsampled step of samples[0]
  std::vector<Eigen::Vector2d> center;  // road frame, contiguous steps
  Eigen::Vector2d props = Eigen::Vector2d::Zero();
  bool contiguous = true;
};

std::int64_t decimation_factor(double frame_rate, double target) {
  if (!(target > 0.0)) throw ConfigError("target rate must be positive");
  const double ratio = frame_rate / target;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError("target rate " + format_double(target) +
                      " Hz does not divide recording rate " + format_double(frame_rate) +
                      " Hz");
  }
  return static_cast<std::int64_t>(rounded);
}

} // namespace

BuildResult build_scenes(const TrackTable &table, const BuildOptions &opts) {
  if (opts.t_obs < 2 || opts.t_pred < 1) throw ParameterError("need t_obs >= 2, t_pred >= 1");
  if (opts.ego_stride == 0 || opts.max_vehicles == 0 || !(opts.radius_m > 0.0)) {
    throw ParameterError("ego_stride, max_vehicles and radius_m must be positive");
  }
  const std::int64_t factor = decimation_factor(table.frame_rate, opts.target_rate_hz);
  const double dt = static_cast<double>(factor) / table.frame_rate;
  const std::size_t window = opts.t_obs + opts.t_pred;

  std::map<std::int64_t, Track> tracks;
  for (const auto &row : table.rows) {
    if (row.frame % factor != 0) continue;
    const std::int64_t step = row.frame / factor;
    Track &t = tracks[row.id];
    const Eigen::Vector2d c(row.x + 0.5 * row.width, row.y + 0.5 * row.height);
    if (t.center.empty()) {
      t.id = row.id;
      t.first_step = step;
      t.props = {row.width, row.height};
    } else if (step != t.first_step + static_cast<std::int64_t>(t.center.size())) {
      t.contiguous = false;
    }
    t.center.push_back(c);
  }
  BuildResult result;
  if (tracks.empty()) return result;

  std::int64_t g_min = tracks.begin()->second.first_step;
  std::int64_t g_max = g_min;
  for (const auto &[id, t] : tracks) {
    g_min = std::min(g_min, t.first_step);
    g_max = std::max(g_max, t.first_step + static_cast<std::int64_t>(t.center.size()) - 1);
  }
  const auto starts =
      window_starts(static_cast<std::size_t>(g_max - g_min + 1), window, opts.stride);

  for (std::size_t w0 : starts) {
    const std::int64_t g0 = g_min + static_cast<std::int64_t>(w0);
    std::vector<const Track *> covering;
    for (const auto &[id, t] : tracks) {
      if (!t.contiguous) continue;
      if (t.first_step <= g0 &&
          g0 + static_cast<std::int64_t>(window) <=
              t.first_step + static_cast<std::int64_t>(t.center.size())) {
        covering.push_back(&t);
      }
    }
    if (covering.empty()) {
      ++result.skipped_windows;
      continue;
    }
    auto at = [&](const Track *t, std::size_t j) -> const Eigen::Vector2d & {
      return t->center[static_cast<std::size_t>(g0 - t->first_step) + j];
    };
    auto direction = [&](const Track *t) {
      return at(t, window - 1).x() >= at(t, 0).x() ? 1.0 : -1.0;
    };
    // Road frame to travel frame: longitudinal along travel, lateral to the
    // left of travel (image y grows downward).
    auto to_travel = [](const Eigen::Vector2d &p, double dir) {
      return Eigen::Vector2d(dir * p.x(), -dir * p.y());
    };

    for (std::size_t e = 0; e < covering.size(); e += opts.ego_stride) {
      const Track *ego = covering[e];
      const double dir = direction(ego);
      const auto &marks = dir > 0 ? table.lower_markings : table.upper_markings;
      if (marks.size() < 2) {
        ++result.skipped_windows;
        continue;
      }
      const Eigen::Vector2d origin = to_travel(at(ego, opts.t_obs - 1), dir);

      std::vector<std::pair<double, const Track *>> near;
      for (const Track *t : covering) {
        if (t == ego || direction(t) != dir) continue;
        const double gap =
            std::abs(to_travel(at(t, opts.t_obs - 1), dir).x() - origin.x());
        if (gap <= opts.radius_m) near.emplace_back(gap, t);
      }
      std::stable_sort(near.begin(), near.end(),
                       [](const auto &a, const auto &b) { return a.first < b.first; });
      std::vector<const Track *> members{ego};
      for (const auto &[gap, t] : near) {
        if (members.size() >= opts.max_vehicles) break;
        members.push_back(t);
      }

      Scene scene;
      scene.scene_id = result.scenes.size();
      scene.ego_id = ego->id;
      scene.dt = dt;
      for (const Track *t : members) {
        VehicleTrack v;
        v.id = t->id;
        v.props = t->props;
        v.past.resize(static_cast<Eigen::Index>(opts.t_obs), 2);
        v.future.resize(static_cast<Eigen::Index>(opts.t_pred), 2);
        for (std::size_t j = 0; j < window; ++j) {
          const Eigen::Vector2d p = to_travel(at(t, j), dir) - origin;
          if (j < opts.t_obs) {
            v.past.row(static_cast<Eigen::Index>(j)) = p.transpose();
          } else {
            v.future.row(static_cast<Eigen::Index>(j - opts.t_obs)) = p.transpose();
          }
        }
        scene.vehicles.push_back(std::move(v));
        scene.vehicle_valid.push_back(1);
      }
      std::vector<double> lateral;
      for (double m : marks) lateral.push_back(-dir * m - origin.y());
      std::sort(lateral.begin(), lateral.end());
      for (std::size_t k = 0; k + 1 < lateral.size(); ++k) {
        const double right = lateral[k];
        const double left = lateral[k + 1];
        scene.lanes.emplace_back(0.5 * (left + right), left, right);
        scene.lane_valid.push_back(1);
      }
      result.scenes.push_back(std::move(scene));
    }
  }
  return result;
}

namespace {

constexpr double kExportLongOffset = 500.0;
constexpr double kExportLatOffset = 20.0;

std::string text(double v) { return format_double(v); }

} // namespace

std::pair<std::string, std::string> export_highd_text(const std::vector<Scene> &scenes) {
  if (scenes.empty()) throw ContractError("export: empty scene set");
  const double dt = scenes.front().dt;
  std::ostringstream tracks;
  tracks << "frame,id,x,y,width,height,xVelocity,laneId\n";
  std::vector<double> boundaries;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene &sc = scenes[s];
    if (sc.dt != dt) throw ContractError("export: scenes disagree on dt");
    // Shift each scene laterally so that its lowest lane boundary sits at
    // the same road coordinate; markings are then shared by all scenes.
    double base = 0.0;
    bool have_lane = false;
    for (std::size_t m = 0; m < sc.lanes.size(); ++m) {
      if (!sc.lane_valid[m]) continue;
      base = have_lane ? std::min(base, sc.lanes[m][2]) : sc.lanes[m][2];
      have_lane = true;
    }
    if (s == 0) {
      for (std::size_t m = 0; m < sc.lanes.size(); ++m) {
        if (!sc.lane_valid[m]) continue;
        boundaries.push_back(sc.lanes[m][1] - base);
        boundaries.push_back(sc.lanes[m][2] - base);
      }
    }
    std::size_t window = 0;
    for (const auto &v : sc.vehicles) {
      window = std::max<std::size_t>(window, v.past.rows() + v.future.rows());
    }
    const std::int64_t frame0 = static_cast<std::int64_t>(s * (window + 10));
    // Ego first so it has the smallest id of its block.
    std::vector<std::size_t> order;
    const std::size_t ego = sc.index_of(sc.ego_id);
    order.push_back(ego);
    for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
      if (i != ego && sc.vehicle_valid[i]) order.push_back(i);
    }
    for (std::size_t slot = 0; slot < order.size(); ++slot) {
      const auto &v = sc.vehicles[order[slot]];
      const std::int64_t id = static_cast<std::int64_t>(s * 1000 + slot + 1);
      const std::size_t t_obs = v.past.rows();
      for (std::size_t j = 0; j < window; ++j) {
        const Eigen::RowVector2d p =
            j < t_obs ? v.past.row(static_cast<Eigen::Index>(j))
                      : v.future.row(static_cast<Eigen::Index>(j - t_obs));
        const double cx = p.x() + kExportLongOffset;
        const double cy = kExportLatOffset - (p.y() - base);
        tracks << (frame0 + static_cast<std::int64_t>(j)) << ',' << id << ','
               << text(cx - 0.5 * v.props.x()) << ',' << text(cy - 0.5 * v.props.y())
               << ',' << text(v.props.x()) << ',' << text(v.props.y()) << ",0,1\n";
      }
    }
  }
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                   boundaries.end());
  std::ostringstream meta;
  meta << "id,frameRate,upperLaneMarkings,lowerLaneMarkings\n1," << text(1.0 / dt)
       << ",,";
  for (std::size_t k = boundaries.size(); k-- > 0;) {
    meta << text(kExportLatOffset - boundaries[k]) << (k ? ";" : "");
  }
  meta << '\n';
  return {tracks.str(), meta.str()};
}

void export_highd(const std::vector<Scene> &scenes, const std::string &tracks_path,
                  const std::string &meta_path) {
  auto [tracks, meta] = export_highd_text(scenes);
  write_file(tracks_path, tracks);
  write_file(meta_path, meta);
}

} // namespace atraj
