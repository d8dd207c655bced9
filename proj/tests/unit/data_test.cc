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
#include <sstream>

#include <gtest/gtest.h>

#include "atraj/data.hpp"
#include "test_util.hpp"

namespace atraj {
namespace {

const char *kMeta =
    "id,frameRate,upperLaneMarkings,lowerLaneMarkings\n"
    "1,25,8.5;12.0;15.5,21.0;24.5;28.0\n";

/// Tracks CSV of straight drivers: (id, first frame, frames, x0, vx, y).
std::string tracks_csv(const std::vector<std::tuple<int, int, int, double, double, double>> &cars) {
  std::ostringstream os;
  os << "frame,id,x,y,width,height,laneId\n";
  for (const auto &[id, f0, n, x0, vx, y] : cars) {
    for (int f = f0; f < f0 + n; ++f) {
      os << f << ',' << id << ',' << x0 + vx * (f - f0) / 25.0 << ',' << y << ",4.5,1.8,2\n";
    }
  }
  return os.str();
}

TEST(ParseHighdTest, TwoRowEcho) {
  const std::string tracks =
      "frame,id,x,y,width,height,xVelocity,laneId\n"
      "1,7,100.5,22.25,4.6,1.9,30.1,2\n"
      "2,7,101.75,22.5,4.6,1.9,30.2,2\n";
  const TrackTable t = parse_highd_text(tracks, kMeta);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.frame_rate, 25.0);
  EXPECT_EQ(t.upper_markings, (std::vector<double>{8.5, 12.0, 15.5}));
  EXPECT_EQ(t.lower_markings, (std::vector<double>{21.0, 24.5, 28.0}));
  EXPECT_EQ(t.rows[0].frame, 1);
  EXPECT_EQ(t.rows[0].id, 7);
  EXPECT_EQ(t.rows[0].x, 100.5);
  EXPECT_EQ(t.rows[0].y, 22.25);
  EXPECT_EQ(t.rows[0].width, 4.6);
  EXPECT_EQ(t.rows[0].height, 1.9);
  EXPECT_EQ(t.rows[0].lane_id, 2);
  EXPECT_EQ(t.rows[1].frame, 2);
  EXPECT_EQ(t.rows[1].x, 101.75);
  EXPECT_EQ(t.rows[1].y, 22.5);
}

TEST(ParseHighdTest, MissingColumnIsASchemaErrorNamingIt) {
  const std::string tracks = "frame,id,y,width,height,laneId\n1,1,2,4,2,1\n";
  try {
    parse_highd_text(tracks, kMeta);
    FAIL();
  } catch (const SchemaError &e) {
    EXPECT_NE(std::string(e.what()).find("\"x\""), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_highd_text("frame,id,x,y,width,height,laneId\n", "id,frameRate\n1,25\n"),
               SchemaError);
  EXPECT_THROW(parse_highd_text("", kMeta), SchemaError);
}

TEST(ParseHighdTest, MalformedValuesAreParseErrors) {
  EXPECT_THROW(parse_highd_text("frame,id,x,y,width,height,laneId\n1,1,abc,2,4,2,1\n", kMeta),
               ParseError);
  EXPECT_THROW(parse_highd_text("frame,id,x,y,width,height,laneId\n2,1,0,0,4,2,1\n1,1,0,0,4,2,1\n",
                                kMeta),
               ParseError);
  EXPECT_THROW(parse_highd_text("frame,id,x,y,width,height,laneId\n1,1,0\n", kMeta), ParseError);
}

TEST(WindowTest, CountMatchesFormulaAndBruteForce) {
  for (std::size_t n = 0; n < 60; ++n) {
    for (std::size_t w = 1; w < 30; w += 4) {
      for (std::size_t stride = 1; stride < 7; ++stride) {
        const auto starts = window_starts(n, w, stride);
        const std::size_t formula = n < w ? 0 : (n - w) / stride + 1;
        std::size_t brute = 0;
        for (std::size_t s = 0; s < n; ++s) brute += (s % stride == 0 && s + w <= n);
        EXPECT_EQ(starts.size(), formula);
        EXPECT_EQ(starts.size(), brute);
        for (std::size_t k = 0; k < starts.size(); ++k) EXPECT_EQ(starts[k], k * stride);
      }
    }
  }
  EXPECT_THROW(window_starts(10, 0, 1), ParameterError);
  EXPECT_THROW(window_starts(10, 2, 0), ParameterError);
}

TEST(DecimationTest, EveryFifthFrame) {
  std::vector<std::int64_t> frames(40);
  for (std::int64_t f = 0; f < 40; ++f) frames[static_cast<std::size_t>(f)] = f;
  EXPECT_EQ(decimate_frames(frames, 5), (std::vector<std::int64_t>{0, 5, 10, 15, 20, 25, 30, 35}));
  EXPECT_EQ(decimate_frames(frames, 1), frames);
  EXPECT_THROW(decimate_frames(frames, 0), ParameterError);
}

TEST(DecimationTest, DownsamplingAndWindowingCommute) {
  // Windows of w downsampled steps: decimate-then-window equals
  // window-at-full-rate (length (w-1)k+1, stride k*s) then decimate.
  for (std::int64_t k : {1, 2, 5}) {
    for (std::size_t n_full : {37u, 125u, 250u}) {
      for (std::size_t w : {3u, 25u}) {
        for (std::size_t s : {1u, 4u}) {
          std::vector<std::int64_t> frames(n_full);
          for (std::size_t i = 0; i < n_full; ++i) frames[i] = static_cast<std::int64_t>(i);
          std::vector<std::vector<std::int64_t>> a, b;
          const auto dec = decimate_frames(frames, k);
          for (auto st : window_starts(dec.size(), w, s)) {
            a.emplace_back(dec.begin() + static_cast<std::ptrdiff_t>(st),
                           dec.begin() + static_cast<std::ptrdiff_t>(st + w));
          }
          const std::size_t span = (w - 1) * static_cast<std::size_t>(k) + 1;
          for (auto st : window_starts(n_full, span, s * static_cast<std::size_t>(k))) {
            b.push_back(decimate_frames(
                std::vector<std::int64_t>(frames.begin() + static_cast<std::ptrdiff_t>(st),
                                          frames.begin() + static_cast<std::ptrdiff_t>(st + span)),
                k));
          }
          EXPECT_EQ(a, b) << k << ' ' << n_full << ' ' << w << ' ' << s;
        }
      }
    }
  }
}

TEST(BuildScenesTest, SingleStraightDriverSitsAtTheOrigin) {
  const TrackTable t = parse_highd_text(tracks_csv({{1, 0, 125, 100.0, 30.0, 23.0}}), kMeta);
  BuildOptions opts;
  const auto r = build_scenes(t, opts);
  ASSERT_EQ(r.scenes.size(), 1u);
  const Scene &s = r.scenes[0];
  EXPECT_DOUBLE_EQ(s.dt, 0.2);
  ASSERT_EQ(s.vehicles.size(), 1u);
  EXPECT_TRUE(s.vehicles[0].past.col(1).isZero(1e-12));
  EXPECT_TRUE(s.vehicles[0].future.col(1).isZero(1e-12));
  EXPECT_EQ(s.vehicles[0].past.row(9).norm(), 0.0);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(s.vehicles[0].past(j, 0), 6.0 * (j - 9), 1e-9);
  EXPECT_NEAR(s.vehicles[0].future(14, 0), 6.0 * 15, 1e-9);
  EXPECT_NO_THROW(s.validate(10, 15));
}

TEST(BuildScenesTest, ExpectedSceneCountOnATinyRecording) {
  // Two cars over 150 frames (30 steps at 5 Hz) and one short-lived car.
  const TrackTable t = parse_highd_text(
      tracks_csv({{1, 0, 150, 100.0, 30.0, 23.0}, {2, 0, 150, 80.0, 28.0, 26.5},
                  {3, 50, 60, 120.0, 30.0, 26.5}}),
      kMeta);
  BuildOptions opts;
  opts.stride = 1;
  const auto r = build_scenes(t, opts);
  // 30 steps, 25-step window: 6 windows, each with 2 egos (car 3 never
  // spans a window).
  EXPECT_EQ(r.scenes.size(), 12u);
  EXPECT_EQ(r.skipped_windows, 0u);
  for (const auto &s : r.scenes) {
    EXPECT_EQ(s.n_vehicles(), 2u);
    EXPECT_NO_THROW(s.validate(10, 15));
  }
  opts.ego_stride = 2;
  EXPECT_EQ(build_scenes(t, opts).scenes.size(), 6u);
  opts.ego_stride = 1;
  opts.radius_m = 5.0;
  for (const auto &s : build_scenes(t, opts).scenes) EXPECT_EQ(s.n_vehicles(), 1u);
  opts.radius_m = 100.0;
  opts.max_vehicles = 1;
  for (const auto &s : build_scenes(t, opts).scenes) EXPECT_EQ(s.n_vehicles(), 1u);
}

TEST(BuildScenesTest, NonIntegerRateRatioIsAConfigError) {
  const TrackTable t = parse_highd_text(tracks_csv({{1, 0, 125, 100.0, 30.0, 23.0}}), kMeta);
  BuildOptions opts;
  opts.target_rate_hz = 4.0;
  EXPECT_THROW(build_scenes(t, opts), ConfigError);
}

TEST(BuildScenesTest, BothDirectionsGiveOrderedLanesAndForwardMotion) {
  // Car 1 drives +x in the lower half, car 2 drives -x in the upper half.
  const TrackTable t = parse_highd_text(
      tracks_csv({{1, 0, 125, 100.0, 30.0, 23.0}, {2, 0, 125, 400.0, -25.0, 10.0}}), kMeta);
  const auto r = build_scenes(t, BuildOptions{});
  ASSERT_EQ(r.scenes.size(), 2u);
  for (const auto &s : r.scenes) {
    ASSERT_EQ(s.n_vehicles(), 1u);
    EXPECT_GT(s.vehicles[0].future(14, 0), 0.0);
    EXPECT_EQ(s.n_lanes(), 2u);
    for (const auto &lane : s.lanes) {
      EXPECT_GT(lane[1], lane[0]);
      EXPECT_GT(lane[0], lane[2]);
    }
    // The ego's lane contains lateral 0.
    bool inside = false;
    for (const auto &lane : s.lanes) inside = inside || (lane[2] <= 0.0 && 0.0 <= lane[1]);
    EXPECT_TRUE(inside);
  }
}

TEST(ExportTest, RoundTripReproducesScenes) {
  auto cfg = testing::small_synth(8, 21, 2, 7);
  const auto scenes = synth_generate(cfg).scenes;
  const auto [tracks, meta] = export_highd_text(scenes);
  const TrackTable table = parse_highd_text(tracks, meta);
  BuildOptions opts;
  opts.stride = 25 + 10;
  opts.ego_stride = 1000000;
  opts.radius_m = 1e6;
  opts.max_vehicles = 100;
  const auto rebuilt = build_scenes(table, opts).scenes;
  ASSERT_EQ(rebuilt.size(), scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene &a = scenes[s];
    const Scene &b = rebuilt[s];
    ASSERT_EQ(b.n_vehicles(), a.n_vehicles());
    EXPECT_EQ(b.ego_id, static_cast<std::int64_t>(s * 1000 + 1));
    EXPECT_NEAR(b.dt, a.dt, 1e-12);
    std::map<std::int64_t, const VehicleTrack *> by_id;
    for (const auto &v : b.vehicles) by_id[v.id] = &v;
    std::size_t slot = 1;
    for (std::size_t i = 0; i < a.n_vehicles(); ++i) {
      const auto &v = a.vehicles[i];
      const bool ego = v.id == a.ego_id;
      const auto id = static_cast<std::int64_t>(s * 1000 + (ego ? 1 : ++slot));
      ASSERT_TRUE(by_id.count(id)) << id;
      const VehicleTrack &w = *by_id[id];
      EXPECT_LE((w.past - v.past).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((w.future - v.future).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((w.props - v.props).cwiseAbs().maxCoeff(), 1e-9);
    }
    ASSERT_EQ(b.n_lanes(), a.n_lanes());
    for (std::size_t m = 0; m < a.n_lanes(); ++m) {
      EXPECT_LE((b.lanes[m] - a.lanes[m]).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(SynthTest, SameSeedIsBitwiseIdentical) {
  const auto cfg = testing::small_synth(30, 77);
  const auto a = synth_generate(cfg), b = synth_generate(cfg);
  for (std::size_t i = 0; i < a.scenes.size(); ++i) EXPECT_TRUE(a.scenes[i] == b.scenes[i]);
  auto other = cfg;
  other.seed = 78;
  EXPECT_FALSE(synth_generate(other).scenes[0] == a.scenes[0]);
}

TEST(SynthTest, ScenesSatisfyStructuralInvariants) {
  auto cfg = testing::small_synth(200, 5, 1, 12);
  const auto set = synth_generate(cfg);
  for (const auto &s : set.scenes) {
    EXPECT_NO_THROW(s.validate(10, 15));
    EXPECT_GE(s.n_vehicles(), 1u);
    EXPECT_LE(s.n_vehicles(), 12u);
    EXPECT_EQ(s.vehicles[s.index_of(s.ego_id)].past.row(9).norm(), 0.0);
    EXPECT_EQ(s.n_lanes(), 3u);
    for (const auto &lane : s.lanes) {
      EXPECT_GT(lane[1], lane[0]);
      EXPECT_GT(lane[0], lane[2]);
    }
    for (std::size_t m = 0; m + 1 < s.n_lanes(); ++m) {
      EXPECT_NEAR(s.lanes[m][1], s.lanes[m + 1][2], 1e-12);
    }
  }
}

TEST(SynthTest, LaneKeepingStaysWithinTheNoiseBand) {
  auto cfg = testing::small_synth(100, 6, 3, 10);
  cfg.lane_change_prob = 0.0;
  const auto set = synth_generate(cfg);
  for (const auto &s : set.scenes) {
    for (const auto &v : s.vehicles) {
      const Eigen::VectorXd y = v.future.col(1);
      const double var = (y.array() - y.mean()).square().mean();
      EXPECT_LE(std::sqrt(var), 4.0 * cfg.noise_sigma);
    }
  }
  for (const auto &m : set.maneuvers)
    for (const auto &lc : m) EXPECT_FALSE(lc.active);
}

TEST(SynthTest, LaneChangeFractionFollowsTheProbability) {
  auto cfg = testing::small_synth(200, 8, 5, 5);
  cfg.lane_change_prob = 0.5;
  const auto set = synth_generate(cfg);
  std::size_t total = 0, active = 0;
  for (const auto &m : set.maneuvers) {
    for (const auto &lc : m) {
      ++total;
      active += lc.active;
      if (lc.active) {
        EXPECT_EQ(std::abs(lc.to_lane - lc.from_lane), 1);
      }
    }
  }
  ASSERT_EQ(total, 1000u);
  EXPECT_NEAR(static_cast<double>(active) / static_cast<double>(total), 0.5, 0.05);
}

TEST(SynthTest, RejectsBadConfigurations) {
  auto cfg = testing::small_synth(0, 1);
  EXPECT_THROW(synth_generate(cfg), ParameterError);
  cfg = testing::small_synth(5, 1, 4, 3);
  EXPECT_THROW(synth_generate(cfg), ParameterError);
  cfg = testing::small_synth(5, 1);
  cfg.lane_change_prob = 1.5;
  EXPECT_THROW(synth_generate(cfg), ParameterError);
}

TEST(BatchTest, PaddingAndMasks) {
  std::mt19937_64 rng(3);
  const Scene a = testing::random_scene(3, 2, rng, 0), b = testing::random_scene(7, 4, rng, 1);
  const auto batch = make_batch<double>(std::vector<const Scene *>{&a, &b}, Hyperparams{});
  EXPECT_EQ(batch.n_vehicles, 7u);
  EXPECT_EQ(batch.n_lanes, 4u);
  EXPECT_EQ(batch.vehicles.shape(), (Shape{2, 7, 22}));
  std::size_t sums[2] = {0, 0};
  for (std::size_t bi = 0; bi < 2; ++bi)
    for (std::size_t i = 0; i < 7; ++i) sums[bi] += batch.vehicle_mask.is_valid(bi, i);
  EXPECT_EQ(sums[0], 3u);
  EXPECT_EQ(sums[1], 7u);
  for (std::size_t i = 3; i < 7; ++i)
    for (std::size_t f = 0; f < 22; ++f) EXPECT_EQ(batch.vehicles[i * 22 + f], 0.0);
}

TEST(BatchTest, OrderAndMultisetUnion) {
  const auto plain = batch_indices(10, 4, std::nullopt);
  EXPECT_EQ(plain, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}}));
  const auto shuffled = batch_indices(300, 128, 42);
  EXPECT_EQ(shuffled, batch_indices(300, 128, 42));
  EXPECT_NE(shuffled, batch_indices(300, 128, 43));
  std::vector<std::size_t> all;
  for (const auto &b : shuffled) {
    EXPECT_LE(b.size(), 128u);
    all.insert(all.end(), b.begin(), b.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(batch_indices(0, 4, std::nullopt), ContractError);
}

TEST(BatchTest, BatcherCoversTheSceneIdsOnce) {
  const auto scenes = testing::small_scenes(37, 2);
  Batcher<double> it(scenes, Hyperparams{}, 8, 5);
  EXPECT_EQ(it.size(), 5u);
  std::multiset<std::uint64_t> ids;
  while (auto b = it.next()) ids.insert(b->scene_ids.begin(), b->scene_ids.end());
  std::multiset<std::uint64_t> expect;
  for (const auto &s : scenes) expect.insert(s.scene_id);
  EXPECT_EQ(ids, expect);
}

} // namespace
} // namespace atraj
