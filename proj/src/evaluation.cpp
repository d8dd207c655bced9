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

#include "atraj/evaluation.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

namespace {

bool scored(const Scene &scene, std::size_t i, bool exclude_ego) {
  return scene.vehicle_valid[i] && !(exclude_ego && scene.vehicles[i].id == scene.ego_id);
}

} // namespace

std::size_t horizon_index(double seconds, double dt, std::size_t t_pred) {
  if (!(seconds > 0.0) || !(dt > 0.0)) {
    throw ConfigError("horizon and dt must be positive");
  }
  const double steps = seconds / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps) || rounded < 1.0) {
    throw ConfigError("horizon " + format_double(seconds) + " s is not on the " +
                      format_double(dt) + " s grid");
  }
  const auto k = static_cast<std::size_t>(rounded);
  if (k > t_pred) {
    throw ConfigError("horizon " + format_double(seconds) + " s exceeds the " +
                      std::to_string(t_pred) + "-step prediction window");
  }
  return k - 1;
}

RmseReport rmse(const std::vector<ScenePrediction> &predictions,
                const std::vector<Scene> &scenes, const std::vector<double> &horizons,
                bool exclude_ego) {
  if (predictions.size() != scenes.size()) {
    throw DimensionError("rmse: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(scenes.size()) + " scenes");
  }
  RmseReport out;
  out.horizons = horizons;
  std::vector<double> sx(horizons.size(), 0.0), sy(horizons.size(), 0.0);
  out.counts.assign(horizons.size(), 0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene &sc = scenes[s];
    if (predictions[s].size() != sc.n_vehicles()) {
      throw DimensionError("rmse: scene " + std::to_string(sc.scene_id) +
                           " prediction has the wrong vehicle count");
    }
    for (std::size_t i = 0; i < sc.n_vehicles(); ++i) {
      if (!scored(sc, i, exclude_ego)) continue;
      const Trajectory &truth = sc.vehicles[i].future;
      const Trajectory &pred = predictions[s][i];
      if (pred.rows() != truth.rows()) {
        throw DimensionError("rmse: prediction length disagrees with truth");
      }
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        const auto k = static_cast<Eigen::Index>(
            horizon_index(horizons[h], sc.dt, static_cast<std::size_t>(truth.rows())));
        const double ex = pred(k, 0) - truth(k, 0);
        const double ey = pred(k, 1) - truth(k, 1);
        sx[h] += ex * ex;
        sy[h] += ey * ey;
        ++out.counts[h];
      }
    }
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const double n = static_cast<double>(std::max<std::size_t>(out.counts[h], 1));
    out.longitudinal.push_back(std::sqrt(sx[h] / n));
    out.lateral.push_back(std::sqrt(sy[h] / n));
  }
  return out;
}

bool inside_3sigma(const Eigen::Vector2d &y, const Eigen::Vector2d &mu,
                   const Eigen::Matrix2d &sigma) {
  const Eigen::Vector2d d = y - mu;
  const double det = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
  if (!(det > 0.0)) throw DegenerateError("covariance is not positive-definite");
  const double q = (sigma(1, 1) * d.x() * d.x() - (sigma(0, 1) + sigma(1, 0)) * d.x() * d.y() +
                    sigma(0, 0) * d.y() * d.y()) /
                   det;
  return q <= 9.0;
}

CalibrationReport calibration(const std::vector<GaussianForecast> &forecasts,
                              const std::vector<Scene> &scenes,
                              const std::vector<double> &horizons, bool exclude_ego) {
  if (forecasts.size() != scenes.size()) {
    throw DimensionError("calibration: forecast and scene counts differ");
  }
  CalibrationReport out;
  out.horizons = horizons;
  out.counts.assign(horizons.size(), 0);
  std::vector<std::size_t> inside(horizons.size(), 0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene &sc = scenes[s];
    for (std::size_t i = 0; i < sc.n_vehicles(); ++i) {
      if (!scored(sc, i, exclude_ego)) continue;
      const Trajectory &truth = sc.vehicles[i].future;
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        const auto k =
            horizon_index(horizons[h], sc.dt, static_cast<std::size_t>(truth.rows()));
        const auto ki = static_cast<Eigen::Index>(k);
        inside[h] += inside_3sigma(truth.row(ki).transpose(),
                                   forecasts[s].mean.at(i).row(ki).transpose(),
                                   forecasts[s].covariance.at(i).at(k));
        ++out.counts[h];
      }
    }
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    out.coverage.push_back(out.counts[h] ? static_cast<double>(inside[h]) / out.counts[h]
                                         : 0.0);
  }
  return out;
}

double self_sampled_coverage(const std::vector<GaussianForecast> &forecasts,
                             std::size_t draws, std::uint64_t seed) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Matrix2d>> pool;
  for (const auto &f : forecasts) {
    for (std::size_t i = 0; i < f.mean.size(); ++i) {
      for (std::size_t t = 0; t < f.covariance[i].size(); ++t) {
        pool.emplace_back(f.mean[i].row(static_cast<Eigen::Index>(t)).transpose(),
                          f.covariance[i][t]);
      }
    }
  }
  if (pool.empty() || draws == 0) throw ContractError("self_sampled_coverage: nothing to sample");
  std::mt19937_64 rng(seed);
  std::size_t inside = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto &[mu, sigma] =
        pool[std::min(pool.size() - 1,
                      static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size())))];
    const Eigen::Matrix2d L = sigma.llt().matrixL();
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform01(rng)));
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const Eigen::Vector2d z(r * std::cos(phi), r * std::sin(phi));
    inside += inside_3sigma(mu + L * z, mu, sigma);
  }
  return static_cast<double>(inside) / static_cast<double>(draws);
}

std::vector<GaussianForecast> predict_scenes(const ModelParams<double> &params,
                                             const std::vector<Scene> &scenes,
                                             unsigned threads, std::size_t chunk) {
  if (chunk == 0) throw ParameterError("predict_scenes: chunk must be positive");
  std::vector<GaussianForecast> out(scenes.size());
  const std::size_t n_chunks = (scenes.size() + chunk - 1) / chunk;
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * chunk, hi = std::min(scenes.size(), lo + chunk);
    std::vector<const Scene *> group;
    for (std::size_t s = lo; s < hi; ++s) group.push_back(&scenes[s]);
    const SceneBatch<double> batch = make_batch<double>(group, params.hyper);
    Graph<double> g;
    Binding<double> binding(g, params);
    const ForecastVars<double> f = forward(batch, binding, RunMode{}).forecast;
    for (std::size_t s = lo; s < hi; ++s) {
      out[s] = extract_forecast(f, s - lo, scenes[s].n_vehicles(), params.hyper.sigma_floor);
    }
  });
  return out;
}

std::vector<GaussianForecast> kalman_scenes(const std::vector<Scene> &scenes,
                                            const KalmanCVConfig &cfg, std::size_t t_pred) {
  std::vector<GaussianForecast> out;
  out.reserve(scenes.size());
  for (const auto &s : scenes) out.push_back(kalman_forecast(s, cfg, t_pred));
  return out;
}

std::vector<ScenePrediction> means_of(const std::vector<GaussianForecast> &forecasts) {
  std::vector<ScenePrediction> out;
  out.reserve(forecasts.size());
  for (const auto &f : forecasts) out.push_back(f.mean);
  return out;
}

std::vector<ScenePrediction> truth_of(const std::vector<Scene> &scenes) {
  std::vector<ScenePrediction> out;
  for (const auto &s : scenes) {
    ScenePrediction p;
    for (const auto &v : s.vehicles) p.push_back(v.future);
    out.push_back(std::move(p));
  }
  return out;
}

double mean_covariance_trace(const std::vector<GaussianForecast> &forecasts,
                             const std::vector<Scene> &scenes, bool exclude_ego) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (std::size_t i = 0; i < scenes[s].n_vehicles(); ++i) {
      if (!scored(scenes[s], i, exclude_ego)) continue;
      for (const auto &c : forecasts.at(s).covariance.at(i)) {
        sum += c.trace();
        ++n;
      }
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<AttentionRow> attention_report(const std::vector<AttentionRecord> &records,
                                           const Scene &scene,
                                           const std::vector<std::int64_t> &vehicle_ids) {
  std::vector<std::size_t> queries;
  for (auto id : vehicle_ids) queries.push_back(scene.index_of(id));
  std::vector<AttentionRow> out;
  for (const auto &rec : records) {
    const bool lane_keys = rec.layer == LayerTag::kLaneEncoder;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const std::size_t q = queries[qi];
      std::vector<std::pair<double, std::string>> cells;
      for (Eigen::Index k = 0; k < rec.weights.cols(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (lane_keys) {
          if (ku >= scene.n_lanes() || !scene.lane_valid[ku]) continue;
          cells.emplace_back(rec.weights(static_cast<Eigen::Index>(q), k),
                             "lane" + std::to_string(ku));
        } else {
          if (ku >= scene.n_vehicles() || !scene.vehicle_valid[ku]) continue;
          cells.emplace_back(rec.weights(static_cast<Eigen::Index>(q), k),
                             std::to_string(scene.vehicles[ku].id));
        }
      }
      std::stable_sort(cells.begin(), cells.end(),
                       [](const auto &a, const auto &b) { return a.first > b.first; });
      AttentionRow row;
      row.layer = rec.layer;
      row.head = rec.head;
      row.query_id = vehicle_ids[qi];
      for (auto &[w, peer] : cells) {
        row.peers.push_back(std::move(peer));
        row.weights.push_back(w);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::string format_attention(const std::vector<AttentionRow> &rows,
                             const std::vector<std::string> &preamble) {
  std::ostringstream os;
  for (const auto &line : preamble) os << "# " << line << '\n';
  bool first = true;
  LayerTag layer{};
  std::size_t head = 0;
  for (const auto &r : rows) {
    if (first || r.layer != layer || r.head != head) {
      os << "[layer " << to_string(r.layer) << " head " << r.head << "]\n";
      layer = r.layer;
      head = r.head;
      first = false;
    }
    os << "query " << r.query_id << ':';
    for (std::size_t k = 0; k < r.peers.size(); ++k) {
      os << ' ' << r.peers[k] << '=' << format_double(r.weights[k]);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<ScalabilityRow> scalability_experiment(
    const ModelParams<double> &params,
    const std::vector<std::pair<std::size_t, std::vector<Scene>>> &sets, unsigned threads) {
  std::vector<ScalabilityRow> out;
  for (const auto &[n, scenes] : sets) {
    const auto forecasts = predict_scenes(params, scenes, threads);
    ScalabilityRow row;
    row.n_vehicles = n;
    row.scenes = scenes.size();
    row.rmse = rmse(means_of(forecasts), scenes, {1.0, 2.0, 3.0}, params.hyper.exclude_ego);
    row.mean_cov_trace = mean_covariance_trace(forecasts, scenes, params.hyper.exclude_ego);
    out.push_back(std::move(row));
  }
  return out;
}

LatencyReport latency_benchmark(const ModelParams<float> &params, std::size_t n_vehicles,
                                std::size_t repeats, std::size_t warmup, std::uint64_t seed) {
  if (n_vehicles == 0 || repeats == 0) {
    throw ParameterError("latency benchmark needs N >= 1 and repeats >= 1");
  }
  SynthConfig cfg;
  cfg.n_scenes = 1;
  cfg.min_vehicles = cfg.max_vehicles = n_vehicles;
  cfg.t_obs = params.hyper.t_obs;
  cfg.t_pred = params.hyper.t_pred;
  cfg.seed = seed;
  const Scene scene = synth_generate(cfg).scenes.front();
  auto run = [&] {
    const SceneBatch<float> batch = make_batch<float>(scene, params.hyper);
    Graph<float> g;
    Binding<float> binding(g, params);
    return forward(batch, binding, RunMode{}).forecast.mu.value()[0];
  };
  volatile float sink = 0.0f;
  for (std::size_t k = 0; k < warmup; ++k) sink = sink + run();
  LatencyReport out;
  out.n_vehicles = n_vehicles;
  for (std::size_t k = 0; k < repeats; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + run();
    const auto t1 = std::chrono::steady_clock::now();
    out.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = out.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  out.mean_ms = total / static_cast<double>(sorted.size());
  const std::size_t n = sorted.size();
  out.median_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  out.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  return out;
}

LaneChangeAttention lane_change_attention(const ModelParams<double> &params,
                                          const SyntheticSet &set) {
  LaneChangeAttention out;
  for (std::size_t s = 0; s < set.scenes.size(); ++s) {
    const Scene &sc = set.scenes[s];
    const auto &man = set.maneuvers.at(s);
    const std::size_t last = params.hyper.t_obs - 1;
    auto lane_of = [&](std::size_t i) {
      const double y = sc.vehicles[i].past(static_cast<Eigen::Index>(last), 1);
      std::size_t best = 0;
      for (std::size_t m = 1; m < sc.n_lanes(); ++m) {
        if (std::abs(y - sc.lanes[m][0]) < std::abs(y - sc.lanes[best][0])) best = m;
      }
      return static_cast<int>(best);
    };
    std::vector<std::size_t> changers;
    for (std::size_t i = 0; i < sc.n_vehicles(); ++i) {
      if (!sc.vehicle_valid[i] || !man.at(i).active) continue;
      for (std::size_t j = 0; j < sc.n_vehicles(); ++j) {
        if (j != i && sc.vehicle_valid[j] && lane_of(j) == man[i].to_lane) {
          changers.push_back(i);
          break;
        }
      }
    }
    if (changers.empty()) continue;
    const Prediction p = predict(sc, params);
    Eigen::MatrixXd avg;
    std::size_t heads = 0;
    for (const auto &rec : p.attention) {
      if (rec.layer != LayerTag::kVehicleEncoder) continue;
      avg = heads ? Eigen::MatrixXd(avg + rec.weights) : rec.weights;
      ++heads;
    }
    for (std::size_t i : changers) {
      std::size_t best = i;
      double best_w = -1.0;
      for (std::size_t j = 0; j < sc.n_vehicles(); ++j) {
        if (j == i || !sc.vehicle_valid[j]) continue;
        const double w = avg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (w > best_w) {
          best_w = w;
          best = j;
        }
      }
      ++out.considered;
      out.hits += best != i && lane_of(best) == man[i].to_lane;
    }
  }
  return out;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(const std::string &s, std::size_t width) {
  return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

} // namespace

std::string format_rmse_table(const std::vector<std::pair<std::string, RmseReport>> &rows) {
  if (rows.empty()) return {};
  const auto &hz = rows.front().second.horizons;
  std::size_t name_w = 6;
  for (const auto &[name, r] : rows) name_w = std::max(name_w, name.size());
  const std::size_t col_w = 8;
  std::ostringstream os;
  const std::size_t block = col_w * hz.size();
  os << pad("Method", name_w) << " | " << pad("Longitudinal error (m)", block) << " | "
     << "Lateral error (m)\n";
  os << pad("", name_w) << " | ";
  for (double h : hz) os << lpad(format_double(h) + " s", col_w);
  os << " | ";
  for (double h : hz) os << lpad(format_double(h) + " s", col_w);
  os << '\n' << std::string(name_w + 6 + 2 * block, '-') << '\n';
  for (const auto &[name, r] : rows) {
    os << pad(name, name_w) << " | ";
    for (double v : r.longitudinal) os << lpad(fixed3(v), col_w);
    os << " | ";
    for (double v : r.lateral) os << lpad(fixed3(v), col_w);
    os << '\n';
  }
  return os.str();
}

std::string rmse_csv(const std::vector<std::pair<std::string, RmseReport>> &rows,
                     const std::vector<std::string> &preamble) {
  std::ostringstream os;
  for (const auto &line : preamble) os << "# " << line << '\n';
  os << "method,horizon_s,rmse_long_m,rmse_lat_m,count\n";
  for (const auto &[name, r] : rows) {
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      os << name << ',' << format_double(r.horizons[h]) << ','
         << format_double(r.longitudinal[h]) << ',' << format_double(r.lateral[h]) << ','
         << r.counts[h] << '\n';
    }
  }
  return os.str();
}

std::string calibration_csv(const std::vector<std::pair<std::string, CalibrationReport>> &rows,
                            const std::vector<std::string> &preamble) {
  std::ostringstream os;
  for (const auto &line : preamble) os << "# " << line << '\n';
  os << "method,horizon_s,coverage_3sigma,count\n";
  for (const auto &[name, r] : rows) {
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      os << name << ',' << format_double(r.horizons[h]) << ','
         << format_double(r.coverage[h]) << ',' << r.counts[h] << '\n';
    }
  }
  return os.str();
}

std::string predictions_csv(const std::vector<ScenePrediction> &predictions,
                            const std::vector<Scene> &scenes,
                            const std::vector<std::string> &preamble) {
  if (predictions.size() != scenes.size()) {
    throw DimensionError("predictions_csv: prediction and scene counts differ");
  }
  std::ostringstream os;
  for (const auto &line : preamble) os << "# " << line << '\n';
  os << "scene_id,vehicle_id,t_index,mu_x,mu_y\n";
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (std::size_t i = 0; i < scenes[s].n_vehicles(); ++i) {
      if (!scenes[s].vehicle_valid[i]) continue;
      const Trajectory &p = predictions[s].at(i);
      for (Eigen::Index t = 0; t < p.rows(); ++t) {
        os << scenes[s].scene_id << ',' << scenes[s].vehicles[i].id << ',' << t << ','
           << format_double(p(t, 0)) << ',' << format_double(p(t, 1)) << '\n';
      }
    }
  }
  return os.str();
}

std::vector<ScenePrediction> parse_predictions_csv(std::string_view text,
                                                   const std::vector<Scene> &scenes,
                                                   std::size_t t_pred) {
  std::map<std::pair<std::uint64_t, std::int64_t>, std::pair<std::size_t, std::size_t>> slot;
  std::vector<ScenePrediction> out(scenes.size());
  std::vector<std::vector<std::vector<std::uint8_t>>> seen(scenes.size());
  std::size_t expected = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    out[s].assign(scenes[s].n_vehicles(), Trajectory::Zero(static_cast<Eigen::Index>(t_pred), 2));
    seen[s].assign(scenes[s].n_vehicles(), std::vector<std::uint8_t>(t_pred, 0));
    for (std::size_t i = 0; i < scenes[s].n_vehicles(); ++i) {
      if (!scenes[s].vehicle_valid[i]) continue;
      slot[{scenes[s].scene_id, scenes[s].vehicles[i].id}] = {s, i};
      expected += t_pred;
    }
  }
  const char *cols[] = {"scene_id", "vehicle_id", "t_index", "mu_x", "mu_y"};
  std::size_t idx[5] = {};
  bool header = false;
  std::size_t line_no = 0, filled = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line, ',');
    for (auto &c : cells) c = trim(c);
    if (!header) {
      for (int k = 0; k < 5; ++k) {
        auto it = std::find(cells.begin(), cells.end(), std::string_view(cols[k]));
        if (it == cells.end()) {
          throw SchemaError(std::string("prediction file: missing column \"") + cols[k] + "\"");
        }
        idx[k] = static_cast<std::size_t>(it - cells.begin());
      }
      header = true;
      continue;
    }
    const std::string where = "prediction file row " + std::to_string(line_no);
    auto get = [&](int k) {
      if (idx[k] >= cells.size()) throw ParseError(where + ": too few cells");
      return cells[idx[k]];
    };
    const auto scene_id = parse_int(get(0), where + " scene_id");
    const auto vehicle_id = parse_int(get(1), where + " vehicle_id");
    const auto t = parse_int(get(2), where + " t_index");
    auto it = slot.find({static_cast<std::uint64_t>(scene_id), vehicle_id});
    if (it == slot.end() || t < 0 || static_cast<std::size_t>(t) >= t_pred) {
      throw NotFoundError(where + ": no matching scene/vehicle/timestep");
    }
    const auto [s, i] = it->second;
    auto &flag = seen[s][i][static_cast<std::size_t>(t)];
    if (flag) throw ParseError(where + ": duplicate entry");
    flag = 1;
    ++filled;
    out[s][i](t, 0) = parse_double(get(3), where + " mu_x");
    out[s][i](t, 1) = parse_double(get(4), where + " mu_y");
  }
  if (!header) throw SchemaError("prediction file: missing header row");
  if (filled != expected) {
    throw SchemaError("prediction file covers " + std::to_string(filled) + " of " +
                      std::to_string(expected) + " vehicle-timesteps");
  }
  return out;
}

} // namespace atraj
