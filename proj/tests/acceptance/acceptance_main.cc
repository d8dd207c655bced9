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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
//
// Usage: atraj_acceptance [work_dir]

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "atraj/checkpoint.hpp"
#include "atraj/data.hpp"
#include "atraj/evaluation.hpp"
#include "atraj/grad_check.hpp"
#include "atraj/kalman.hpp"
#include "atraj/losses.hpp"
#include "atraj/model.hpp"
#include "atraj/training.hpp"
#include "atraj/util.hpp"

namespace {

using namespace atraj;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

/// Result slot i holds input slot perm[i].
Scene permute_vehicles(const Scene &s, const std::vector<std::size_t> &perm) {
  Scene out = s;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.vehicles[i] = s.vehicles[perm[i]];
    out.vehicle_valid[i] = s.vehicle_valid[perm[i]];
  }
  return out;
}

/// Synthetic scenes with 1..12 vehicles; every third scene gains a masked
/// lane slot.
std::vector<Scene> random_scenes(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_scenes = n;
  cfg.min_vehicles = 1;
  cfg.max_vehicles = 12;
  cfg.seed = seed;
  auto scenes = synth_generate(cfg).scenes;
  for (std::size_t s = 0; s < scenes.size(); s += 3) {
    scenes[s].lanes.push_back(Eigen::Vector3d::Zero());
    scenes[s].lane_valid.push_back(0);
  }
  return scenes;
}

// --- 1 ----------------------------------------------------------------------

std::string family_of(const std::string &name) {
  if (name.starts_with("veh_embed") || name.starts_with("lane_embed")) return "embedding";
  if (name.find(".ln_") != std::string::npos) return "layer-norm";
  if (name.starts_with("enc_vehicle")) return "vehicle-attention";
  if (name.starts_with("enc_lane")) return "lane-attention";
  if (name.starts_with("dec_vehicle")) return "decoder-attention";
  return "gaussian-head";
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Hyperparams h;
  ModelParams<double> p = init_params<double>(h, 101);
  p.set_trainable(true);
  auto scenes = random_scenes(4, 102);
  std::vector<const Scene *> ptrs;
  for (const auto &s : scenes) ptrs.push_back(&s);
  const auto batch = make_batch<double>(ptrs, h);

  std::mt19937_64 rng(103);
  std::vector<Tensor<double> *> leaves;
  std::map<std::string, std::vector<GradCoordinate>> by_family;
  for (auto &[name, t] : p.tensors) {
    auto &coords = by_family[family_of(name)];
    const std::size_t leaf = leaves.size();
    leaves.push_back(&t);
    if (t.size() <= 64) {
      for (std::size_t i = 0; i < t.size(); ++i) coords.push_back({leaf, i});
    } else {
      for (std::size_t k = 0; k < 64; ++k) {
        coords.push_back({leaf, std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng)});
      }
    }
  }
  std::function<Var<double>(Graph<double> &)> f = [&](Graph<double> &g) {
    Binding<double> bind(g, p);
    const auto r = forward(batch, bind, RunMode{});
    return total_loss(r.forecast, g.input(batch.futures), batch.loss_mask, LossWeights{});
  };
  bool pass = true;
  std::string detail;
  for (const auto &[family, coords] : by_family) {
    const auto report = grad_check<double>(f, leaves, coords, 1e-3, 1e-3);
    pass = pass && report.passed && coords.size() >= 50;
    detail += family + " " + std::to_string(coords.size()) + " coords max rel " +
              fmt("%.2e", report.max_rel_error) + "; ";
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 60.0;
  return {pass, detail + fmt("%.1f s", elapsed)};
}

// --- 2 ----------------------------------------------------------------------

Outcome attention_invariants() {
  const Hyperparams h;
  const auto params = init_params<double>(h, 201);
  const auto scenes = random_scenes(100, 202);
  double worst_row = 0.0, worst_perm = 0.0;
  bool masked_zero = true;

  auto check_rows = [&](const MultiHeadResult<double> &mh, const KeyMask &qmask,
                        const KeyMask &kmask) {
    for (const auto &head : mh.heads) {
      const Tensor<double> &a = head.attention.value();
      const std::size_t B = a.extent(0), nq = a.extent(1), nk = a.extent(2);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t q = 0; q < nq; ++q) {
          if (!qmask.is_valid(b, q)) continue;
          double sum = 0.0;
          for (std::size_t k = 0; k < nk; ++k) {
            const double w = a[(b * nq + q) * nk + k];
            sum += w;
            if (!kmask.is_valid(b, k) && w != 0.0) masked_zero = false;
          }
          worst_row = std::max(worst_row, std::abs(sum - 1.0));
        }
      }
    }
  };

  // Padded batches of 10 scenes.
  for (std::size_t s0 = 0; s0 < scenes.size(); s0 += 10) {
    std::vector<const Scene *> ptrs;
    for (std::size_t s = s0; s < s0 + 10; ++s) ptrs.push_back(&scenes[s]);
    const auto batch = make_batch<double>(ptrs, h);
    Graph<double> g;
    Binding<double> bind(g, params);
    const auto r = forward(batch, bind, RunMode{});
    check_rows(r.encoder.vehicle.attention, batch.vehicle_mask, batch.vehicle_mask);
    check_rows(r.encoder.lane.attention, batch.vehicle_mask, batch.lane_mask);
    check_rows(r.decoder.attention, batch.vehicle_mask, batch.vehicle_mask);
  }

  // Permutation equivariance per scene.
  std::mt19937_64 rng(203);
  for (const auto &scene : scenes) {
    std::vector<std::size_t> perm(scene.n_vehicles());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = predict(scene, params);
    const auto b = predict(permute_vehicles(scene, perm), params);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      worst_perm = std::max(
          worst_perm, (b.forecast.mean[i] - a.forecast.mean[perm[i]]).cwiseAbs().maxCoeff());
      for (std::size_t t = 0; t < b.forecast.covariance[i].size(); ++t) {
        worst_perm = std::max(worst_perm, (b.forecast.covariance[i][t] -
                                           a.forecast.covariance[perm[i]][t])
                                              .cwiseAbs()
                                              .maxCoeff());
      }
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(perm.size(), perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) P(i, perm[i]) = 1.0;
    for (std::size_t k = 0; k < a.attention.size(); ++k) {
      const Eigen::MatrixXd &A = a.attention[k].weights;
      const Eigen::MatrixXd expect =
          a.attention[k].layer == LayerTag::kLaneEncoder ? Eigen::MatrixXd(P * A)
                                                         : Eigen::MatrixXd(P * A * P.transpose());
      worst_perm = std::max(worst_perm, (b.attention[k].weights - expect).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = worst_row <= 1e-6 && masked_zero && worst_perm <= 1e-9;
  return {pass, "max |row sum - 1| " + fmt("%.2e", worst_row) + ", masked columns " +
                    (masked_zero ? "exactly 0" : "NONZERO") + ", max permutation error " +
                    fmt("%.2e", worst_perm)};
}

// --- 3 ----------------------------------------------------------------------

Outcome gaussian_validity() {
  const Hyperparams h;
  const double floor2 = h.sigma_floor * h.sigma_floor;
  std::mt19937_64 rng(301);
  std::uniform_real_distribution<double> raw(-20.0, 20.0);
  // Eigenvalues of a double matrix are only known to about eps * ||S||, so
  // the floor is checked up to that rounding slack.
  const double eps = std::numeric_limits<double>::epsilon();
  double min_eig = INFINITY, asym = 0.0, worst_ulps = 0.0;
  std::size_t samples = 0;
  auto inspect = [&](const Eigen::Matrix2d &s) {
    asym = std::max(asym, std::abs(s(0, 1) - s(1, 0)));
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(s).eigenvalues()(0);
    min_eig = std::min(min_eig, lo);
    worst_ulps = std::max(worst_ulps, (floor2 - lo) / (eps * s.norm()));
    ++samples;
  };
  for (int k = 0; k < 10000; ++k) {
    inspect(covariance_from_cholesky(raw(rng), raw(rng), raw(rng), h.sigma_floor));
  }
  // Head outputs of a randomly initialized model.
  const auto params = init_params<double>(h, 302);
  for (const auto &scene : random_scenes(120, 303)) {
    const auto f = predict(scene, params).forecast;
    for (const auto &per_vehicle : f.covariance)
      for (const auto &s : per_vehicle) inspect(s);
  }

  // Trivial NLL cases: mu = 0, Sigma = I.
  const double log2pi = std::log(2.0 * std::numbers::pi);
  auto nll_at = [](double y0, double y1) {
    Tensor<double> mu({1, 1, 1, 2}, 0.0), y({1, 1, 1, 2}, {y0, y1});
    Tensor<double> one({1, 1, 1, 1}, 1.0), zero({1, 1, 1, 1}, 0.0);
    Graph<double> g;
    ForecastVars<double> f;
    f.mu = g.input(mu);
    f.raw = f.mu;
    f.s00 = g.input(one);
    f.s01 = g.input(zero);
    f.s11 = g.input(one);
    return nll_loss(f, g.input(y), KeyMask::all(1, 1)).value()[0];
  };
  const double e0 = std::abs(nll_at(0.0, 0.0) - log2pi);
  const double e1 = std::abs(nll_at(1.0, 0.0) - (log2pi + 0.5));

  const bool pass = samples >= 10000 && asym == 0.0 && worst_ulps <= 8.0 && e0 <= 1e-9 &&
                    e1 <= 1e-9;
  return {pass, std::to_string(samples) + " covariances, min eigenvalue " +
                    fmt("%.12e", min_eig) + " vs floor^2 " + fmt("%.1e", floor2) +
                    " (worst shortfall " + fmt("%.2f", std::max(worst_ulps, 0.0)) +
                    " eps*||S||)" +
                    ", max asymmetry " + fmt("%.1e", asym) + ", nll errors " +
                    fmt("%.1e", e0) + " / " + fmt("%.1e", e1)};
}

// --- 4..8 ---------------------------------------------------------------------

constexpr std::size_t kScenes = 20000;
constexpr std::uint64_t kSeed = 0;

struct Trained {
  std::vector<Scene> validation;
  Checkpoint checkpoint;
  ModelParams<double> params;
  std::vector<GaussianForecast> forecasts;
  double train_seconds = 0.0;
};

Trained train_reference_model() {
  SynthConfig data;
  data.n_scenes = kScenes;
  data.lane_change_prob = 0.3;
  data.seed = kSeed;
  const auto scenes = synth_generate(data).scenes;
  TrainConfig cfg;
  cfg.seed = kSeed;
  const auto t0 = Clock::now();
  Trained out;
  out.checkpoint = train(scenes, Hyperparams{}, cfg, {}, [](const EpochRecord &r) {
    std::printf("  epoch %2llu  loss %10.4f  val 3 s rmse long %.4f lat %.4f\n",
                static_cast<unsigned long long>(r.epoch), r.train_loss, r.val_rmse_long_3s,
                r.val_rmse_lat_3s);
    std::fflush(stdout);
  });
  out.train_seconds = seconds_since(t0);
  out.validation = split_scenes(scenes, cfg.val_fraction).validation;
  out.params = out.checkpoint.params.cast<double>();
  out.forecasts = predict_scenes(out.params, out.validation);
  return out;
}

Outcome relative_ordering(const Trained &m) {
  const auto kf = kalman_scenes(m.validation, KalmanCVConfig{}, 15);
  const auto base = rmse(means_of(kf), m.validation);
  const auto ours = rmse(means_of(m.forecasts), m.validation);
  const bool pass = ours.lateral[2] < base.lateral[2] &&
                    ours.longitudinal[2] <= 1.1 * base.longitudinal[2] && m.train_seconds <= 1800;
  std::string detail = std::to_string(kScenes) + " scenes, " +
                       std::to_string(m.validation.size()) + " held out; 3 s model long " +
                       fmt("%.3f", ours.longitudinal[2]) + " lat " + fmt("%.3f", ours.lateral[2]) +
                       " vs Kalman long " + fmt("%.3f", base.longitudinal[2]) + " lat " +
                       fmt("%.3f", base.lateral[2]) + " m; training " +
                       fmt("%.0f s", m.train_seconds);
  return {pass, detail};
}

Outcome scalability(const Trained &m) {
  std::vector<std::pair<std::size_t, std::vector<Scene>>> sets;
  for (std::size_t n : {3u, 7u, 11u, 21u}) {
    SynthConfig cfg;
    cfg.n_scenes = 300;
    cfg.min_vehicles = cfg.max_vehicles = n;
    cfg.seed = 500 + n;
    sets.emplace_back(n, synth_generate(cfg).scenes);
  }
  std::vector<ScalabilityRow> rows;
  try {
    rows = scalability_experiment(m.params, sets, 1);
  } catch (const Error &e) {
    return {false, std::string("forward failed: ") + e.what()};
  }
  const auto &r7 = rows[1].rmse, &r11 = rows[2].rmse;
  const bool within = r11.longitudinal[2] <= 2.0 * r7.longitudinal[2] &&
                      r11.lateral[2] <= 2.0 * r7.lateral[2];
  const bool trace_ok = rows[3].mean_cov_trace >= rows[1].mean_cov_trace;
  std::string detail;
  for (const auto &row : rows) {
    detail += "N=" + std::to_string(row.n_vehicles) + " long " +
              fmt("%.3f", row.rmse.longitudinal[2]) + " lat " + fmt("%.3f", row.rmse.lateral[2]) +
              " trace " + fmt("%.3f", row.mean_cov_trace) + "; ";
  }
  detail += std::string("trace(21) >= trace(7) soft check ") + (trace_ok ? "holds" : "does not hold");
  return {within, detail};
}

Outcome calibration_check(const Trained &m) {
  const auto cal = calibration(m.forecasts, m.validation);
  bool pass = true;
  std::string detail = "coverage";
  for (std::size_t k = 0; k < cal.horizons.size(); ++k) {
    pass = pass && cal.coverage[k] >= 0.90;
    detail += " " + fmt("%g s", cal.horizons[k]) + " " + fmt("%.4f", cal.coverage[k]);
  }
  const std::size_t draws = 100000;
  const double p = 1.0 - std::exp(-4.5);
  const double se = std::sqrt(p * (1.0 - p) / draws);
  const auto untrained = predict_scenes(init_params<double>(Hyperparams{}, 601), m.validation);
  for (const auto *f : {&m.forecasts, &untrained}) {
    const double c = self_sampled_coverage(*f, draws, 602);
    pass = pass && std::abs(c - p) <= 3.0 * se;
    detail += "; self-sampled " + fmt("%.4f", c);
  }
  return {pass, detail + " (reference " + fmt("%.4f", p) + " +/- " + fmt("%.4f", 3.0 * se) + ")"};
}

Outcome latency(const Trained &m) {
  const auto r = latency_benchmark(m.checkpoint.params, 30, 200, 10, 7);
  return {r.p95_ms < 100.0, "N=30, 200 runs: mean " + fmt("%.2f", r.mean_ms) + " ms, p95 " +
                                fmt("%.2f", r.p95_ms) + " ms"};
}

Outcome determinism(const Trained &m, const std::filesystem::path &work) {
  SynthConfig data;
  data.n_scenes = 300;
  data.seed = 801;
  const auto scenes = synth_generate(data).scenes;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.seed = 802;
  const Checkpoint a = train(scenes, Hyperparams{}, cfg);
  const Checkpoint b = train(scenes, Hyperparams{}, cfg);
  const bool history_equal = a.meta.history == b.meta.history;
  bool params_equal = true;
  for (const auto &[name, t] : a.params.tensors) {
    params_equal = params_equal && t.values() == b.params.tensors.at(name).values();
  }

  std::filesystem::create_directories(work);
  const std::string path = (work / "reference.atrj").string();
  save_checkpoint(m.checkpoint, path);
  const Checkpoint loaded = load_checkpoint(path);
  const auto before = rmse(means_of(m.forecasts), m.validation);
  const auto after = rmse(means_of(predict_scenes(loaded.params.cast<double>(), m.validation)),
                          m.validation);
  const bool rmse_equal =
      before.longitudinal == after.longitudinal && before.lateral == after.lateral;
  return {history_equal && params_equal && rmse_equal,
          std::string("loss history ") + (history_equal ? "bitwise equal" : "DIFFERS") +
              ", parameters " + (params_equal ? "bitwise equal" : "DIFFER") +
              ", checkpoint round-trip RMSE " + (rmse_equal ? "bitwise equal" : "DIFFERS")};
}

int failures = 0;

void report(int id, const char *name, const Outcome &o) {
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

Outcome guarded(const std::function<Outcome()> &f) {
  try {
    return f();
  } catch (const std::exception &e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

} // namespace

int main(int argc, char **argv) {
  const std::filesystem::path work = argc > 1 ? argv[1] : "acceptance_work";
  report(1, "gradient correctness", guarded(gradient_correctness));
  report(2, "attention invariants", guarded(attention_invariants));
  report(3, "Gaussian validity", guarded(gaussian_validity));

  std::printf("training the reference model (%zu scenes, 30 epochs)\n", kScenes);
  std::fflush(stdout);
  std::optional<Trained> model;
  std::string train_error;
  try {
    model = train_reference_model();
  } catch (const std::exception &e) {
    train_error = std::string("training failed: ") + e.what();
  }
  auto with_model = [&](const std::function<Outcome(const Trained &)> &f) {
    if (!model) return Outcome{false, train_error};
    return guarded([&] { return f(*model); });
  };
  report(4, "relative ordering", with_model(relative_ordering));
  report(5, "scalability", with_model(scalability));
  report(6, "calibration", with_model(calibration_check));
  report(7, "latency", with_model(latency));
  report(8, "determinism and persistence",
         with_model([&](const Trained &m) { return determinism(m, work); }));

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
