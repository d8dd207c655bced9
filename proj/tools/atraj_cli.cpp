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

// Command-line entry point: gen-data, ingest, train, eval, attn, bench.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atraj/checkpoint.hpp"
#include "atraj/config.hpp"
#include "atraj/data.hpp"
#include "atraj/errors.hpp"
#include "atraj/evaluation.hpp"
#include "atraj/training.hpp"
#include "atraj/util.hpp"

namespace fs = std::filesystem;
using namespace atraj;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

RunConfig resolve(const Common &c, const CLI::App &app) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg.merge_text(read_file(c.config_path), c.config_path);
  for (const auto &k : RunConfig::keys()) {
    if (app.count(std::string("--") + k.name) > 0) cfg.set(k.name, c.flags.at(k.name));
  }
  for (const auto &s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(std::string(trim(std::string_view(s).substr(0, eq))), s.substr(eq + 1));
  }
  return cfg;
}

std::string out_path(const Common &c, const std::string &name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

std::string provenance_text(const RunConfig &cfg, const std::string &what) {
  std::string text = what + "\n";
  for (const auto &line : cfg.provenance()) text += line + "\n";
  return text + cfg.canonical();
}

void cmd_gen_data(const Common &c, const RunConfig &cfg) {
  const SyntheticSet set = synth_generate(cfg.synth());
  const std::string path = out_path(c, "scenes.atrs");
  save_scenes(path, {provenance_text(cfg, "synthetic"), set.scenes});
  std::printf("wrote %zu scenes to %s (config %s, seed %s)\n", set.scenes.size(), path.c_str(),
              cfg.hash().c_str(), cfg.get("seed").c_str());
}

void cmd_ingest(const Common &c, const RunConfig &cfg, const std::string &tracks,
                const std::string &meta) {
  const TrackTable table = parse_highd(tracks, meta);
  const BuildResult r = build_scenes(table, cfg.build());
  const std::string path = out_path(c, "scenes.atrs");
  save_scenes(path, {provenance_text(cfg, "highD " + tracks), r.scenes});
  std::printf("wrote %zu scenes to %s (%zu windows skipped)\n", r.scenes.size(), path.c_str(),
              r.skipped_windows);
}

void cmd_train(const Common &c, const RunConfig &cfg, const std::string &data,
               const std::string &resume_path) {
  const SceneArchive archive = load_scenes(data);
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path);
  const Checkpoint ckpt =
      train(archive.scenes, cfg.hyper(), cfg.train(), resume, [](const EpochRecord &r) {
        std::printf("epoch %llu  loss %.6f  val rmse 3s long %.4f lat %.4f\n",
                    static_cast<unsigned long long>(r.epoch), r.train_loss, r.val_rmse_long_3s,
                    r.val_rmse_lat_3s);
        std::fflush(stdout);
      });
  const std::string ckpt_path = out_path(c, "checkpoint.atrj");
  save_checkpoint(ckpt, ckpt_path);
  write_file(out_path(c, "loss_history.csv"), history_csv(ckpt.meta.history, cfg.provenance()));
  std::printf("wrote %s\n", ckpt_path.c_str());
}

std::vector<Scene> select_split(const std::vector<Scene> &scenes, const std::string &split,
                                double val_fraction) {
  if (split == "all") return scenes;
  const Split s = split_scenes(scenes, val_fraction);
  if (split == "validation") return s.validation;
  if (split == "train") return s.train;
  throw ConfigError("--split must be all, train or validation");
}

void cmd_eval(const Common &c, const RunConfig &cfg, const std::string &data,
              const std::string &ckpt_path, const std::string &pred_path,
              const std::string &split, bool export_predictions, bool baseline) {
  if (ckpt_path.empty() == pred_path.empty()) {
    throw ConfigError("eval needs exactly one of --checkpoint or --predictions");
  }
  const std::vector<Scene> scenes =
      select_split(load_scenes(data).scenes, split, cfg.real("val_fraction"));
  if (scenes.empty()) throw ContractError("eval: no scenes in the selected split");
  const auto horizons = cfg.reals("horizons");
  const auto prov = cfg.provenance();
  const std::size_t t_pred = scenes.front().vehicles.front().future.rows();
  const bool ex = cfg.hyper().exclude_ego;

  std::vector<std::pair<std::string, RmseReport>> rmse_rows;
  std::vector<std::pair<std::string, CalibrationReport>> cal_rows;
  if (baseline) {
    const auto kf = kalman_scenes(scenes, cfg.kalman(), t_pred);
    rmse_rows.emplace_back("Linear (Kalman CV)", rmse(means_of(kf), scenes, horizons, ex));
    cal_rows.emplace_back("Linear (Kalman CV)", calibration(kf, scenes, horizons, ex));
  }
  if (!ckpt_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const auto forecasts = predict_scenes(ckpt.params.cast<double>(), scenes, cfg.threads());
    const std::string name = "Attention (h=" + std::to_string(ckpt.params.hyper.heads) + ")";
    rmse_rows.emplace_back(name, rmse(means_of(forecasts), scenes, horizons, ex));
    cal_rows.emplace_back(name, calibration(forecasts, scenes, horizons, ex));
    if (export_predictions) {
      write_file(out_path(c, "predictions.csv"), predictions_csv(means_of(forecasts), scenes, prov));
    }
  } else {
    const auto preds = parse_predictions_csv(read_file(pred_path), scenes, t_pred);
    rmse_rows.emplace_back("External", rmse(preds, scenes, horizons, ex));
  }
  write_file(out_path(c, "rmse.csv"), rmse_csv(rmse_rows, prov));
  if (!cal_rows.empty()) write_file(out_path(c, "calibration.csv"), calibration_csv(cal_rows, prov));
  const std::string table = format_rmse_table(rmse_rows);
  write_file(out_path(c, "table.txt"), table);
  std::printf("%s", table.c_str());
  for (const auto &[name, r] : cal_rows) {
    std::printf("3-sigma coverage %-20s", name.c_str());
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      std::printf("  %gs %.4f", r.horizons[h], r.coverage[h]);
    }
    std::printf("\n");
  }
}

void cmd_attn(const Common &c, const RunConfig &cfg, const std::string &data,
              const std::string &ckpt_path, std::uint64_t scene_id,
              std::vector<std::int64_t> vehicle_ids) {
  const SceneArchive archive = load_scenes(data);
  const Scene *scene = nullptr;
  for (const auto &s : archive.scenes) {
    if (s.scene_id == scene_id) {
      scene = &s;
      break;
    }
  }
  if (!scene) throw NotFoundError("scene " + std::to_string(scene_id) + " not in " + data);
  if (vehicle_ids.empty()) {
    for (std::size_t i = 0; i < scene->n_vehicles(); ++i) {
      if (scene->vehicle_valid[i]) vehicle_ids.push_back(scene->vehicles[i].id);
    }
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Prediction p = predict(*scene, ckpt.params.cast<double>());
  auto prov = cfg.provenance();
  prov.push_back("scene_id = " + std::to_string(scene_id));
  const std::string text = format_attention(attention_report(p.attention, *scene, vehicle_ids), prov);
  write_file(out_path(c, "attention_" + std::to_string(scene_id) + ".txt"), text);
  std::printf("%s", text.c_str());
}

void cmd_bench(const Common &c, const RunConfig &cfg, const std::string &ckpt_path) {
  const ModelParams<float> params = ckpt_path.empty() ? init_params<float>(cfg.hyper(), cfg.seed())
                                                      : load_checkpoint(ckpt_path).params;
  const LatencyReport r = latency_benchmark(params, cfg.count("bench_vehicles"),
                                            cfg.count("bench_repeats"), cfg.count("bench_warmup"),
                                            cfg.seed());
  std::string csv = "# " + cfg.provenance()[0] + "\n# " + cfg.provenance()[1] + "\nrepeat,ms\n";
  for (std::size_t k = 0; k < r.samples_ms.size(); ++k) {
    csv += std::to_string(k) + "," + format_double(r.samples_ms[k]) + "\n";
  }
  write_file(out_path(c, "latency.csv"), csv);
  std::printf("N=%zu repeats=%zu  mean %.3f ms  median %.3f ms  p95 %.3f ms\n",
              r.n_vehicles, r.samples_ms.size(), r.mean_ms, r.median_ms, r.p95_ms);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Attention-based multi-vehicle trajectory forecasting"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "flat key = value configuration file");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--set", common.sets, "configuration override key=value (repeatable)");
  for (const auto &k : RunConfig::keys()) {
    app.add_option(std::string("--") + k.name, common.flags[k.name], k.help);
  }

  std::string data, tracks, meta, resume, ckpt, preds, split = "all";
  std::uint64_t scene_id = 0;
  std::vector<std::int64_t> vehicle_ids;
  bool export_predictions = false, no_baseline = false;

  auto *gen = app.add_subcommand("gen-data", "generate a synthetic scene archive");
  auto *ingest = app.add_subcommand("ingest", "build a scene archive from highD CSV files");
  ingest->add_option("--tracks", tracks, "XX_tracks.csv")->required();
  ingest->add_option("--meta", meta, "XX_recordingMeta.csv")->required();
  auto *tr = app.add_subcommand("train", "train a model on a scene archive");
  tr->add_option("--data", data, "scene archive")->required();
  tr->add_option("--resume", resume, "checkpoint to continue from");
  auto *ev = app.add_subcommand("eval", "score a checkpoint or a prediction file");
  ev->add_option("--data", data, "scene archive")->required();
  ev->add_option("--checkpoint", ckpt, "model checkpoint");
  ev->add_option("--predictions", preds, "prediction CSV (scene_id,vehicle_id,t_index,mu_x,mu_y)");
  ev->add_option("--split", split, "all, train or validation");
  ev->add_flag("--export-predictions", export_predictions, "write predictions.csv");
  ev->add_flag("--no-baseline", no_baseline, "omit the Kalman baseline row");
  auto *at = app.add_subcommand("attn", "dump attention matrices of one scene");
  at->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  at->add_option("--data", data, "scene archive")->required();
  at->add_option("--scene-id", scene_id, "scene id")->required();
  at->add_option("--vehicle-ids", vehicle_ids, "query vehicle ids (default: all)")->delimiter(',');
  auto *bench = app.add_subcommand("bench", "time eval-mode forwards");
  bench->add_option("--checkpoint", ckpt, "model checkpoint (default: fresh initialization)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    const RunConfig cfg = resolve(common, app);
    if (*gen) cmd_gen_data(common, cfg);
    if (*ingest) cmd_ingest(common, cfg, tracks, meta);
    if (*tr) cmd_train(common, cfg, data, resume);
    if (*ev) cmd_eval(common, cfg, data, ckpt, preds, split, export_predictions, !no_baseline);
    if (*at) cmd_attn(common, cfg, data, ckpt, scene_id, vehicle_ids);
    if (*bench) cmd_bench(common, cfg, ckpt);
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s: %s\n", e.category().c_str(), e.what());
    return 2;
  } catch (const fs::filesystem_error &e) {
    std::fprintf(stderr, "error: file: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 3;
  }
  return 0;
}
