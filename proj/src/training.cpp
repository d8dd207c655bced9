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

#include "atraj/training.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "atraj/adam.hpp"
#include "atraj/data.hpp"
#include "atraj/errors.hpp"
#include "atraj/evaluation.hpp"
#include "atraj/losses.hpp"
#include "atraj/util.hpp"

namespace atraj {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  if (!(lr >= 0.0)) throw ParameterError("lr must be >= 0");
  if (!(clip_norm >= 0.0)) throw ParameterError("clip_norm must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ParameterError("val_fraction must lie in [0, 1)");
  }
  weights.validate();
}

bool is_validation_scene(std::uint64_t scene_id, double val_fraction) {
  const double u =
      static_cast<double>(mix_seed(scene_id, 0x76616cULL) >> 11) * 0x1.0p-53;
  return u < val_fraction;
}

Split split_scenes(const std::vector<Scene> &scenes, double val_fraction) {
  Split out;
  for (const auto &s : scenes) {
    (is_validation_scene(s.scene_id, val_fraction) ? out.validation : out.train).push_back(s);
  }
  return out;
}

std::pair<double, double> validation_rmse_3s(const ModelParams<double> &params,
                                             const std::vector<Scene> &scenes,
                                             unsigned threads) {
  if (scenes.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  const auto r = rmse(means_of(predict_scenes(params, scenes, threads)), scenes, {3.0},
                      params.hyper.exclude_ego);
  return {r.longitudinal[0], r.lateral[0]};
}

namespace {

constexpr std::uint64_t kShuffleStream = 0;
constexpr std::uint64_t kDropoutStream = 1;

} // namespace

Checkpoint train(const std::vector<Scene> &scenes, const Hyperparams &hyper,
                 const TrainConfig &cfg, const std::optional<Checkpoint> &resume,
                 const EpochCallback &on_epoch) {
  cfg.validate();
  hyper.validate();
  if (scenes.empty()) throw ContractError("train: empty dataset");
  const Split split = split_scenes(scenes, cfg.val_fraction);
  if (split.train.empty()) throw ContractError("train: validation split left no training scenes");

  ModelParams<double> params;
  AdamState<double> adam;
  adam.lr = cfg.lr;
  TrainingMeta meta;
  if (resume) {
    if (!(resume->params.hyper == hyper)) {
      throw ConfigError("resume: checkpoint hyperparameters differ from the run configuration");
    }
    params = resume->params.cast<double>();
    if (resume->adam) {
      adam.step = resume->adam->step;
      adam.beta1 = resume->adam->beta1;
      adam.beta2 = resume->adam->beta2;
      adam.eps = resume->adam->eps;
      for (const auto &[k, v] : resume->adam->m) adam.m[k] = v.cast<double>();
      for (const auto &[k, v] : resume->adam->v) adam.v[k] = v.cast<double>();
    }
    meta = resume->meta;
  } else {
    params = init_params<double>(hyper, cfg.seed);
  }
  meta.seed = cfg.seed;
  meta.config_hash = cfg.config_hash;
  meta.config_text = cfg.config_text;
  params.set_trainable(true);

  const std::uint64_t first = meta.epoch + 1;
  for (std::uint64_t epoch = first; epoch < first + cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(cfg.seed, epoch);
    Batcher<double> batches(split.train, hyper, cfg.batch_size,
                            mix_seed(epoch_seed, kShuffleStream));
    std::mt19937_64 dropout_rng(mix_seed(epoch_seed, kDropoutStream));
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    while (auto batch = batches.next()) {
      const std::string where = "epoch " + std::to_string(epoch) + " batch " +
                                std::to_string(batch_index) + " (scene " +
                                std::to_string(batch->scene_ids.front()) + " first)";
      double value = 0.0;
      try {
        Graph<double> g;
        Binding<double> binding(g, params);
        const auto r = forward(*batch, binding, RunMode{Mode::kTrain, &dropout_rng});
        const Var<double> loss =
            total_loss(r.forecast, g.input(batch->futures), batch->loss_mask, cfg.weights);
        value = loss.value()[0];
        if (!std::isfinite(value)) throw NumericError("non-finite loss");
        g.backward(loss);
      } catch (const NumericError &e) {
        throw DivergenceError("training diverged at " + where + ": " + e.what());
      }
      if (cfg.clip_norm > 0.0) clip_grad_norm(params.tensors, cfg.clip_norm);
      adam_step(params.tensors, adam);
      loss_sum += value;
      ++batch_index;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batch_index);
    std::tie(rec.val_rmse_long_3s, rec.val_rmse_lat_3s) =
        validation_rmse_3s(params, split.validation, cfg.threads);
    meta.history.push_back(rec);
    meta.epoch = epoch;
    if (on_epoch) on_epoch(rec);
  }

  Checkpoint out;
  out.params = params.cast<float>();
  AdamState<float> state;
  state.lr = adam.lr;
  state.beta1 = adam.beta1;
  state.beta2 = adam.beta2;
  state.eps = adam.eps;
  state.step = adam.step;
  for (const auto &[k, v] : adam.m) state.m[k] = v.cast<float>();
  for (const auto &[k, v] : adam.v) state.v[k] = v.cast<float>();
  out.adam = std::move(state);
  out.meta = std::move(meta);
  return out;
}

} // namespace atraj
