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

#ifndef ATRAJ_TRAINING_HPP_
#define ATRAJ_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atraj/checkpoint.hpp"
#include "atraj/hyperparams.hpp"
#include "atraj/scene.hpp"

namespace atraj {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double clip_norm = 0.0;  // global gradient norm cap; 0 disables
  double val_fraction = 0.1;
  unsigned threads = 1;    // validation only
  LossWeights weights;
  std::string config_hash;
  std::string config_text;

  void validate() const;
};

/// True when `scene_id` falls in the validation split.
bool is_validation_scene(std::uint64_t scene_id, double val_fraction);

struct Split {
  std::vector<Scene> train;
  std::vector<Scene> validation;
};

Split split_scenes(const std::vector<Scene> &scenes, double val_fraction);

/// Called after every epoch.
using EpochCallback = std::function<void(const EpochRecord &)>;

/// Trains in double precision with Adam on the training split and returns
/// the single-precision checkpoint after the last epoch. Starting from
/// `resume` continues its parameters, optimizer state and epoch count.
/// Throws DivergenceError naming the batch whose loss became non-finite.
Checkpoint train(const std::vector<Scene> &scenes, const Hyperparams &hyper,
                 const TrainConfig &cfg, const std::optional<Checkpoint> &resume = {},
                 const EpochCallback &on_epoch = {});

/// Validation RMSE at 3 s (longitudinal, lateral) of double parameters.
std::pair<double, double> validation_rmse_3s(const ModelParams<double> &params,
                                             const std::vector<Scene> &scenes,
                                             unsigned threads);

} // namespace atraj

#endif // ATRAJ_TRAINING_HPP_
