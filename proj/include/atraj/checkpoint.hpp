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

#ifndef ATRAJ_CHECKPOINT_HPP_
#define ATRAJ_CHECKPOINT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atraj/adam.hpp"
#include "atraj/model.hpp"

namespace atraj {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One row of the loss-history CSV.
struct EpochRecord {
  std::uint64_t epoch = 0;
  double train_loss = 0.0;
  double val_rmse_long_3s = 0.0;
  double val_rmse_lat_3s = 0.0;

  bool operator==(const EpochRecord &) const = default;
};

struct TrainingMeta {
  std::uint64_t epoch = 0;  // last completed epoch, 1-based
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config_text;  // full run configuration, verbatim
  std::vector<EpochRecord> history;
};

/// Parameters are stored as 32-bit floats.
struct Checkpoint {
  ModelParams<float> params;
  std::optional<AdamState<float>> adam;
  TrainingMeta meta;
};

/// Layout: magic "ATRJ", u32 version, u32-prefixed canonical
/// hyperparameter text, u32-prefixed metadata text, u32-prefixed run
/// configuration text, u32 tensor count, a directory of (name, rank,
/// extents, byte offset) records, u64 payload size, then the float32
/// payload. Adam moments are stored as tensors named "adam.m/<param>" and
/// "adam.v/<param>".
std::string encode_checkpoint(const Checkpoint &ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);

/// CSV with header "epoch,train_loss,val_rmse_long_3s,val_rmse_lat_3s";
/// `preamble` lines are emitted first, each prefixed with "# ".
std::string history_csv(const std::vector<EpochRecord> &history,
                        const std::vector<std::string> &preamble = {});

} // namespace atraj

#endif // ATRAJ_CHECKPOINT_HPP_
