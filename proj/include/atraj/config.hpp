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

#ifndef ATRAJ_CONFIG_HPP_
#define ATRAJ_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "atraj/data.hpp"
#include "atraj/hyperparams.hpp"
#include "atraj/kalman.hpp"
#include "atraj/training.hpp"

namespace atraj {

enum class KeyType { kCount, kUnsigned, kReal, kAnchor, kRealList };

struct ConfigKey {
  const char *name;
  KeyType type;
  const char *default_value;
  const char *help;
};

/// Flat "key = value" run configuration covering the model, loss, baseline,
/// data, training and experiment knobs. Values are type-checked on
/// assignment; unknown keys raise ConfigError.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey> &keys();

  /// Applies "key = value" lines ('#' starts a comment) on top of the
  /// current values.
  void merge_text(std::string_view text, std::string_view origin = "config");
  void set(const std::string &key, const std::string &value);
  const std::string &get(const std::string &key) const;

  std::size_t count(const std::string &key) const;
  std::uint64_t u64(const std::string &key) const;
  double real(const std::string &key) const;
  std::vector<double> reals(const std::string &key) const;

  /// Every key except "threads" in registry order, one "key = value" line
  /// each. The worker count never changes results.
  std::string canonical() const;
  /// FNV-1a of the canonical text, in hex.
  std::string hash() const;

  Hyperparams hyper() const;
  LossWeights loss_weights() const;
  KalmanCVConfig kalman() const;
  SynthConfig synth() const;
  BuildOptions build() const;
  TrainConfig train() const;
  std::uint64_t seed() const { return u64("seed"); }
  unsigned threads() const { return static_cast<unsigned>(count("threads")); }

  /// Provenance lines embedded in every output file.
  std::vector<std::string> provenance() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

} // namespace atraj

#endif // ATRAJ_CONFIG_HPP_
