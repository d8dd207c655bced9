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

#include "atraj/checkpoint.hpp"

#include <map>
#include <sstream>

#include "atraj/binary_io.hpp"
#include "atraj/errors.hpp"
#include "atraj/util.hpp"

namespace atraj {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'R', 'J'};
constexpr const char *kAdamM = "adam.m/";
constexpr const char *kAdamV = "adam.v/";

std::string encode_meta(const Checkpoint &c) {
  std::ostringstream os;
  os << "epoch = " << c.meta.epoch << '\n'
     << "seed = " << c.meta.seed << '\n'
     << "config_hash = " << c.meta.config_hash << '\n';
  if (c.adam) {
    os << "adam.step = " << c.adam->step << '\n'
       << "adam.lr = " << format_double(c.adam->lr) << '\n'
       << "adam.beta1 = " << format_double(c.adam->beta1) << '\n'
       << "adam.beta2 = " << format_double(c.adam->beta2) << '\n'
       << "adam.eps = " << format_double(c.adam->eps) << '\n';
  }
  for (const auto &r : c.meta.history) {
    os << "history = " << r.epoch << ',' << format_double(r.train_loss) << ','
       << format_double(r.val_rmse_long_3s) << ',' << format_double(r.val_rmse_lat_3s)
       << '\n';
  }
  return os.str();
}

std::uint64_t parse_u64(std::string_view text, const std::string &what) {
  const auto v = parse_int(text, what);
  if (v < 0) throw CorruptFileError("checkpoint: negative " + what);
  return static_cast<std::uint64_t>(v);
}

void decode_meta(std::string_view text, Checkpoint &c) {
  std::map<std::string, std::string, std::less<>> scalars;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw CorruptFileError("checkpoint metadata line without '='");
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (key == "history") {
      const auto f = split(value, ',');
      if (f.size() != 4) throw CorruptFileError("checkpoint: malformed history row");
      c.meta.history.push_back({parse_u64(f[0], "history epoch"),
                                parse_double(f[1], "train_loss"),
                                parse_double(f[2], "val_rmse_long_3s"),
                                parse_double(f[3], "val_rmse_lat_3s")});
    } else {
      scalars[key] = std::string(value);
    }
  }
  auto take = [&](const char *key) {
    auto it = scalars.find(key);
    if (it == scalars.end()) throw CorruptFileError(std::string("checkpoint: missing ") + key);
    return it->second;
  };
  c.meta.epoch = parse_u64(take("epoch"), "epoch");
  c.meta.seed = parse_u64(take("seed"), "seed");
  c.meta.config_hash = take("config_hash");
  if (scalars.count("adam.step")) {
    AdamState<float> a;
    a.step = parse_u64(take("adam.step"), "adam.step");
    a.lr = parse_double(take("adam.lr"), "adam.lr");
    a.beta1 = parse_double(take("adam.beta1"), "adam.beta1");
    a.beta2 = parse_double(take("adam.beta2"), "adam.beta2");
    a.eps = parse_double(take("adam.eps"), "adam.eps");
    c.adam = std::move(a);
  }
}

struct Entry {
  std::string name;
  Shape shape;
  const float *data;
};

} // namespace

std::string encode_checkpoint(const Checkpoint &c) {
  std::vector<Entry> entries;
  for (const auto &[name, t] : c.params.tensors) entries.push_back({name, t.shape(), t.data()});
  if (c.adam) {
    for (const auto &[prefix, moments] :
         {std::pair{kAdamM, &c.adam->m}, std::pair{kAdamV, &c.adam->v}}) {
      for (const auto &[name, vec] : *moments) {
        const auto &param = c.params.tensors.find(name);
        if (param == c.params.tensors.end() ||
            static_cast<std::size_t>(vec.size()) != param->second.size()) {
          throw ContractError("checkpoint: optimizer moment '" + name +
                              "' does not match a parameter");
        }
        entries.push_back({prefix + name, param->second.shape(), vec.data()});
      }
    }
  }

  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(c.params.hyper.canonical());
  w.put_string(encode_meta(c));
  w.put_string(c.meta.config_text);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = 0;
  for (const auto &e : entries) {
    w.put_string(e.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(offset);
    offset += numel(e.shape) * sizeof(float);
  }
  w.put<std::uint64_t>(offset);
  for (const auto &e : entries) {
    for (std::size_t i = 0; i < numel(e.shape); ++i) w.put<float>(e.data[i]);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) {
    throw CorruptFileError("checkpoint: bad magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint version " + std::to_string(version) +
                                  " (supported: " + std::to_string(kCheckpointVersion) +
                                  ")");
  }
  Checkpoint c;
  try {
    c.params.hyper = Hyperparams::from_canonical(r.get_string());
  } catch (const CorruptFileError &) {
    throw;
  } catch (const Error &e) {
    throw CorruptFileError(std::string("checkpoint hyperparameters: ") + e.what());
  }
  decode_meta(r.get_string(), c);
  c.meta.config_text = r.get_string();

  const auto count = r.get<std::uint32_t>();
  struct Dir {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Dir> dir;
  std::uint64_t expected = 0;
  for (std::uint32_t k = 0; k < count; ++k) {
    Dir d;
    d.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw CorruptFileError("checkpoint: implausible rank for " + d.name);
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto e = r.get<std::uint64_t>();
      if (e == 0 || e > (1ULL << 32)) throw CorruptFileError("checkpoint: bad extent");
      d.shape.push_back(e);
    }
    d.offset = r.get<std::uint64_t>();
    if (d.offset != expected) throw CorruptFileError("checkpoint: inconsistent directory");
    expected += numel(d.shape) * sizeof(float);
    dir.push_back(std::move(d));
  }
  const auto payload = r.get<std::uint64_t>();
  if (payload != expected) throw CorruptFileError("checkpoint: payload size mismatch");
  if (r.remaining() < payload) {
    throw CorruptFileError("checkpoint: truncated payload");
  }

  const ModelParams<float> layout = init_params<float>(c.params.hyper, 0);
  for (const auto &d : dir) {
    Vector<float> values(static_cast<Eigen::Index>(numel(d.shape)));
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = r.get<float>();
    auto moment = [&](const char *prefix) -> Vector<float> * {
      const std::string p(prefix);
      if (d.name.rfind(p, 0) != 0) return nullptr;
      const std::string param = d.name.substr(p.size());
      if (!c.adam) throw CorruptFileError("checkpoint: optimizer moment without state");
      auto &map = p == kAdamM ? c.adam->m : c.adam->v;
      return &map[param];
    };
    if (auto *m = moment(kAdamM)) {
      *m = std::move(values);
    } else if (auto *v = moment(kAdamV)) {
      *v = std::move(values);
    } else {
      auto it = layout.tensors.find(d.name);
      if (it == layout.tensors.end() || it->second.shape() != d.shape) {
        throw CorruptFileError("checkpoint: unexpected tensor '" + d.name + "' " +
                               shape_str(d.shape));
      }
      c.params.tensors.emplace(d.name, Tensor<float>(d.shape, std::move(values)));
    }
  }
  if (r.remaining() != 0) throw CorruptFileError("checkpoint: trailing bytes");
  if (c.params.tensors.size() != layout.tensors.size()) {
    throw CorruptFileError("checkpoint: missing parameter tensors");
  }
  if (c.adam) {
    for (const auto *moments : {&c.adam->m, &c.adam->v}) {
      for (const auto &[name, vec] : *moments) {
        auto it = c.params.tensors.find(name);
        if (it == c.params.tensors.end() ||
            static_cast<std::size_t>(vec.size()) != it->second.size()) {
          throw CorruptFileError("checkpoint: optimizer moment '" + name +
                                 "' does not match a parameter");
        }
      }
    }
  }
  return c;
}

void save_checkpoint(const Checkpoint &ckpt, const std::string &path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string &path) {
  return decode_checkpoint(read_file(path));
}

std::string history_csv(const std::vector<EpochRecord> &history,
                        const std::vector<std::string> &preamble) {
  std::ostringstream os;
  for (const auto &line : preamble) os << "# " << line << '\n';
  os << "epoch,train_loss,val_rmse_long_3s,val_rmse_lat_3s\n";
  for (const auto &r : history) {
    os << r.epoch << ',' << format_double(r.train_loss) << ','
       << format_double(r.val_rmse_long_3s) << ',' << format_double(r.val_rmse_lat_3s)
       << '\n';
  }
  return os.str();
}

} // namespace atraj
