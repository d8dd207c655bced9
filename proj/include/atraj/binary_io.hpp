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

#ifndef ATRAJ_BINARY_IO_HPP_
#define ATRAJ_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "atraj/errors.hpp"

namespace atraj {

static_assert(std::endian::native == std::endian::little,
              "archive and checkpoint encoders assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }

  void put_bytes(std::string_view s) { bytes_.append(s.data(), s.size()); }

  /// u32 length prefix followed by the raw bytes.
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  std::size_t size() const { return bytes_.size(); }
  const std::string &bytes() const { return bytes_; }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

/// Bounds-checked reader; any overrun raises CorruptFileError naming
/// `what`.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string get_string() { return std::string(get_bytes(get<std::uint32_t>())); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) {
      throw CorruptFileError(what_ + ": truncated at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

} // namespace atraj

#endif // ATRAJ_BINARY_IO_HPP_
