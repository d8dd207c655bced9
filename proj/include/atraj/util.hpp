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

#ifndef ATRAJ_UTIL_HPP_
#define ATRAJ_UTIL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace atraj {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

/// Strict full-string number parsing; throws ParseError naming `what`.
double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// SplitMix64 finalizer; derives independent stream seeds from (seed, k).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Runs fn(i) for i in [0, n) over up to `threads` workers. Work is split
/// into contiguous blocks, so callers that write results into slot i get a
/// result independent of the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)> &fn);

std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view bytes);

} // namespace atraj

#endif // ATRAJ_UTIL_HPP_
