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

#ifndef ATRAJ_ERRORS_HPP_
#define ATRAJ_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace atraj {

/// Base of every error raised by the library. `category()` is a stable,
/// machine-parsable token; the CLI prints it as the first field of its
/// single-line failure report.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string &message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string &category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define ATRAJ_DEFINE_ERROR(Name, token)                                        \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string &message) : Error(token, message) {}       \
  };

ATRAJ_DEFINE_ERROR(DimensionError, "dimension")
ATRAJ_DEFINE_ERROR(ParameterError, "parameter")
ATRAJ_DEFINE_ERROR(ContractError, "contract")
ATRAJ_DEFINE_ERROR(DegenerateError, "degenerate")
ATRAJ_DEFINE_ERROR(NumericError, "numeric")
ATRAJ_DEFINE_ERROR(SchemaError, "schema")
ATRAJ_DEFINE_ERROR(ParseError, "parse")
ATRAJ_DEFINE_ERROR(FileError, "file")
ATRAJ_DEFINE_ERROR(CorruptFileError, "corrupt")
ATRAJ_DEFINE_ERROR(UnsupportedVersionError, "unsupported-version")
ATRAJ_DEFINE_ERROR(ConfigError, "config")
ATRAJ_DEFINE_ERROR(NotFoundError, "not-found")
ATRAJ_DEFINE_ERROR(DivergenceError, "divergence")

#undef ATRAJ_DEFINE_ERROR

} // namespace atraj

#endif // ATRAJ_ERRORS_HPP_
