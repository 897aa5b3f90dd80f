// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace deasel {

enum class ErrorKind {
  Input,
  Solver,
  Definiteness,
  Rank,
  DegreesOfFreedom,
  Contract,
  Undecidable,
  Tuning,
  Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library. `index` carries the offending
// pivot / row / column when the failure is localized.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), kind_(kind), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace deasel
