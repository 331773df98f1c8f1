// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_ERRORS_HPP
#define NMOG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nmog {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File I/O or on-disk format violations (bad magic, truncated payload, ...).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Shape / rank mismatches between containers.
class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Non-finite state encountered during inference; carries iteration context.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, int iteration)
      : Error(msg + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

} // namespace nmog

#endif
