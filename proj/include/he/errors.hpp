// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace he {

/// Precondition or domain violation in a library call.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A user coefficient produced a non-finite value.
class InvalidCoefficient : public std::runtime_error {
 public:
  InvalidCoefficient(const std::string& what, double t, double x)
      : std::runtime_error(what), t_(t), x_(x) {}
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

/// Experiment or run configuration rejected before any simulation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A proposition's hypotheses do not hold, so no rate can be predicted.
class HypothesisFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A path produced a non-finite state and the experiment was aborted.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(const std::string& what, std::uint64_t path_index, std::int64_t step)
      : std::runtime_error(what), path_index_(path_index), step_(step) {}
  std::uint64_t path_index() const noexcept { return path_index_; }
  std::int64_t step() const noexcept { return step_; }

 private:
  std::uint64_t path_index_;
  std::int64_t step_;
};

}  // namespace he
