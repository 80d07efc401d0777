// SPDX-License-Identifier: MIT
#pragma once

#include <functional>

namespace he {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< accumulated |S2 - S1| / 15 estimate
  long evaluations = 0;
  bool converged = true;
};

struct SimpsonOptions {
  double abs_tol = 1e-12;
  double rel_tol = 0.0;  ///< relative to |whole-interval estimate|
  int max_depth = 48;
  long max_evaluations = 2'000'000;
};

/// Adaptive Simpson with Richardson correction. b < a integrates with sign.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  const SimpsonOptions& options = {});

}  // namespace he
