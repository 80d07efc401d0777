// SPDX-License-Identifier: MIT
/**
 * @file schemes.hpp
 * @brief Equidistant Euler scheme, its continuous interpolation and the
 *        fine-grid reference solution.
 *
 * x_{k+1} = x_k + a(t_k, x_k) dt + c(t_k, x_k) dW_k, evaluated exactly in that
 * order. The state is never projected onto the model's domain.
 */
#pragma once

#include "he/brownian.hpp"
#include "he/sde_core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>

namespace he {

struct EulerTrajectory {
  TimeGrid grid;
  Eigen::VectorXd values;  ///< x_0..x_N; entries after an explosion are NaN
  std::string model_name;
  std::uint64_t path_index = 0;
  std::optional<std::int64_t> explosion_index;  ///< first k with non-finite x_k

  bool exploded() const noexcept { return explosion_index.has_value(); }
};

struct ReferenceTrajectory {
  TimeGrid grid;
  Eigen::VectorXd values;
  std::string solver = "euler-fine";
  std::uint64_t path_index = 0;
  std::optional<std::int64_t> explosion_index;

  bool exploded() const noexcept { return explosion_index.has_value(); }
};

inline constexpr int kDefaultReferenceGap = 4;

/**
 * Runs the recursion over `increments` (one per step of width dt) and keeps
 * every `stride`-th state in `recorded` (size steps/stride + 1).
 *
 * Returns the first index whose state is non-finite; the run stops there and
 * the remaining recorded entries are NaN.
 */
std::optional<std::int64_t> euler_run(const SdeModel& model, double dt,
                                      const Eigen::Ref<const Eigen::VectorXd>& increments,
                                      std::int64_t stride, Eigen::Ref<Eigen::VectorXd> recorded);

EulerTrajectory euler_path(const SdeModel& model, const BrownianLattice& lattice, int level);

/// Continuous Euler value at a time representable on the lattice's finest grid.
double euler_interpolate(const SdeModel& model, const EulerTrajectory& traj,
                         const BrownianLattice& lattice, double t);

/// Euler at the lattice's finest level; a proxy for the exact solution.
ReferenceTrajectory reference_path(const SdeModel& model, const BrownianLattice& lattice);

}  // namespace he
