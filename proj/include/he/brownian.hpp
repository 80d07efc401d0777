// SPDX-License-Identifier: MIT
/**
 * @file brownian.hpp
 * @brief One Brownian path per (seed, path index), sampled at the finest
 *        dyadic level and coarsened by exact summation.
 *
 * Increment j of path m is a function of (master_seed, m, j) only. Each
 * finest increment is rounded to a power-of-two quantum 2^-20 below its
 * standard deviation, so every partial sum of increments is exact in double
 * precision. Coarse increments and Brownian values at shared nodes are
 * therefore bit-identical whichever level they are computed from.
 */
#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace he {

inline constexpr int kMaxLatticeLevel = 26;

struct BrownianLattice {
  double horizon = 1.0;
  int ref_level = 0;
  Eigen::VectorXd increments;  ///< 2^ref_level values, each ~ N(0, T / 2^ref_level)
  std::uint64_t path_index = 0;
  std::uint64_t master_seed = 0;

  double dt() const noexcept { return std::ldexp(horizon, -ref_level); }
};

/// Dyadic rounding quantum applied to increments at this level.
double increment_quantum(int ref_level, double horizon);

/// Writes the finest increments of one path into `out` (resized to 2^ref_level).
void sample_increments(std::uint64_t master_seed, std::uint64_t path_index, int ref_level,
                       double horizon, Eigen::VectorXd& out, int max_level = kMaxLatticeLevel);

BrownianLattice sample_lattice(std::uint64_t master_seed, std::uint64_t path_index, int ref_level,
                               double horizon, int max_level = kMaxLatticeLevel);

/// Increments at `level` from increments at `from_level`, by pairwise sums.
Eigen::VectorXd coarsen(const Eigen::Ref<const Eigen::VectorXd>& increments, int from_level, int level);

inline Eigen::VectorXd coarsen(const BrownianLattice& lattice, int level) {
  return coarsen(lattice.increments, lattice.ref_level, level);
}

/// In-place halving: out[i] = in[2i] + in[2i+1]. `out` may alias the front of `in`.
void halve_increments(const double* in, double* out, std::int64_t out_count) noexcept;

/// Partial sums W_{t_k}, k = 0..N, starting from W_0 = 0.
Eigen::VectorXd brownian_values(const Eigen::Ref<const Eigen::VectorXd>& increments);

}  // namespace he
