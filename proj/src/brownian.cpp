// SPDX-License-Identifier: MIT
#include "he/brownian.hpp"

#include "he/errors.hpp"
#include "he/random.hpp"

#include <cmath>
#include <string>

namespace he {

namespace {

constexpr int kQuantumBits = 20;

void check_level(int ref_level, int max_level) {
  if (ref_level < 0 || ref_level > max_level) {
    throw InvalidArgument("brownian: finest level " + std::to_string(ref_level) +
                          " outside [0, " + std::to_string(max_level) + "]");
  }
}

}  // namespace

double increment_quantum(int ref_level, double horizon) {
  const double sd = std::sqrt(std::ldexp(horizon, -ref_level));
  return std::ldexp(1.0, std::ilogb(sd) - kQuantumBits);
}

void sample_increments(std::uint64_t master_seed, std::uint64_t path_index, int ref_level,
                       double horizon, Eigen::VectorXd& out, int max_level) {
  check_level(ref_level, max_level);
  if (!(horizon > 0.0)) throw InvalidArgument("brownian: horizon must be positive");
  const std::int64_t n = std::int64_t{1} << ref_level;
  out.resize(n);
  fill_standard_normal(master_seed, path_index, 0, out.data(), static_cast<std::size_t>(n));
  const double sd = std::sqrt(std::ldexp(horizon, -ref_level));
  const double quantum = increment_quantum(ref_level, horizon);
  const double inv_quantum = 1.0 / quantum;
  for (std::int64_t j = 0; j < n; ++j) {
    out[j] = std::nearbyint(out[j] * sd * inv_quantum) * quantum;
  }
}

BrownianLattice sample_lattice(std::uint64_t master_seed, std::uint64_t path_index, int ref_level,
                               double horizon, int max_level) {
  BrownianLattice lattice;
  lattice.horizon = horizon;
  lattice.ref_level = ref_level;
  lattice.path_index = path_index;
  lattice.master_seed = master_seed;
  sample_increments(master_seed, path_index, ref_level, horizon, lattice.increments, max_level);
  return lattice;
}

void halve_increments(const double* in, double* out, std::int64_t out_count) noexcept {
  for (std::int64_t i = 0; i < out_count; ++i) out[i] = in[2 * i] + in[2 * i + 1];
}

Eigen::VectorXd coarsen(const Eigen::Ref<const Eigen::VectorXd>& increments, int from_level, int level) {
  if (level < 0 || level > from_level) {
    throw InvalidArgument("coarsen: level must lie in [0, " + std::to_string(from_level) + "]");
  }
  if (increments.size() != (Eigen::Index{1} << from_level)) {
    throw InvalidArgument("coarsen: increment count does not match the level");
  }
  Eigen::VectorXd out = increments;
  for (int l = from_level; l > level; --l) {
    halve_increments(out.data(), out.data(), std::int64_t{1} << (l - 1));
  }
  out.conservativeResize(Eigen::Index{1} << level);
  return out;
}

Eigen::VectorXd brownian_values(const Eigen::Ref<const Eigen::VectorXd>& increments) {
  Eigen::VectorXd w(increments.size() + 1);
  w[0] = 0.0;
  for (Eigen::Index k = 0; k < increments.size(); ++k) w[k + 1] = w[k] + increments[k];
  return w;
}

}  // namespace he
