// SPDX-License-Identifier: MIT
#include "he/schemes.hpp"

#include <cmath>
#include <limits>

namespace he {

std::optional<std::int64_t> euler_run(const SdeModel& model, double dt,
                                      const Eigen::Ref<const Eigen::VectorXd>& increments,
                                      std::int64_t stride, Eigen::Ref<Eigen::VectorXd> recorded) {
  const std::int64_t steps = increments.size();
  if (stride < 1 || steps % stride != 0 || recorded.size() != steps / stride + 1) {
    throw InvalidArgument("euler_run: record stride does not divide the step count");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double x = model.x0;
  recorded[0] = x;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double drift = model.drift(t, x);
    const double diffusion = eval_diffusion(model, t, x);
    x = x + drift * dt + diffusion * increments[k];
    if (!std::isfinite(x)) {
      for (std::int64_t j = k / stride + 1; j < recorded.size(); ++j) recorded[j] = nan;
      return k + 1;
    }
    if ((k + 1) % stride == 0) recorded[(k + 1) / stride] = x;
  }
  return std::nullopt;
}

EulerTrajectory euler_path(const SdeModel& model, const BrownianLattice& lattice, int level) {
  if (level < 0 || level > lattice.ref_level) throw InvalidArgument("euler_path: level exceeds the lattice level");
  TimeGrid grid(lattice.horizon, level);
  const Eigen::VectorXd dw = coarsen(lattice, level);
  Eigen::VectorXd values(grid.steps() + 1);
  auto boom = euler_run(model, grid.dt(), dw, 1, values);
  return EulerTrajectory{grid, std::move(values), model.name, lattice.path_index, boom};
}

double euler_interpolate(const SdeModel& model, const EulerTrajectory& traj,
                         const BrownianLattice& lattice, double t) {
  const TimeGrid& grid = traj.grid;
  if (grid.level() > lattice.ref_level || grid.horizon() != lattice.horizon) {
    throw InvalidArgument("euler_interpolate: trajectory does not belong to this lattice");
  }
  if (!(t >= 0.0 && t <= grid.horizon())) throw InvalidArgument("euler_interpolate: t outside [0, T]");
  const double fine_dt = lattice.dt();
  const double pos = t / fine_dt;
  const auto j = static_cast<std::int64_t>(std::llround(pos));
  if (static_cast<double>(j) * fine_dt != t) {
    throw InvalidArgument("euler_interpolate: t is not a node of the finest lattice grid");
  }
  const int shift = lattice.ref_level - grid.level();
  std::int64_t k = j >> shift;
  if (k == grid.steps()) return traj.values[k];
  if (traj.explosion_index && k >= *traj.explosion_index) {
    throw InvalidArgument("euler_interpolate: trajectory exploded before t");
  }
  double dw = 0.0;
  for (std::int64_t i = k << shift; i < j; ++i) dw += lattice.increments[i];
  const double eta = grid.node(k);
  const double xe = traj.values[k];
  return xe + model.drift(eta, xe) * (t - eta) + eval_diffusion(model, eta, xe) * dw;
}

ReferenceTrajectory reference_path(const SdeModel& model, const BrownianLattice& lattice) {
  TimeGrid grid(lattice.horizon, lattice.ref_level);
  Eigen::VectorXd values(grid.steps() + 1);
  auto boom = euler_run(model, grid.dt(), lattice.increments, 1, values);
  return ReferenceTrajectory{grid, std::move(values), "euler-fine", lattice.path_index, boom};
}

}  // namespace he
