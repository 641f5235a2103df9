#include "qvpo/grid_oracle.hpp"

#include <stdexcept>

namespace qvpo {

Eigen::Vector2d GridPolicy::cell_center(Eigen::Index flat) const {
  const Eigen::Index ix = flat % nx;
  const Eigen::Index iy = flat / nx;
  const double dx = (high.x() - low.x()) / nx;
  const double dy = (high.y() - low.y()) / ny;
  return {low.x() + (ix + 0.5) * dx, low.y() + (iy + 0.5) * dy};
}

GridPolicy uniform_grid(int nx, int ny, const Eigen::Vector2d& low,
                        const Eigen::Vector2d& high) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("uniform_grid: need nx, ny >= 1");
  if (!(low.x() < high.x()) || !(low.y() < high.y()))
    throw std::invalid_argument("uniform_grid: need low < high");
  GridPolicy grid;
  grid.nx = nx;
  grid.ny = ny;
  grid.low = low;
  grid.high = high;
  grid.mass = Eigen::VectorXd::Constant(grid.cells(),
                                        1.0 / static_cast<double>(grid.cells()));
  return grid;
}

GridPolicy optimal_one_step_policy(const GridPolicy& prior,
                                   const Eigen::VectorXd& q_on_grid) {
  if (q_on_grid.size() != prior.cells() || prior.mass.size() != prior.cells())
    throw std::invalid_argument("optimal_one_step_policy: grid shape mismatch");
  GridPolicy result = prior;
  result.mass.setZero();

  const bool any_positive = (q_on_grid.array() > 0.0).any();
  if (any_positive) {
    double normalizer = 0.0;
    for (Eigen::Index i = 0; i < q_on_grid.size(); ++i)
      if (q_on_grid[i] > 0.0) {
        result.mass[i] = prior.mass[i] * q_on_grid[i];
        normalizer += result.mass[i];
      }
    if (!(normalizer > 0.0))
      throw std::invalid_argument(
          "optimal_one_step_policy: prior carries no mass where q > 0");
    result.mass /= normalizer;
    return result;
  }

  // All q <= 0: uniform over the exact-argmax cells with positive prior.
  const double q_max = q_on_grid.maxCoeff();
  Eigen::Index support = 0;
  for (Eigen::Index i = 0; i < q_on_grid.size(); ++i)
    if (q_on_grid[i] == q_max && prior.mass[i] > 0.0) support += 1;
  if (support == 0)
    throw std::invalid_argument(
        "optimal_one_step_policy: no argmax cell carries prior mass");
  for (Eigen::Index i = 0; i < q_on_grid.size(); ++i)
    if (q_on_grid[i] == q_max && prior.mass[i] > 0.0)
      result.mass[i] = 1.0 / static_cast<double>(support);
  return result;
}

std::vector<double> mode_coverage(std::span<const Eigen::Vector2d> actions,
                                  std::span<const Eigen::Vector2d> peaks,
                                  double radius) {
  if (actions.empty())
    throw std::invalid_argument("mode_coverage: empty action list");
  if (!(radius > 0.0))
    throw std::invalid_argument("mode_coverage: radius must be > 0");
  std::vector<double> fractions(peaks.size(), 0.0);
  for (std::size_t p = 0; p < peaks.size(); ++p) {
    std::size_t hits = 0;
    for (const Eigen::Vector2d& a : actions)
      if ((a - peaks[p]).norm() <= radius) hits += 1;
    fractions[p] = static_cast<double>(hits) / static_cast<double>(actions.size());
  }
  return fractions;
}

}  // namespace qvpo
