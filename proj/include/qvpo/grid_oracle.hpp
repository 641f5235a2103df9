#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "qvpo/rng.hpp"

namespace qvpo {

/// Probability mass function on a regular grid over a 2-D action box.
/// Cell (ix, iy) has flat index ix + iy * nx and its center is the sample
/// point for any function discretized on the grid.
struct GridPolicy {
  int nx = 0;
  int ny = 0;
  Eigen::Vector2d low{0.0, 0.0};
  Eigen::Vector2d high{1.0, 1.0};
  Eigen::VectorXd mass;

  Eigen::Index cells() const { return static_cast<Eigen::Index>(nx) * ny; }
  Eigen::Vector2d cell_center(Eigen::Index flat) const;
};

GridPolicy uniform_grid(int nx, int ny, const Eigen::Vector2d& low,
                        const Eigen::Vector2d& high);

/// Closed-form best policy after one improvement step against fixed per-cell
/// Q values. If any cell has Q > 0, mass is proportional to prior * Q on the
/// Q > 0 cells and zero elsewhere. If no cell does, mass is uniform over the
/// cells attaining the exact maximum Q that also carry positive prior.
/// Throws when the supporting set carries no prior mass.
GridPolicy optimal_one_step_policy(const GridPolicy& prior,
                                   const Eigen::VectorXd& q_on_grid);

/// Fraction of actions within Euclidean `radius` of each peak.
std::vector<double> mode_coverage(std::span<const Eigen::Vector2d> actions,
                                  std::span<const Eigen::Vector2d> peaks,
                                  double radius);

}  // namespace qvpo
