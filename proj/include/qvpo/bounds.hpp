#pragma once

#include <Eigen/Core>

#include "qvpo/rng.hpp"

namespace qvpo {

/// Per-coordinate action box, low < high everywhere.
struct ActionBounds {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  Eigen::Index dim() const { return low.size(); }

  static ActionBounds symmetric(Eigen::Index dim, double half_width) {
    return {Eigen::VectorXd::Constant(dim, -half_width),
            Eigen::VectorXd::Constant(dim, half_width)};
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd& a) const {
    return a.cwiseMax(low).cwiseMin(high);
  }

  /// Uniform draw over the box, coordinate by coordinate.
  Eigen::VectorXd sample_uniform(Rng& rng) const {
    Eigen::VectorXd a(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) a[i] = rng.uniform(low[i], high[i]);
    return a;
  }
};

}  // namespace qvpo
