#pragma once

#include <Eigen/Dense>

namespace llql {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Observable environment state (mountain car: position, velocity;
/// pendulum: cos, sin, angular velocity).
using State = Eigen::VectorXd;
/// Control signal.
using Action = Eigen::VectorXd;

/// Per-component closed interval for actions.
struct ActionBounds {
  Vec low;
  Vec high;

  [[nodiscard]] Action clip(const Action& u) const {
    return u.cwiseMax(low).cwiseMin(high);
  }
  [[nodiscard]] bool contains(const Action& u) const {
    return ((u.array() >= low.array()) && (u.array() <= high.array())).all();
  }
  [[nodiscard]] int dim() const { return static_cast<int>(low.size()); }
};

}  // namespace llql
