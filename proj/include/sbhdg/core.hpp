#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sbhdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;

/// Error type for precondition violations and failed runtime checks.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a factorization fails or a post-solve residual check is violated.
struct SolverError : Error {
  using Error::Error;
};

// 90 degree counterclockwise rotation; maps a unit normal to a unit tangent.
inline Vec2 rotate_ccw(const Vec2& v) { return Vec2(-v.y(), v.x()); }

}  // namespace sbhdg
