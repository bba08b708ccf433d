#pragma once

#include <optional>

#include "llql/types.hpp"

namespace llql {

/// Tikhonov term added to every normal-equation solve.
inline constexpr double kRidge = 1e-9;

/// argmin_u ||A u - b||^2 + ridge ||u||^2 via the normal equations
/// (A^T A + ridge I) u = A^T b. Returns nullopt when the regularized normal
/// matrix is numerically singular or the solution is not finite.
[[nodiscard]] std::optional<Vec> ridge_least_squares(const Mat& a, const Vec& b, double ridge = kRidge);

/// (M^T M + ridge I)^{-1} applied to `rhs`, nullopt on numerical failure.
[[nodiscard]] std::optional<Mat> ridge_normal_solve(const Mat& m, const Mat& rhs, double ridge = kRidge);

}  // namespace llql

namespace llql {

/// Frobenius-norm threshold below which d is treated as zero.
inline constexpr double kEpsD = 1e-8;

/// The least-squares minimizer of ||h + d u||: u = -(d^T d + ridge I)^{-1} d^T h.
/// Returns nullopt when ||d|| < kEpsD or the solve fails.
[[nodiscard]] std::optional<Vec> pseudo_inverse_action(const Mat& d, const Vec& h, double ridge = kRidge);

}  // namespace llql
