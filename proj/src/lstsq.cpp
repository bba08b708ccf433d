#include "llql/lstsq.hpp"

#include "llql/errors.hpp"

namespace llql {

std::optional<Mat> ridge_normal_solve(const Mat& m, const Mat& rhs, double ridge) {
  if (rhs.rows() != m.cols()) throw DimensionMismatch("normal-equation right-hand side has the wrong row count");
  Mat normal = m.transpose() * m;
  normal.diagonal().array() += ridge;
  const Eigen::LDLT<Mat> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  // Pivots below the ridge scale mean the system is singular beyond what
  // the regularization can absorb.
  const Vec pivots = ldlt.vectorD();
  if (pivots.size() > 0 && pivots.minCoeff() < 0.5 * ridge) return std::nullopt;
  Mat x = ldlt.solve(rhs);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

std::optional<Vec> ridge_least_squares(const Mat& a, const Vec& b, double ridge) {
  if (b.size() != a.rows()) throw DimensionMismatch("least-squares target has the wrong length");
  auto x = ridge_normal_solve(a, a.transpose() * b, ridge);
  if (!x) return std::nullopt;
  return Vec(x->col(0));
}

}  // namespace llql

namespace llql {

std::optional<Vec> pseudo_inverse_action(const Mat& d, const Vec& h, double ridge) {
  if (d.rows() != h.size()) throw DimensionMismatch("h and d row counts differ");
  if (d.norm() < kEpsD) return std::nullopt;
  auto u = ridge_least_squares(d, h, ridge);
  if (!u) return std::nullopt;
  return Vec(-*u);
}

}  // namespace llql
