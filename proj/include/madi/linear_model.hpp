#pragma once

#include <span>

#include <Eigen/Dense>

namespace madi {

/// Condition numbers above this mark a fit as singular.
inline constexpr double kSingularCondition = 1e12;

/// Prepends a column of ones when `intercept` is set.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x, bool intercept);

/// Weighted least squares through an SVD of the column-equilibrated matrix
/// sqrt(W) Z. The condition number is that of the equilibrated matrix, so it
/// flags collinearity (including all-zero columns and n < q) rather than
/// differences in column units. Never falls back to a pseudo-inverse: callers
/// check `singular()` and refuse.
class WeightedLeastSquares {
public:
  WeightedLeastSquares(const Eigen::MatrixXd& z, std::span<const double> weights);

  double condition_number() const noexcept { return condition_; }
  bool singular() const noexcept { return !(condition_ <= kSingularCondition); }

  /// argmin_b sum_i w_i (y_i - z_i' b)^2. Throws SingularFitError if singular().
  Eigen::VectorXd solve(std::span<const double> y) const;
  /// (Z' W Z)^{-1} rhs. Throws SingularFitError if singular().
  Eigen::VectorXd solve_normal(const Eigen::VectorXd& rhs) const;

private:
  void require_regular() const;

  Eigen::VectorXd sqrt_w_;
  Eigen::VectorXd col_scale_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd v_;
  double condition_ = 0.0;
};

}  // namespace madi
