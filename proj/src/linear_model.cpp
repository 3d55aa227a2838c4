#include "madi/linear_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "madi/error.hpp"

namespace madi {

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x, bool intercept) {
  if (!intercept) return x;
  Eigen::MatrixXd z(x.rows(), x.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(x.cols()) = x;
  return z;
}

WeightedLeastSquares::WeightedLeastSquares(const Eigen::MatrixXd& z, std::span<const double> weights) {
  const Eigen::Index n = z.rows();
  const Eigen::Index q = z.cols();
  if (static_cast<Eigen::Index>(weights.size()) != n) throw DimensionError("weights length does not match rows");
  sqrt_w_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("weights must be positive and finite");
    sqrt_w_(i) = std::sqrt(w);
  }
  Eigen::MatrixXd a = sqrt_w_.asDiagonal() * z;
  col_scale_.resize(q);
  bool zero_column = false;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double norm = a.col(j).norm();
    if (norm > 0.0) {
      col_scale_(j) = 1.0 / norm;
      a.col(j) *= col_scale_(j);
    } else {
      col_scale_(j) = 1.0;
      zero_column = true;
    }
  }
  if (n < q || q == 0 || zero_column) {
    condition_ = std::numeric_limits<double>::infinity();
    return;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  s_ = svd.singularValues();
  v_ = svd.matrixV();
  const double smin = s_(s_.size() - 1);
  condition_ = smin > 0.0 ? s_(0) / smin : std::numeric_limits<double>::infinity();
}

void WeightedLeastSquares::require_regular() const {
  if (singular()) {
    std::ostringstream msg;
    msg << "singular weighted design (equilibrated condition number " << condition_ << " > " << kSingularCondition << ")";
    throw SingularFitError(msg.str());
  }
}

Eigen::VectorXd WeightedLeastSquares::solve(std::span<const double> y) const {
  require_regular();
  if (static_cast<Eigen::Index>(y.size()) != sqrt_w_.size()) throw DimensionError("response length does not match rows");
  Eigen::VectorXd wy(sqrt_w_.size());
  for (Eigen::Index i = 0; i < wy.size(); ++i) wy(i) = sqrt_w_(i) * y[static_cast<std::size_t>(i)];
  const Eigen::VectorXd c = (u_.transpose() * wy).cwiseQuotient(s_);
  return col_scale_.asDiagonal() * (v_ * c);
}

Eigen::VectorXd WeightedLeastSquares::solve_normal(const Eigen::VectorXd& rhs) const {
  require_regular();
  const Eigen::VectorXd scaled = col_scale_.asDiagonal() * rhs;
  const Eigen::VectorXd c = (v_.transpose() * scaled).cwiseQuotient(s_.cwiseProduct(s_));
  return col_scale_.asDiagonal() * (v_ * c);
}

}  // namespace madi
