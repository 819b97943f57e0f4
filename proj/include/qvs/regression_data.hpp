#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qvs/error.hpp"

namespace qvs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Center every column and scale it to unit Euclidean norm.
///
/// Throws InputError naming the first column with zero variance.
inline Matrix standardize(const Matrix& raw) {
  Matrix out = raw;
  for (Index j = 0; j < out.cols(); ++j) {
    auto col = out.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double norm = col.norm();
    const double scale = std::max(1.0, std::abs(mean)) * std::sqrt(static_cast<double>(col.size()));
    if (!(norm > 1e-12 * scale)) {
      throw InputError("constant column " + std::to_string(j));
    }
    col /= norm;
  }
  return out;
}

/// Response centering; the intercept is absorbed here.
inline Vector center(const Vector& raw) {
  Vector out = raw;
  if (out.size() > 0) out.array() -= out.mean();
  return out;
}

/// Design, response and (optionally known) noise variance of a linear model.
///
/// Columns of the design must have unit Euclidean norm. Designs built with
/// from_raw() are additionally centered.
class RegressionData {
 public:
  RegressionData(Matrix x, Vector y, std::optional<double> sigma2 = std::nullopt)
      : x_(std::move(x)), y_(std::move(y)), sigma2_(sigma2) {
    if (x_.rows() < 2) throw InputError("need at least 2 observations");
    if (x_.cols() < 1) throw InputError("need at least 1 predictor");
    if (y_.size() != x_.rows()) {
      throw InputError("response length " + std::to_string(y_.size()) + " does not match " +
                       std::to_string(x_.rows()) + " design rows");
    }
    if (sigma2_ && !(*sigma2_ > 0.0 && std::isfinite(*sigma2_))) {
      throw InputError("noise variance must be positive");
    }
    for (Index j = 0; j < x_.cols(); ++j) {
      if (std::abs(x_.col(j).norm() - 1.0) > 1e-10) {
        throw InputError("column " + std::to_string(j) + " is not normalized to unit norm");
      }
    }
    xty_ = x_.transpose() * y_;
  }

  /// Standardize the design and center the response.
  static RegressionData from_raw(const Matrix& raw_x, const Vector& raw_y,
                                 std::optional<double> sigma2 = std::nullopt) {
    if (raw_y.size() != raw_x.rows()) {
      throw InputError("response length " + std::to_string(raw_y.size()) + " does not match " +
                       std::to_string(raw_x.rows()) + " design rows");
    }
    return RegressionData(standardize(raw_x), center(raw_y), sigma2);
  }

  const Matrix& x() const { return x_; }
  const Vector& y() const { return y_; }
  const Vector& xty() const { return xty_; }
  std::optional<double> sigma2() const { return sigma2_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }

  /// min(n - 1, p), the longest path the solver will produce.
  Index max_path_length() const { return std::min(n() - 1, p()); }

 private:
  Matrix x_;
  Vector y_;
  std::optional<double> sigma2_;
  Vector xty_;
};

/// Dense Lasso coefficients at a given penalty.
struct CoefficientVector {
  Vector beta;
  double lambda = 0.0;
  std::vector<Index> support;

  CoefficientVector() = default;
  CoefficientVector(Vector b, double lam) : beta(std::move(b)), lambda(lam) {
    for (Index j = 0; j < beta.size(); ++j) {
      if (beta[j] != 0.0) support.push_back(j);
    }
  }
};

/// Sparse coefficient snapshot stored along a path.
struct SparseCoef {
  std::vector<Index> index;
  std::vector<double> value;

  static SparseCoef from_dense(const Vector& v) {
    SparseCoef s;
    for (Index j = 0; j < v.size(); ++j) {
      if (v[j] != 0.0) {
        s.index.push_back(j);
        s.value.push_back(v[j]);
      }
    }
    return s;
  }

  std::size_t size() const { return index.size(); }

  double dot(const Vector& v) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) acc += value[i] * v[index[i]];
    return acc;
  }

  Vector dense(Index p) const {
    Vector out = Vector::Zero(p);
    for (std::size_t i = 0; i < index.size(); ++i) out[index[i]] = value[i];
    return out;
  }
};

/// Resolve the noise variance of data: the known value, or the least-squares
/// residual variance (n - p - 1 degrees of freedom) when n > p + 1.
inline double resolve_sigma2(const RegressionData& data) {
  if (data.sigma2()) return *data.sigma2();
  const Index n = data.n();
  const Index p = data.p();
  if (n <= p + 1) {
    throw InputError("noise variance unknown and cannot be estimated with n <= p + 1 (n = " +
                     std::to_string(n) + ", p = " + std::to_string(p) + "); supply it explicitly");
  }
  const Vector coef = data.x().colPivHouseholderQr().solve(data.y());
  const double rss = (data.y() - data.x() * coef).squaredNorm();
  const double s2 = rss / static_cast<double>(n - p - 1);
  if (!(s2 > 0.0)) throw NumericalError("estimated noise variance is zero");
  return s2;
}

}  // namespace qvs
