#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "qvs/error.hpp"
#include "qvs/random.hpp"
#include "qvs/regression_data.hpp"

namespace qvs {

/// Row covariance of a Gaussian design: identity when rho = 0, otherwise
/// Sigma_ij = rho^|i - j|.
struct CovarianceSpec {
  double rho = 0.0;

  static CovarianceSpec identity() { return {}; }
  static CovarianceSpec ar1(double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("ar1 correlation must lie in [0, 1)");
    return {rho};
  }

  bool is_identity() const { return rho == 0.0; }

  /// "identity" or "ar1(<rho>)".
  std::string label() const {
    if (is_identity()) return "identity";
    char buf[64];
    std::snprintf(buf, sizeof buf, "ar1(%.10g)", rho);
    return buf;
  }

  static CovarianceSpec parse(const std::string& text) {
    if (text == "identity" || text == "iid") return identity();
    if (text.rfind("ar1(", 0) == 0 && text.back() == ')') {
      const std::string inner = text.substr(4, text.size() - 5);
      std::size_t used = 0;
      double rho = 0.0;
      try {
        rho = std::stod(inner, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != inner.size() || inner.empty()) throw InputError("bad ar1 correlation in '" + text + "'");
      return ar1(rho);
    }
    throw InputError("unknown covariance spec '" + text + "' (expected identity or ar1(<rho>))");
  }
};

/// Raw Gaussian design: rows i.i.d. N_p(0, Sigma). AR(1) rows come from the
/// recursion x_1 = z_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j.
inline Matrix gen_design(Index n, Index p, const CovarianceSpec& cov, Rng& rng) {
  if (n < 1 || p < 1) throw InputError("design shape must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innov = std::sqrt(1.0 - cov.rho * cov.rho);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double z = normal(rng);
      prev = j == 0 ? z : cov.rho * prev + innov * z;
      x(i, j) = prev;
    }
  }
  return x;
}

struct TrueModel {
  Vector beta;
  /// Indices of nonzero coefficients, ascending.
  std::vector<Index> relevant;
};

/// s distinct positions drawn uniformly without replacement, set to beta_value.
inline TrueModel gen_truth(Index p, Index s, double beta_value, Rng& rng) {
  if (s < 0 || s > p) throw InputError("sparsity s must lie in [0, p]");
  std::vector<Index> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    std::uniform_int_distribution<Index> pick(i, p - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  TrueModel out;
  out.relevant.assign(pool.begin(), pool.begin() + s);
  std::sort(out.relevant.begin(), out.relevant.end());
  out.beta = Vector::Zero(p);
  for (Index j : out.relevant) out.beta[j] = beta_value;
  return out;
}

/// y = X beta + sigma z.
inline Vector gen_response(const Matrix& x, const Vector& beta, double sigma, Rng& rng) {
  if (beta.size() != x.cols()) {
    throw InputError("coefficient length " + std::to_string(beta.size()) + " does not match " +
                     std::to_string(x.cols()) + " design columns");
  }
  if (!(sigma >= 0.0)) throw InputError("noise SD must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector y = x * beta;
  for (Index i = 0; i < y.size(); ++i) y[i] += sigma * normal(rng);
  return y;
}

}  // namespace qvs
