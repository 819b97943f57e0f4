#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qvs/detail/homotopy.hpp"
#include "qvs/error.hpp"
#include "qvs/path_solver.hpp"
#include "qvs/regression_data.hpp"

namespace qvs {

/// Where the penalty following the last path position came from.
enum class TailSource {
  path_end,   // the path reached lambda = 0
  next_knot,  // first entry knot beyond the cap
};

/// Covariance test statistics T_1..T_m, one per entry event.
struct CovTestSeries {
  std::vector<double> T;
  double sigma2_used = 1.0;
  double tail_lambda = 0.0;
  TailSource tail_source = TailSource::path_end;

  std::size_t size() const { return T.size(); }
  bool has_negative() const {
    return std::any_of(T.begin(), T.end(), [](double t) { return t < 0.0; });
  }
};

/// Q statistics q_k = exp(-(T_k + ... + T_m)).
struct QSeries {
  std::vector<double> q;
  /// Some T_k was negative, so q may not be monotone.
  bool from_negative_T = false;

  std::size_t size() const { return q.size(); }
  bool empty() const { return q.empty(); }
};

namespace detail {

/// <y, X_A beta~_A(target)> where beta~ is the Lasso fit restricted to the
/// active set before knot, continued from the knot down to target.
inline double restricted_fit_inner(const RegressionData& data, const Knot& knot, double target) {
  const auto& active = knot.active_before;
  if (active.empty()) return 0.0;
  const Vector& xty = data.xty();
  const double step = knot.lambda - target;

  // Between the knot and target the restricted path keeps the direction of
  // the segment that ended at the knot, unless a coefficient hits zero.
  if (knot.direction.size() == active.size()) {
    Vector start = Vector::Zero(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < knot.coef.index.size(); ++i) {
      const auto it = std::find(active.begin(), active.end(), knot.coef.index[i]);
      if (it != active.end()) start[it - active.begin()] = knot.coef.value[i];
    }
    bool sign_kept = true;
    double inner = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double b0 = start[static_cast<Index>(i)];
      const double b1 = b0 + step * knot.direction[i];
      if (!(b0 * b1 > 0.0)) {
        sign_kept = false;
        break;
      }
      inner += b1 * xty[active[i]];
    }
    if (sign_kept) return inner;
  }

  Matrix sub(data.n(), static_cast<Index>(active.size()));
  Vector start = Vector::Zero(static_cast<Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) {
    sub.col(static_cast<Index>(i)) = data.x().col(active[i]);
    for (std::size_t t = 0; t < knot.coef.index.size(); ++t) {
      if (knot.coef.index[t] == active[i]) start[static_cast<Index>(i)] = knot.coef.value[t];
    }
  }
  LassoHomotopy engine(sub, data.y());
  engine.start_from(knot.lambda, start);
  const std::size_t cap = 20 * active.size() + 100;
  for (std::size_t i = 0; engine.advance(target); ++i) {
    if (i > cap) throw NumericalError("restricted homotopy did not terminate");
  }
  double inner = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) inner += engine.beta()[static_cast<Index>(i)] * xty[active[i]];
  return inner;
}

}  // namespace detail

/// Covariance test statistic at every entry knot of path:
///
///   T_k = (<y, X b(l_{k+1})> - <y, X_A b~_A(l_{k+1})>) / sigma2
///
/// with A the active set just before the k-th entry, b the full path
/// solution and b~ the Lasso fit restricted to A. l_{m+1} is the path tail.
inline CovTestSeries covariance_test(const SolutionPath& path, const RegressionData& data, double sigma2) {
  if (!(sigma2 > 0.0 && std::isfinite(sigma2))) throw InputError("sigma2 must be positive");
  if (path.n != data.n() || path.p != data.p()) {
    throw InputError("path dimensions (" + std::to_string(path.n) + " x " + std::to_string(path.p) +
                     ") do not match data (" + std::to_string(data.n()) + " x " + std::to_string(data.p()) + ")");
  }
  CovTestSeries out;
  out.sigma2_used = sigma2;
  out.tail_lambda = path.tail_lambda;
  out.tail_source = path.truncated ? TailSource::next_knot : TailSource::path_end;

  const auto entries = path.entry_positions();
  const std::size_t m = entries.size();
  out.T.resize(m);
  const Vector& xty = data.xty();
  for (std::size_t k = 0; k < m; ++k) {
    const Knot& knot = path.knots[entries[k]];
    const bool last = k + 1 == m;
    const double next_lambda = last ? path.tail_lambda : path.knots[entries[k + 1]].lambda;
    const SparseCoef& next_coef = last ? path.tail_coef : path.knots[entries[k + 1]].coef;
    const double full = next_coef.dot(xty);
    const double restricted = detail::restricted_fit_inner(data, knot, next_lambda);
    out.T[k] = (full - restricted) / sigma2;
  }
  return out;
}

/// Closed form under orthonormal design: T_k = l_k (l_k - l_{k+1}) / sigma2,
/// with l_{m+1} = tail_lambda (0 by default).
inline CovTestSeries covtest_orthogonal(std::span<const double> knots, double sigma2, double tail_lambda = 0.0) {
  if (!(sigma2 > 0.0 && std::isfinite(sigma2))) throw InputError("sigma2 must be positive");
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    if (knots[k + 1] > knots[k]) {
      throw InputError("knots must be nonincreasing (position " + std::to_string(k + 1) + ")");
    }
  }
  if (!knots.empty() && tail_lambda > knots.back()) throw InputError("tail penalty exceeds the last knot");
  CovTestSeries out;
  out.sigma2_used = sigma2;
  out.tail_lambda = tail_lambda;
  out.T.resize(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const double next = k + 1 < knots.size() ? knots[k + 1] : tail_lambda;
    out.T[k] = knots[k] * (knots[k] - next) / sigma2;
  }
  return out;
}

/// q_k = exp(-sum_{j>=k} T_j) through one reverse cumulative sum.
inline QSeries q_statistics(const CovTestSeries& series) {
  QSeries out;
  out.from_negative_T = series.has_negative();
  out.q.resize(series.T.size());
  long double tail = 0.0L;
  for (std::size_t k = series.T.size(); k-- > 0;) {
    tail += static_cast<long double>(series.T[k]);
    const double q = static_cast<double>(std::exp(-tail));
    out.q[k] = std::clamp(q, 0.0, 1.0);
  }
  return out;
}

}  // namespace qvs
