#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qvs/detail/homotopy.hpp"
#include "qvs/error.hpp"
#include "qvs/regression_data.hpp"

namespace qvs {

/// One knot of the Lasso path: the penalty at which the active set changes.
struct Knot {
  double lambda = 0.0;
  EventKind kind = EventKind::entry;
  Index variable = -1;
  /// Active set immediately before this knot, in order of entry.
  std::vector<Index> active_before;
  /// beta-hat(lambda) at the knot.
  SparseCoef coef;
  /// d beta / d(-lambda) on the segment ending at this knot, aligned with
  /// active_before. Empty for the first knot.
  std::vector<double> direction;
};

/// Piecewise-linear Lasso solution path from lambda_max downwards.
///
/// Only entry knots carry a path position: length() counts entries, and
/// entry(k) is the k-th entry knot (0-based). Drop knots stay in knots.
struct SolutionPath {
  Index n = 0;
  Index p = 0;
  std::vector<Knot> knots;
  /// Penalty of the first event past the retained knots, or 0 when the path
  /// ran to lambda = 0.
  double tail_lambda = 0.0;
  /// beta-hat(tail_lambda).
  SparseCoef tail_coef;
  /// True when the path was cut by the entry cap rather than by lambda = 0.
  bool truncated = false;

  std::vector<std::size_t> entry_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (knots[i].kind == EventKind::entry) out.push_back(i);
    }
    return out;
  }

  std::size_t length() const {
    return static_cast<std::size_t>(
        std::count_if(knots.begin(), knots.end(), [](const Knot& k) { return k.kind == EventKind::entry; }));
  }

  bool empty() const { return knots.empty(); }

  /// Variables in order of their entry events (re-entries repeat).
  std::vector<Index> entry_order() const {
    std::vector<Index> out;
    for (const auto& k : knots) {
      if (k.kind == EventKind::entry) out.push_back(k.variable);
    }
    return out;
  }

  /// Entry-knot penalties lambda_1 >= ... >= lambda_m.
  std::vector<double> entry_lambdas() const {
    std::vector<double> out;
    for (const auto& k : knots) {
      if (k.kind == EventKind::entry) out.push_back(k.lambda);
    }
    return out;
  }

  /// Path solution at any penalty by linear interpolation between knots.
  /// Penalties below the last computed point return the tail solution.
  Vector coef_at(double lambda) const {
    if (knots.empty() || lambda >= knots.front().lambda) {
      return knots.empty() ? tail_coef.dense(p) : knots.front().coef.dense(p);
    }
    for (std::size_t i = 0; i + 1 <= knots.size(); ++i) {
      const double hi = knots[i].lambda;
      const double lo = i + 1 < knots.size() ? knots[i + 1].lambda : tail_lambda;
      const SparseCoef& lo_coef = i + 1 < knots.size() ? knots[i + 1].coef : tail_coef;
      if (lambda >= lo) {
        const Vector a = knots[i].coef.dense(p);
        const Vector b = lo_coef.dense(p);
        if (hi == lo) return b;
        const double t = (hi - lambda) / (hi - lo);
        return a + t * (b - a);
      }
    }
    return tail_coef.dense(p);
  }
};

struct PathOptions {
  /// Stop once lambda reaches this value.
  double lambda_floor = 0.0;
  /// Guard against cycling.
  std::size_t max_events = 0;
};

namespace detail {

inline SolutionPath trace_path(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                               std::size_t max_entries, const PathOptions& opts = {}) {
  SolutionPath path;
  path.n = x.rows();
  path.p = x.cols();
  LassoHomotopy engine(x, y);
  engine.start_from_zero();
  const std::size_t event_cap =
      opts.max_events > 0 ? opts.max_events
                          : 20 * static_cast<std::size_t>(std::min(x.rows(), x.cols())) + 100;
  std::size_t entries = 0;
  while (true) {
    auto event = engine.advance(opts.lambda_floor);
    if (!event) {
      path.tail_lambda = engine.lambda();
      path.tail_coef = SparseCoef::from_dense(engine.beta());
      path.truncated = false;
      break;
    }
    if (event->kind == EventKind::entry && entries == max_entries) {
      path.tail_lambda = event->lambda;
      path.tail_coef = SparseCoef::from_dense(engine.beta());
      path.truncated = true;
      break;
    }
    Knot knot;
    knot.lambda = event->lambda;
    knot.kind = event->kind;
    knot.variable = event->variable;
    knot.active_before = engine.segment_active();
    knot.coef = SparseCoef::from_dense(engine.beta());
    const Vector& dir = engine.segment_direction();
    knot.direction.assign(dir.data(), dir.data() + dir.size());
    path.knots.push_back(std::move(knot));
    if (event->kind == EventKind::entry) ++entries;
    if (path.knots.size() > event_cap) {
      throw NumericalError("path exceeded " + std::to_string(event_cap) + " events without terminating");
    }
  }
  return path;
}

}  // namespace detail

/// Lasso solution path by LARS with the Lasso modification.
///
/// Stops after max_steps entry events (the next entry is kept as the tail)
/// or when lambda reaches 0. Throws NumericalError if the active Gram matrix
/// becomes singular.
inline SolutionPath fit_path(const RegressionData& data, Index max_steps) {
  if (max_steps < 1) throw InputError("max_steps must be positive");
  if (max_steps > data.max_path_length()) {
    throw InputError("max_steps " + std::to_string(max_steps) + " exceeds min(n - 1, p) = " +
                     std::to_string(data.max_path_length()));
  }
  return detail::trace_path(data.x(), data.y(), static_cast<std::size_t>(max_steps));
}

inline SolutionPath fit_path(const RegressionData& data) { return fit_path(data, data.max_path_length()); }

/// Lasso solution at a single penalty, optionally restricted to a column
/// subset. Coefficients outside the restriction are zero.
inline CoefficientVector lasso_at(const RegressionData& data, const std::optional<std::vector<Index>>& restrict,
                                  double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  const Index p = data.p();
  if (restrict && restrict->empty()) return CoefficientVector(Vector::Zero(p), lambda);

  auto solve = [&](const Eigen::Ref<const Matrix>& x) {
    detail::LassoHomotopy engine(x, data.y());
    engine.start_from_zero();
    const std::size_t cap = 20 * static_cast<std::size_t>(std::min(x.rows(), x.cols())) + 100;
    for (std::size_t i = 0; engine.advance(lambda); ++i) {
      if (i > cap) throw NumericalError("lasso homotopy did not terminate");
    }
    return Vector(engine.beta());
  };

  if (!restrict) return CoefficientVector(solve(data.x()), lambda);

  std::vector<Index> cols = *restrict;
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  Matrix sub(data.n(), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < 0 || cols[i] >= p) throw InputError("restriction index " + std::to_string(cols[i]) + " out of range");
    sub.col(static_cast<Index>(i)) = data.x().col(cols[i]);
  }
  const Vector local = solve(sub);
  Vector beta = Vector::Zero(p);
  for (std::size_t i = 0; i < cols.size(); ++i) beta[cols[i]] = local[static_cast<Index>(i)];
  return CoefficientVector(std::move(beta), lambda);
}

inline CoefficientVector lasso_at(const RegressionData& data, double lambda) {
  return lasso_at(data, std::nullopt, lambda);
}

/// Largest violation of the Lasso subgradient conditions at coef.
inline double kkt_residual(const RegressionData& data, const CoefficientVector& coef) {
  const Vector grad = data.x().transpose() * (data.y() - data.x() * coef.beta);
  double worst = 0.0;
  for (Index j = 0; j < grad.size(); ++j) {
    const double b = coef.beta[j];
    const double v = b != 0.0 ? std::abs(grad[j] - coef.lambda * (b > 0.0 ? 1.0 : -1.0))
                              : std::max(0.0, std::abs(grad[j]) - coef.lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

/// The snapshot stored at knot i as a dense coefficient vector.
inline CoefficientVector knot_coefficients(const SolutionPath& path, std::size_t i) {
  return CoefficientVector(path.knots.at(i).coef.dense(path.p), path.knots.at(i).lambda);
}

}  // namespace qvs
