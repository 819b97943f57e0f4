#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qvs/error.hpp"
#include "qvs/inference.hpp"
#include "qvs/path_solver.hpp"
#include "qvs/random.hpp"
#include "qvs/regression_data.hpp"

namespace qvs {

/// Cut-off chosen by one selection rule.
struct SelectionResult {
  std::string method;
  std::size_t k_hat = 0;
  /// Variables at the first k_hat entry events (for LCV: the support at the
  /// chosen penalty), in path order.
  std::vector<Index> selected;
  std::vector<double> objective_trace;
};

namespace detail {

/// Distinct variables among the first k entry events.
inline std::vector<Index> first_entries(const std::vector<Index>& order, std::size_t k) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    if (std::find(out.begin(), out.end(), order[i]) == out.end()) out.push_back(order[i]);
  }
  return out;
}

inline void check_unit_interval(const QSeries& q) {
  for (std::size_t k = 0; k < q.q.size(); ++k) {
    if (!(q.q[k] >= 0.0 && q.q[k] <= 1.0)) {
      throw InputError("q statistic at position " + std::to_string(k + 1) + " lies outside [0, 1]");
    }
  }
}

}  // namespace detail

/// QVS cut-off: k_hat = max(0, floor(m * M)) with
/// M = max_{1 <= k <= m/2} { k/m - q_k - c_m sqrt(q_k (1 - q_k)) }.
inline SelectionResult qvs_select(const QSeries& q, double c_m) {
  if (!std::isfinite(c_m)) throw InputError("bounding constant c_m must be finite");
  detail::check_unit_interval(q);
  SelectionResult out;
  out.method = "QVS";
  const std::size_t m = q.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= m / 2; ++k) {
    const double qk = q.q[k - 1];
    const double term = static_cast<double>(k) / static_cast<double>(m) - qk - c_m * std::sqrt(qk * (1.0 - qk));
    out.objective_trace.push_back(term);
    best = std::max(best, term);
  }
  if (std::isfinite(best)) {
    const double cut = std::floor(static_cast<double>(m) * best);
    out.k_hat = cut > 0.0 ? std::min(static_cast<std::size_t>(cut), m) : 0;
  }
  return out;
}

inline SelectionResult qvs_select(const QSeries& q, double c_m, const SolutionPath& path) {
  auto out = qvs_select(q, c_m);
  out.selected = detail::first_entries(path.entry_order(), out.k_hat);
  return out;
}

/// Largest k with q_k <= level / m (Bonferroni on the Q statistics).
inline SelectionResult q_bon(const QSeries& q, double level = 0.05) {
  SelectionResult out;
  out.method = "Q-BON";
  const double m = static_cast<double>(q.size());
  for (std::size_t k = q.size(); k-- > 0;) {
    if (q.q[k] <= level / m) {
      out.k_hat = k + 1;
      break;
    }
  }
  return out;
}

/// Largest k with q_k <= level k / m (TailStop).
inline SelectionResult q_fdr(const QSeries& q, double level = 0.05) {
  SelectionResult out;
  out.method = "Q-FDR";
  const double m = static_cast<double>(q.size());
  for (std::size_t k = q.size(); k-- > 0;) {
    if (q.q[k] <= level * static_cast<double>(k + 1) / m) {
      out.k_hat = k + 1;
      break;
    }
  }
  return out;
}

inline SelectionResult q_bon(const QSeries& q, double level, const SolutionPath& path) {
  auto out = q_bon(q, level);
  out.selected = detail::first_entries(path.entry_order(), out.k_hat);
  return out;
}

inline SelectionResult q_fdr(const QSeries& q, double level, const SolutionPath& path) {
  auto out = q_fdr(q, level);
  out.selected = detail::first_entries(path.entry_order(), out.k_hat);
  return out;
}

/// Lasso + BIC over path positions k = 0..m. Position k uses the path
/// solution at the (k+1)-th entry knot (the tail for k = m):
///   BIC_k = n log(RSS_k / n) + df_k log n,  df_k = |support|.
/// Only fits with df <= n/2 are scored; near saturation the Gaussian
/// likelihood term diverges. Ties go to the smaller k.
inline SelectionResult bic_select(const SolutionPath& path, const RegressionData& data) {
  SelectionResult out;
  out.method = "BIC";
  const auto entries = path.entry_positions();
  const std::size_t m = entries.size();
  if (m == 0) return out;
  const double n = static_cast<double>(data.n());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= m; ++k) {
    const SparseCoef& coef = k == m ? path.tail_coef : path.knots[entries[k]].coef;
    const double df = static_cast<double>(coef.size());
    double bic = std::numeric_limits<double>::infinity();
    if (df <= n / 2.0) {
      Vector fit = Vector::Zero(data.n());
      for (std::size_t i = 0; i < coef.index.size(); ++i) fit.noalias() += coef.value[i] * data.x().col(coef.index[i]);
      const double rss = (data.y() - fit).squaredNorm();
      if (rss > 0.0) bic = n * std::log(rss / n) + df * std::log(n);
    }
    out.objective_trace.push_back(bic);
    if (bic < best) {
      best = bic;
      out.k_hat = k;
    }
  }
  out.selected = detail::first_entries(path.entry_order(), out.k_hat);
  return out;
}

/// Lasso with K-fold cross-validation over the full-data entry knots
/// (minimum held-out error; ties go to the larger penalty).
inline SelectionResult cv_select(const RegressionData& data, const SolutionPath& full_path, std::size_t folds,
                                 Rng& rng) {
  const auto n = static_cast<std::size_t>(data.n());
  if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
  if (folds > n) throw InputError("folds (" + std::to_string(folds) + ") exceed observations (" + std::to_string(n) + ")");
  SelectionResult out;
  out.method = "LCV";
  std::vector<double> grid = full_path.entry_lambdas();
  if (grid.empty()) return out;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  std::vector<double> err(grid.size(), 0.0);
  const double floor = grid.back();
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Index>(i));
    if (train.size() < 2) throw InputError("training fold too small");
    Matrix xt(static_cast<Index>(train.size()), data.p());
    Vector yt(static_cast<Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(static_cast<Index>(r)) = data.x().row(train[r]);
      yt[static_cast<Index>(r)] = data.y()[train[r]];
    }
    const Eigen::RowVectorXd xbar = xt.colwise().mean();
    const double ybar = yt.mean();
    xt.rowwise() -= xbar;
    yt.array() -= ybar;
    PathOptions opts;
    opts.lambda_floor = floor;
    const auto cap = static_cast<std::size_t>(std::min<Index>(xt.rows() - 1, xt.cols()));
    const SolutionPath train_path = detail::trace_path(xt, yt, std::max<std::size_t>(cap, 1), opts);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const Vector beta = train_path.coef_at(grid[g]);
      for (Index i : test) {
        const double pred = ybar + (data.x().row(i) - xbar).dot(beta);
        const double r = data.y()[i] - pred;
        err[g] += r * r;
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    err[g] /= static_cast<double>(n);
    if (err[g] < err[best]) best = g;
  }
  out.objective_trace = err;

  const Vector beta = full_path.coef_at(grid[best]);
  for (Index j : full_path.entry_order()) {
    if (beta[j] != 0.0 && std::find(out.selected.begin(), out.selected.end(), j) == out.selected.end()) {
      out.selected.push_back(j);
    }
  }
  out.k_hat = out.selected.size();
  return out;
}

inline SelectionResult cv_select(const RegressionData& data, std::size_t folds, Rng& rng) {
  return cv_select(data, fit_path(data), folds, rng);
}

}  // namespace qvs
