#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvs/error.hpp"
#include "qvs/regression_data.hpp"

namespace qvs {

enum class EventKind { entry, drop };

namespace detail {

struct HomotopyEvent {
  EventKind kind;
  Index variable;
  double lambda;
};

/// LARS with the Lasso modification for 1/2 ||y - X b||^2 + lambda ||b||_1.
///
/// The active Gram matrix is kept as a Cholesky factor that grows by one
/// row per entry. Drops refactor from scratch.
class LassoHomotopy {
 public:
  LassoHomotopy(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y)
      : x_(x), y_(y), beta_(Vector::Zero(x.cols())), corr_(x.transpose() * y) {}

  /// beta = 0; lambda = max |x_j' y|.
  void start_from_zero() {
    beta_.setZero();
    corr_ = x_.transpose() * y_;
    active_.clear();
    signs_.clear();
    chol_.resize(0, 0);
    lambda_ = corr_.size() > 0 ? corr_.cwiseAbs().maxCoeff() : 0.0;
    scale_ = lambda_;
    pending_first_ = lambda_ > 0.0;
    just_dropped_ = -1;
    just_entered_ = -1;
  }

  /// Resume from a point that satisfies the optimality conditions at lambda.
  void start_from(double lambda, const Vector& beta) {
    beta_ = beta;
    corr_ = x_.transpose() * (y_ - x_ * beta_);
    lambda_ = lambda;
    scale_ = std::max(lambda, 1e-300);
    active_.clear();
    signs_.clear();
    for (Index j = 0; j < beta_.size(); ++j) {
      if (beta_[j] != 0.0) {
        active_.push_back(j);
        signs_.push_back(beta_[j] > 0.0 ? 1.0 : -1.0);
      }
    }
    refactor();
    pending_first_ = false;
    just_dropped_ = -1;
    just_entered_ = -1;
  }

  /// Move down the path to the next event. Returns nullopt once lambda has
  /// reached max(floor, 0) without an intervening event; the state is then
  /// the solution at that penalty.
  std::optional<HomotopyEvent> advance(double floor) {
    floor = std::max(floor, 0.0);
    segment_active_ = active_;
    segment_dir_.resize(0);

    if (pending_first_) {
      pending_first_ = false;
      if (lambda_ <= floor) {
        lambda_ = floor;
        return std::nullopt;
      }
      Index best = 0;
      double best_abs = -1.0;
      for (Index j = 0; j < corr_.size(); ++j) {
        if (std::abs(corr_[j]) > best_abs) {
          best_abs = std::abs(corr_[j]);
          best = j;
        }
      }
      add_variable(best, corr_[best] >= 0.0 ? 1.0 : -1.0);
      ++events_;
      return HomotopyEvent{EventKind::entry, best, lambda_};
    }
    if (lambda_ <= floor) {
      lambda_ = floor;
      return std::nullopt;
    }

    const auto k = static_cast<Index>(active_.size());
    Vector w(k);
    Vector a;
    if (k > 0) {
      Vector s(k);
      for (Index i = 0; i < k; ++i) s[i] = signs_[i];
      const auto lower = chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>();
      w = lower.solve(s);
      w = lower.transpose().solve(w);
      Vector u = Vector::Zero(x_.rows());
      for (Index i = 0; i < k; ++i) u.noalias() += w[i] * x_.col(active_[i]);
      a = x_.transpose() * u;
    } else {
      a = Vector::Zero(corr_.size());
    }
    segment_dir_ = w;

    const double to_floor = lambda_ - floor;
    const double eps = 1e-13 * scale_;
    double best = to_floor;
    EventKind kind = EventKind::entry;
    Index var = -1;
    double entry_sign = 0.0;

    std::vector<char> is_active(static_cast<std::size_t>(corr_.size()), 0);
    for (Index j : active_) is_active[static_cast<std::size_t>(j)] = 1;

    for (Index j = 0; j < corr_.size(); ++j) {
      if (is_active[static_cast<std::size_t>(j)] || j == just_dropped_) continue;
      const double c = corr_[j];
      const double aj = a[j];
      if (1.0 - aj > 1e-14) {
        const double g = (lambda_ - c) / (1.0 - aj);
        if (g > eps && g < best) {
          best = g;
          var = j;
          entry_sign = 1.0;
        }
      }
      if (1.0 + aj > 1e-14) {
        const double g = (lambda_ + c) / (1.0 + aj);
        if (g > eps && g < best) {
          best = g;
          var = j;
          entry_sign = -1.0;
        }
      }
    }
    Index drop_pos = -1;
    for (Index i = 0; i < k; ++i) {
      const Index j = active_[i];
      if (j == just_entered_ || w[i] == 0.0) continue;
      const double g = -beta_[j] / w[i];
      if (g > eps && g < best) {
        best = g;
        kind = EventKind::drop;
        var = j;
        drop_pos = i;
      }
    }
    // A full-rank fit closes the path at lambda = 0; remaining entry
    // candidates then coincide with the end point up to rounding.
    if (var >= 0 && kind == EventKind::entry && floor == 0.0 && best >= to_floor * (1.0 - 1e-9)) {
      var = -1;
      best = to_floor;
    }

    for (Index i = 0; i < k; ++i) beta_[active_[i]] += best * w[i];
    corr_.noalias() -= best * a;
    just_dropped_ = -1;
    just_entered_ = -1;

    if (var < 0) {
      lambda_ = floor;
      return std::nullopt;
    }
    lambda_ -= best;
    if (kind == EventKind::entry) {
      corr_[var] = entry_sign * lambda_;
      add_variable(var, entry_sign);
    } else {
      beta_[var] = 0.0;
      active_.erase(active_.begin() + drop_pos);
      signs_.erase(signs_.begin() + drop_pos);
      refactor();
      just_dropped_ = var;
    }
    ++events_;
    return HomotopyEvent{kind, var, lambda_};
  }

  double lambda() const { return lambda_; }
  const Vector& beta() const { return beta_; }
  const std::vector<Index>& active() const { return active_; }

  /// Active set and coefficient direction (d beta / d(-lambda)) of the last
  /// segment traversed by advance().
  const std::vector<Index>& segment_active() const { return segment_active_; }
  const Vector& segment_direction() const { return segment_dir_; }

  std::size_t events() const { return events_; }

 private:
  void add_variable(Index j, double sign) {
    const auto k = static_cast<Index>(active_.size());
    Vector b(k);
    for (Index i = 0; i < k; ++i) b[i] = x_.col(active_[i]).dot(x_.col(j));
    Vector l = k > 0 ? Vector(chol_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(b)) : Vector();
    const double d2 = x_.col(j).squaredNorm() - (k > 0 ? l.squaredNorm() : 0.0);
    if (!(d2 > 1e-12)) {
      throw NumericalError("singular active Gram matrix at step " + std::to_string(events_ + 1) +
                           " (variable " + std::to_string(j) + ")");
    }
    Matrix grown = Matrix::Zero(k + 1, k + 1);
    if (k > 0) {
      grown.topLeftCorner(k, k) = chol_.topLeftCorner(k, k);
      grown.block(k, 0, 1, k) = l.transpose();
    }
    grown(k, k) = std::sqrt(d2);
    chol_ = std::move(grown);
    active_.push_back(j);
    signs_.push_back(sign);
    just_entered_ = j;
  }

  void refactor() {
    const auto k = static_cast<Index>(active_.size());
    Matrix gram(k, k);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c <= r; ++c) {
        gram(r, c) = x_.col(active_[r]).dot(x_.col(active_[c]));
        gram(c, r) = gram(r, c);
      }
    }
    chol_ = Matrix::Zero(k, k);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c <= r; ++c) {
        double v = gram(r, c);
        for (Index t = 0; t < c; ++t) v -= chol_(r, t) * chol_(c, t);
        if (r == c) {
          if (!(v > 1e-12)) {
            throw NumericalError("singular active Gram matrix at step " + std::to_string(events_ + 1));
          }
          chol_(r, r) = std::sqrt(v);
        } else {
          chol_(r, c) = v / chol_(c, c);
        }
      }
    }
  }

  Eigen::Ref<const Matrix> x_;
  Eigen::Ref<const Vector> y_;
  Vector beta_;
  Vector corr_;
  std::vector<Index> active_;
  std::vector<double> signs_;
  Matrix chol_;
  double lambda_ = 0.0;
  double scale_ = 1.0;
  bool pending_first_ = false;
  Index just_dropped_ = -1;
  Index just_entered_ = -1;
  std::vector<Index> segment_active_;
  Vector segment_dir_;
  std::size_t events_ = 0;
};

}  // namespace detail
}  // namespace qvs
