#pragma once

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls into the path solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvs/random.hpp"
#include "qvs/regression_data.hpp"

namespace qvs::oracle {

/// n x p design with orthonormal columns (p <= n).
inline Matrix orthonormal_design(Index n, Index p, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix g(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = z(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(n, p);
}

inline Vector normal_vector(Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Cyclic coordinate descent for 1/2 ||y - X b||^2 + lambda ||b||_1 with
/// unit-norm columns.
inline Vector cd_lasso(const Matrix& x, const Vector& y, double lambda, double tol = 1e-13,
                       int max_sweeps = 200000) {
  const Index p = x.cols();
  Vector b = Vector::Zero(p);
  Vector r = y;
  Vector sq(p);
  for (Index j = 0; j < p; ++j) sq[j] = x.col(j).squaredNorm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double old = b[j];
      const double z = x.col(j).dot(r) + sq[j] * old;
      const double nb = soft_threshold(z, lambda) / sq[j];
      if (nb != old) {
        r -= (nb - old) * x.col(j);
        b[j] = nb;
        change = std::max(change, std::abs(nb - old));
      }
    }
    if (change < tol) break;
  }
  return b;
}

inline double lasso_objective(const Matrix& x, const Vector& y, const Vector& b, double lambda) {
  return 0.5 * (y - x * b).squaredNorm() + lambda * b.lpNorm<1>();
}

/// Exact Lasso minimizer over the columns in `cols` by enumerating every
/// support and sign pattern. For small problems only.
inline Vector brute_force_lasso(const Matrix& x, const Vector& y, double lambda, const std::vector<Index>& cols) {
  const std::size_t k = cols.size();
  Vector best = Vector::Zero(x.cols());
  double best_obj = lasso_objective(x, y, best, lambda);
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<Index> s;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) s.push_back(cols[i]);
    Matrix xs(x.rows(), static_cast<Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) xs.col(static_cast<Index>(i)) = x.col(s[i]);
    const Matrix gram = xs.transpose() * xs;
    Eigen::FullPivLU<Matrix> lu(gram);
    if (lu.rank() < gram.rows()) continue;
    for (std::uint32_t sg = 0; sg < (1u << s.size()); ++sg) {
      Vector signs(static_cast<Index>(s.size()));
      for (std::size_t i = 0; i < s.size(); ++i) signs[static_cast<Index>(i)] = (sg & (1u << i)) ? -1.0 : 1.0;
      const Vector bs = lu.solve(xs.transpose() * y - lambda * signs);
      bool consistent = true;
      for (Index i = 0; i < bs.size(); ++i) consistent = consistent && bs[i] * signs[i] > 0.0;
      if (!consistent) continue;
      Vector b = Vector::Zero(x.cols());
      for (std::size_t i = 0; i < s.size(); ++i) b[s[i]] = bs[static_cast<Index>(i)];
      const double obj = lasso_objective(x, y, b, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best = b;
      }
    }
  }
  return best;
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value with the Stephens small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  if (t < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
    sum += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("qvs-test-" + tag + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_csv(const std::filesystem::path& path, const Matrix& m, bool header = false) {
  std::ofstream out(path);
  out.precision(17);
  if (header) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "v" << j + 1;
    out << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace qvs::oracle
