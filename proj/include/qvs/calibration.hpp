#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qvs/error.hpp"
#include "qvs/inference.hpp"
#include "qvs/parallel.hpp"
#include "qvs/path_solver.hpp"
#include "qvs/random.hpp"
#include "qvs/simulate.hpp"

namespace qvs {

enum class VmMethod { uniform_oracle, null_path };

inline std::string to_string(VmMethod m) { return m == VmMethod::uniform_oracle ? "uniform-oracle" : "null-path"; }

inline VmMethod parse_vm_method(const std::string& s) {
  if (s == "uniform-oracle" || s == "uniform") return VmMethod::uniform_oracle;
  if (s == "null-path" || s == "path") return VmMethod::null_path;
  throw InputError("unknown calibration method '" + s + "' (expected null-path or uniform-oracle)");
}

/// Monte-Carlo bounding constant c_m for one problem shape.
struct CalibrationRecord {
  Index m = 0;
  Index n = 0;
  Index p = 0;
  std::string design = "identity";
  VmMethod method = VmMethod::null_path;
  double alpha_m = 0.0;
  double c_m = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;

  /// Tab-separated: m n p design method alpha_m c_m reps seed.
  std::string to_line() const {
    char a[40], c[40];
    std::snprintf(a, sizeof a, "%.17g", alpha_m);
    std::snprintf(c, sizeof c, "%.17g", c_m);
    std::ostringstream os;
    os << m << '\t' << n << '\t' << p << '\t' << design << '\t' << to_string(method) << '\t' << a << '\t' << c
       << '\t' << reps << '\t' << seed;
    return os.str();
  }

  static CalibrationRecord from_line(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> f;
    std::string field;
    while (std::getline(is, field, '\t')) f.push_back(field);
    if (f.size() != 9) throw InputError("calibration record needs 9 tab-separated fields: '" + line + "'");
    CalibrationRecord r;
    try {
      r.m = std::stoll(f[0]);
      r.n = std::stoll(f[1]);
      r.p = std::stoll(f[2]);
      r.design = f[3];
      r.method = parse_vm_method(f[4]);
      r.alpha_m = std::stod(f[5]);
      r.c_m = std::stod(f[6]);
      r.reps = std::stoull(f[7]);
      r.seed = std::stoull(f[8]);
    } catch (const InputError&) {
      throw;
    } catch (const std::exception&) {
      throw InputError("malformed calibration record: '" + line + "'");
    }
    return r;
  }

  bool same_key(Index n_, Index p_, const std::string& design_, VmMethod method_) const {
    return n == n_ && p == p_ && design == design_ && method == method_;
  }
};

/// 1 / sqrt(log m), natural log.
inline double alpha_m(Index m) {
  if (m < 2) throw InputError("alpha_m needs m >= 2");
  return 1.0 / std::sqrt(std::log(static_cast<double>(m)));
}

/// max_i (i/m - u_(i)) / sqrt(u_(i)(1 - u_(i))) over the sorted sample.
inline double vm_from_uniforms(std::span<const double> draws) {
  std::vector<double> u(draws.begin(), draws.end());
  std::sort(u.begin(), u.end());
  const double m = static_cast<double>(u.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = (static_cast<double>(i + 1) / m - u[i]) / std::sqrt(u[i] * (1.0 - u[i]));
    best = std::max(best, v);
  }
  return best;
}

/// max over 1 <= i <= floor(m/2) of (i/m - q_i) / sqrt(q_i (1 - q_i)).
/// Terms with q_i = 1 are -inf; an empty range gives -inf.
inline double vm_from_q(std::span<const double> q) {
  const std::size_t m = q.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= m / 2; ++i) {
    const double qi = q[i - 1];
    if (qi >= 1.0) continue;
    const double v = (static_cast<double>(i) / static_cast<double>(m) - qi) / std::sqrt(qi * (1.0 - qi));
    best = std::max(best, v);
  }
  return best;
}

inline double simulate_vm_uniform(Index m, Rng& rng) {
  if (m < 1) throw InputError("m must be positive");
  std::vector<double> u(static_cast<std::size_t>(m));
  for (auto& v : u) v = open_uniform(rng);
  return vm_from_uniforms(u);
}

/// V_m from one global-null instance: rows of X from N_p(0, Sigma),
/// y ~ N(0, I), path statistics with sigma^2 = 1.
inline double simulate_vm_path(Index n, Index p, const CovarianceSpec& design, Rng& rng) {
  if (n < 3 || p < 2) throw InputError("null-path simulation needs n >= 3 and p >= 2");
  const Matrix x = gen_design(n, p, design, rng);
  const Vector y = gen_response(x, Vector::Zero(p), 1.0, rng);
  const auto data = RegressionData::from_raw(x, y, 1.0);
  const auto path = fit_path(data);
  const auto q = q_statistics(covariance_test(path, data, 1.0));
  return vm_from_q(q.q);
}

/// Upper-alpha empirical quantile: ascending order statistic at rank
/// ceil((1 - alpha) N), clamped to [1, N].
inline double bounding_sequence(std::span<const double> samples, double alpha) {
  if (samples.size() < 100) {
    throw InputError("bounding sequence needs at least 100 samples, got " + std::to_string(samples.size()));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::int64_t>(std::ceil((1.0 - alpha) * n - 1e-9));
  rank = std::clamp<std::int64_t>(rank, 1, static_cast<std::int64_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

/// Calibration records on disk: one tab-separated line per
/// (n, p, design, method) in <dir>/calibration.tsv.
class CalibrationCache {
 public:
  explicit CalibrationCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path file() const { return dir_ / "calibration.tsv"; }

  std::vector<CalibrationRecord> load() const {
    std::vector<CalibrationRecord> out;
    std::ifstream in(file());
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      out.push_back(CalibrationRecord::from_line(line));
    }
    return out;
  }

  std::optional<CalibrationRecord> find(Index n, Index p, const std::string& design, VmMethod method) const {
    for (const auto& r : load()) {
      if (r.same_key(n, p, design, method)) return r;
    }
    return std::nullopt;
  }

  /// Insert or replace the record with the same key. Written to a temporary
  /// file and renamed into place.
  void store(const CalibrationRecord& rec) const {
    auto records = load();
    bool replaced = false;
    for (auto& r : records) {
      if (r.same_key(rec.n, rec.p, rec.design, rec.method)) {
        r = rec;
        replaced = true;
      }
    }
    if (!replaced) records.push_back(rec);
    std::filesystem::create_directories(dir_);
    const auto tmp = dir_ / ("calibration.tsv.tmp." + std::to_string(std::hash<std::string>{}(rec.to_line())));
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cannot write calibration cache in " + dir_.string());
      for (const auto& r : records) out << r.to_line() << '\n';
      if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, file());
  }

 private:
  std::filesystem::path dir_;
};

struct CalibrateOptions {
  std::size_t threads = 1;
  const CalibrationCache* cache = nullptr;
};

/// Simulate V_m reps times and take the upper alpha_m quantile, with
/// alpha_m = 1/sqrt(log m) clamped to 1 and m = min(n - 1, p).
inline CalibrationRecord calibrate(Index n, Index p, const CovarianceSpec& design, std::size_t reps, VmMethod method,
                                   std::uint64_t seed, const CalibrateOptions& opts = {}) {
  if (reps < 100) throw InputError("calibration needs at least 100 replications");
  const Index m = std::min(n - 1, p);
  if (m < 2) throw InputError("calibration needs min(n - 1, p) >= 2");
  const std::string label = design.label();
  if (opts.cache) {
    if (auto hit = opts.cache->find(n, p, label, method); hit && hit->reps == reps && hit->seed == seed) return *hit;
  }
  std::vector<double> samples(reps);
  parallel_for(reps, opts.threads, [&](std::size_t r) {
    Rng rng = derive_stream(seed, r);
    samples[r] = method == VmMethod::uniform_oracle ? simulate_vm_uniform(m, rng) : simulate_vm_path(n, p, design, rng);
  });
  CalibrationRecord rec;
  rec.m = m;
  rec.n = n;
  rec.p = p;
  rec.design = label;
  rec.method = method;
  rec.alpha_m = alpha_m(m);
  rec.c_m = bounding_sequence(samples, std::min(1.0, rec.alpha_m));
  rec.reps = reps;
  rec.seed = seed;
  if (!std::isfinite(rec.c_m)) throw NumericalError("calibrated bounding constant is not finite");
  // Round-trip through text so cached and fresh records are identical.
  rec = CalibrationRecord::from_line(rec.to_line());
  if (opts.cache) opts.cache->store(rec);
  return rec;
}

}  // namespace qvs
