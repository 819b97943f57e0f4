#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qvs/calibration.hpp"
#include "qvs/error.hpp"
#include "qvs/inference.hpp"
#include "qvs/parallel.hpp"
#include "qvs/path_solver.hpp"
#include "qvs/random.hpp"
#include "qvs/selectors.hpp"
#include "qvs/simulate.hpp"

namespace qvs {

/// Positions of the first noise entry and the last relevant entry.
struct GroundTruth {
  std::vector<Index> relevant;
  /// Number of leading relevant entries.
  std::size_t m0 = 0;
  /// Position (1-based) of the last relevant entry; 0 if none entered.
  std::size_t m1 = 0;
};

struct Metrics {
  double tpp = 0.0;
  double fdp = 0.0;
  double specificity = 1.0;
  double g_measure = 0.0;
  std::size_t relevant_on_path = 0;
  std::size_t noise_on_path = 0;
};

inline GroundTruth ground_truth_markers(const SolutionPath& path, const std::vector<Index>& relevant) {
  GroundTruth out;
  out.relevant = relevant;
  const std::set<Index> rel(relevant.begin(), relevant.end());
  const auto order = path.entry_order();
  bool leading = true;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const bool is_rel = rel.count(order[k]) > 0;
    if (is_rel) {
      out.m1 = k + 1;
      if (leading) out.m0 = k + 1;
    } else {
      leading = false;
    }
  }
  return out;
}

/// TPP against relevant variables that entered the path, FDP among the
/// selected, specificity against noise variables that entered the path.
inline Metrics score(const SelectionResult& selection, const GroundTruth& truth, const SolutionPath& path) {
  const std::set<Index> rel(truth.relevant.begin(), truth.relevant.end());
  std::set<Index> on_path;
  for (Index j : path.entry_order()) on_path.insert(j);
  Metrics out;
  for (Index j : on_path) (rel.count(j) ? out.relevant_on_path : out.noise_on_path)++;
  const std::set<Index> chosen(selection.selected.begin(), selection.selected.end());
  std::size_t tp = 0;
  std::size_t fp_on_path = 0;
  for (Index j : chosen) {
    if (rel.count(j)) {
      if (on_path.count(j)) ++tp;
    } else if (on_path.count(j)) {
      ++fp_on_path;
    }
  }
  const std::size_t fp = chosen.size() - std::count_if(chosen.begin(), chosen.end(), [&](Index j) { return rel.count(j) > 0; });
  out.tpp = out.relevant_on_path ? static_cast<double>(tp) / static_cast<double>(out.relevant_on_path) : 0.0;
  out.fdp = chosen.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(chosen.size());
  out.specificity = out.noise_on_path
                        ? static_cast<double>(out.noise_on_path - fp_on_path) / static_cast<double>(out.noise_on_path)
                        : 1.0;
  out.g_measure = std::sqrt(out.specificity * out.tpp);
  return out;
}

enum class Method { qvs, q_bon, q_fdr, bic, lcv };

inline std::string method_label(Method m) {
  switch (m) {
    case Method::qvs: return "QVS";
    case Method::q_bon: return "Q-BON";
    case Method::q_fdr: return "Q-FDR";
    case Method::bic: return "BIC";
    case Method::lcv: return "LCV";
  }
  return "?";
}

inline Method parse_method(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
  if (s == "qvs") return Method::qvs;
  if (s == "qbon") return Method::q_bon;
  if (s == "qfdr" || s == "tailstop") return Method::q_fdr;
  if (s == "bic") return Method::bic;
  if (s == "lcv" || s == "cv") return Method::lcv;
  throw InputError("unknown selection method '" + s + "'");
}

inline std::vector<Method> all_methods() { return {Method::qvs, Method::q_bon, Method::q_fdr, Method::bic, Method::lcv}; }

struct ScenarioConfig {
  Index n = 200;
  Index p = 2000;
  Index s = 10;
  double beta_value = 0.3;
  CovarianceSpec cov;
  double sigma = 1.0;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::vector<Method> methods = all_methods();
  double level = 0.05;
  std::size_t folds = 10;

  void validate() const {
    if (n < 3 || p < 2) throw InputError("scenario needs n >= 3 and p >= 2");
    if (s < 0 || s > p) throw InputError("scenario needs 0 <= s <= p");
    if (reps < 1) throw InputError("scenario needs reps >= 1");
    if (!(sigma > 0.0)) throw InputError("scenario needs sigma > 0");
    if (!(level > 0.0 && level < 1.0)) throw InputError("level must lie in (0, 1)");
    if (methods.empty()) throw InputError("scenario lists no methods");
  }
};

/// Everything recorded for one method in one replication.
struct ReplicationRow {
  std::size_t rep = 0;
  Method method = Method::qvs;
  std::size_t m = 0;
  std::size_t k_hat = 0;
  std::size_t m0 = 0;
  std::size_t m1 = 0;
  Metrics metrics;
};

struct Summary {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
    s.se = s.sd / std::sqrt(n);
  }
  return s;
}

struct MethodSummary {
  Method method = Method::qvs;
  Summary k_hat, tpp, fdp, g;
  double freq_ge_m0 = 0.0;
  double freq_le_m1 = 0.0;
};

struct ScenarioReport {
  ScenarioConfig config;
  CalibrationRecord calibration;
  std::vector<MethodSummary> methods;
  Summary m0, m1, path_length;
  /// Replication-major, methods in config order.
  std::vector<ReplicationRow> rows;
};

inline std::vector<ReplicationRow> run_replication(const ScenarioConfig& cfg, const CalibrationRecord& cal,
                                                   std::size_t rep) {
  Rng rng = derive_stream(cfg.seed, rep);
  const Matrix x = gen_design(cfg.n, cfg.p, cfg.cov, rng);
  const TrueModel truth = gen_truth(cfg.p, cfg.s, cfg.beta_value, rng);
  const Vector y = gen_response(x, truth.beta, cfg.sigma, rng);
  Rng cv_rng = derive_stream(cfg.seed ^ 0xC0FFEE5EEDULL, rep);

  const auto data = RegressionData::from_raw(x, y, cfg.sigma * cfg.sigma);
  const auto path = fit_path(data);
  const auto q = q_statistics(covariance_test(path, data, cfg.sigma * cfg.sigma));
  const auto markers = ground_truth_markers(path, truth.relevant);

  std::vector<ReplicationRow> rows;
  for (Method method : cfg.methods) {
    SelectionResult sel;
    switch (method) {
      case Method::qvs: sel = qvs_select(q, cal.c_m, path); break;
      case Method::q_bon: sel = q_bon(q, cfg.level, path); break;
      case Method::q_fdr: sel = q_fdr(q, cfg.level, path); break;
      case Method::bic: sel = bic_select(path, data); break;
      case Method::lcv:
        sel = path.empty() ? SelectionResult{"LCV", 0, {}, {}}
                           : cv_select(data, path, std::min<std::size_t>(cfg.folds, static_cast<std::size_t>(cfg.n)), cv_rng);
        break;
    }
    ReplicationRow row;
    row.rep = rep;
    row.method = method;
    row.m = path.length();
    row.k_hat = sel.k_hat;
    row.m0 = markers.m0;
    row.m1 = markers.m1;
    row.metrics = score(sel, markers, path);
    rows.push_back(row);
  }
  return rows;
}

/// Run cfg.reps seeded replications. Replication r draws from
/// derive_stream(seed, r), so results do not depend on `threads`.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg, const CalibrationRecord& cal, std::size_t threads = 1) {
  cfg.validate();
  if (cal.n != cfg.n || cal.p != cfg.p) {
    throw InputError("calibration shape (" + std::to_string(cal.n) + ", " + std::to_string(cal.p) +
                     ") does not match scenario (" + std::to_string(cfg.n) + ", " + std::to_string(cfg.p) + ")");
  }
  std::vector<std::vector<ReplicationRow>> per_rep(cfg.reps);
  parallel_for(cfg.reps, threads, [&](std::size_t r) { per_rep[r] = run_replication(cfg, cal, r); });

  ScenarioReport rep;
  rep.config = cfg;
  rep.calibration = cal;
  std::vector<double> m0s, m1s, ms;
  for (const auto& rows : per_rep) {
    m0s.push_back(static_cast<double>(rows.front().m0));
    m1s.push_back(static_cast<double>(rows.front().m1));
    ms.push_back(static_cast<double>(rows.front().m));
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  rep.m0 = summarize(m0s);
  rep.m1 = summarize(m1s);
  rep.path_length = summarize(ms);
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    std::vector<double> k, tpp, fdp, g;
    double ge = 0.0, le = 0.0;
    for (const auto& rows : per_rep) {
      const auto& row = rows[mi];
      k.push_back(static_cast<double>(row.k_hat));
      tpp.push_back(row.metrics.tpp);
      fdp.push_back(row.metrics.fdp);
      g.push_back(row.metrics.g_measure);
      ge += row.k_hat >= row.m0 ? 1.0 : 0.0;
      le += row.k_hat <= row.m1 ? 1.0 : 0.0;
    }
    MethodSummary ms_;
    ms_.method = cfg.methods[mi];
    ms_.k_hat = summarize(k);
    ms_.tpp = summarize(tpp);
    ms_.fdp = summarize(fdp);
    ms_.g = summarize(g);
    ms_.freq_ge_m0 = ge / static_cast<double>(cfg.reps);
    ms_.freq_le_m1 = le / static_cast<double>(cfg.reps);
    rep.methods.push_back(ms_);
  }
  return rep;
}

}  // namespace qvs
