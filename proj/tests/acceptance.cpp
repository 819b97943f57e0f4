// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qvs/cli.hpp"
#include "qvs/experiment.hpp"
#include "qvs/scenario.hpp"
#include "support.hpp"

using namespace qvs;

namespace {

int failures = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const std::string& id, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "qvs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Summary row of `method` in the scenario table, plus the marker means.
struct ScenarioRow {
  double k_mean = 0, k_se = 0, fdp = 0, ge_m0 = 0, le_m1 = 0, m0 = 0, m1 = 0;
};

ScenarioRow parse_scenario(const std::string& tsv, const std::string& method) {
  ScenarioRow row;
  std::istringstream in(tsv);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# markers", 0) == 0) {
      std::sscanf(line.c_str(), "# markers m0_mean=%lf m0_sd=%*s m1_mean=%lf", &row.m0, &row.m1);
    }
  }
  std::istringstream again(tsv);
  const auto tables = io::read_tsv_tables(again);
  for (const auto& t : tables) {
    const auto mcol = t.column("method");
    if (!mcol || !t.column("k_hat_mean")) continue;
    for (const auto& r : t.rows) {
      if (r[*mcol] != method) continue;
      row.k_mean = std::stod(r[*t.column("k_hat_mean")]);
      row.k_se = std::stod(r[*t.column("k_hat_se")]);
      row.fdp = std::stod(r[*t.column("fdp_mean")]);
      row.ge_m0 = std::stod(r[*t.column("freq_ge_m0")]);
      row.le_m1 = std::stod(r[*t.column("freq_le_m1")]);
    }
  }
  return row;
}

// 1. Orthogonal closed form.
void criterion1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = derive_stream(1000 + seed, 0);
    const Index n = 100, p = 100;
    const Matrix x = oracle::orthonormal_design(n, p, rng);
    const auto truth = gen_truth(p, 5, 2.0, rng);
    const RegressionData d(x, x * truth.beta + oracle::normal_vector(n, rng));
    const auto path = fit_path(d);
    const auto T = covariance_test(path, d, 1.0);
    const auto ref = covtest_orthogonal(path.entry_lambdas(), 1.0, path.tail_lambda);
    for (std::size_t k = 0; k < T.size(); ++k) {
      worst = std::max(worst, std::abs(T.T[k] - ref.T[k]) / std::max(std::abs(ref.T[k]), 1e-300));
    }
  }
  const double secs = seconds_since(t0);
  report("criterion 1 (orthogonal closed form)", worst <= 1e-6 && secs < 10.0,
         fmt("max relative difference %.3g (<= 1e-6), %.1f s (< 10 s)", worst, secs));
}

// 2. Path optimality against KKT and an independent coordinate-descent solver.
void criterion2() {
  const auto t0 = Clock::now();
  double worst_kkt = 0.0, worst_cd = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = derive_stream(2000 + seed, 0);
    const Matrix x = gen_design(100, 200, CovarianceSpec::ar1(0.5), rng);
    const auto truth = gen_truth(200, 10, 1.0, rng);
    const auto d = RegressionData::from_raw(x, gen_response(x, truth.beta, 1.0, rng));
    const auto path = fit_path(d);
    for (std::size_t i = 0; i < path.knots.size(); ++i) {
      worst_kkt = std::max(worst_kkt, kkt_residual(d, knot_coefficients(path, i)));
    }
    const double lmax = d.xty().cwiseAbs().maxCoeff();
    for (double frac : {0.5, 0.2, 0.05}) {
      const double lam = frac * lmax;
      const Vector ref = oracle::cd_lasso(d.x(), d.y(), lam);
      worst_cd = std::max(worst_cd, (lasso_at(d, lam).beta - ref).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(t0);
  report("criterion 2 (path optimality)", worst_kkt <= 1e-6 && worst_cd <= 1e-4 && secs < 60.0,
         fmt("max KKT residual %.3g (<= 1e-6), max |lasso_at - CD| %.3g (<= 1e-4), %.1f s (< 60 s)", worst_kkt,
             worst_cd, secs));
}

// 3 and 4. Null distributions of T_1 and q_1 under orthonormal design.
void criteria3and4() {
  const auto t0 = Clock::now();
  const int reps = 500;
  const Index n = 100, p = 100;
  std::vector<double> t1(reps), q1(reps);
  std::vector<std::size_t> ms(reps);
  for (int r = 0; r < reps; ++r) {
    Rng rng = derive_stream(3000, static_cast<std::uint64_t>(r));
    const Matrix x = oracle::orthonormal_design(n, p, rng);
    const RegressionData d(x, oracle::normal_vector(n, rng));
    const auto path = fit_path(d);
    const auto T = covariance_test(path, d, 1.0);
    const auto q = q_statistics(T);
    t1[r] = T.T.at(0);
    q1[r] = q.q.at(0);
    ms[r] = q.size();
  }
  const double secs = seconds_since(t0);
  const double d_t = oracle::ks_statistic(t1, [](double v) { return v <= 0 ? 0.0 : 1.0 - std::exp(-v); });
  const double p_t = oracle::ks_pvalue(d_t, t1.size());
  report("criterion 3 (T_1 ~ Exp(1) under the null)", p_t >= 0.01 && secs < 120.0,
         fmt("KS D = %.4f, p = %.4f (>= 0.01), %d replications, %.1f s (< 120 s)", d_t, p_t, reps, secs));

  const double m = static_cast<double>(ms.front());
  const bool same_m = std::all_of(ms.begin(), ms.end(), [&](std::size_t v) { return v == ms.front(); });
  const double d_q = oracle::ks_statistic(q1, [m](double v) { return v <= 0 ? 0.0 : 1.0 - std::pow(1.0 - std::min(v, 1.0), m); });
  const double p_q = oracle::ks_pvalue(d_q, q1.size());
  report("criterion 4 (q_1 ~ Beta(1, m) under the null)", p_q >= 0.01 && same_m,
         fmt("KS D = %.4f, p = %.4f (>= 0.01), m = %.0f", d_q, p_q, m));
}

// 5. Table 1, first row, at desk scale, plus the reduced smoke variant.
void criterion5(const std::filesystem::path& scratch, std::string& table1_output) {
  auto t0 = Clock::now();
  const auto full = cli_run({"--seed", "11", "--cache-dir", (scratch / "c5").string(), "simulate", "--config",
                             "table1_row1", "--calibration-reps", "300"});
  double secs = seconds_since(t0);
  if (full.code != 0) {
    report("criterion 5 (Table 1 row)", false, "simulate failed: " + full.err);
  } else {
    table1_output = full.out;
    const auto r = parse_scenario(full.out, "QVS");
    const bool k_ok = r.k_mean >= 14.0 && r.k_mean <= 26.0;
    const bool ge_ok = r.ge_m0 >= 0.95;
    const bool le_ok = r.le_m1 >= 0.80;
    const bool m0_ok = r.m0 >= 2.0 && r.m0 <= 5.0;
    report("criterion 5a (Table 1 row: mean k_hat in [14, 26])", k_ok, fmt("mean k_hat %.2f (SE %.2f)", r.k_mean, r.k_se));
    report("criterion 5b (Table 1 row: F(k_hat >= m0) >= 0.95)", ge_ok, fmt("%.2f", r.ge_m0));
    report("criterion 5c (Table 1 row: F(k_hat <= m1) >= 0.80)", le_ok, fmt("%.2f", r.le_m1));
    report("criterion 5d (Table 1 row: mean m0 in [2, 5])", m0_ok, fmt("mean m0 %.2f, mean m1 %.2f", r.m0, r.m1));
    report("criterion 5e (Table 1 row: runtime < 30 min)", secs < 1800.0, fmt("%.1f s", secs));
  }

  t0 = Clock::now();
  const auto smoke = cli_run({"--seed", "11", "--cache-dir", (scratch / "c5s").string(), "simulate", "--config",
                              "table1_smoke"});
  secs = seconds_since(t0);
  if (smoke.code != 0) {
    report("criterion 5f (smoke variant)", false, "simulate failed: " + smoke.err);
    return;
  }
  const auto s = parse_scenario(smoke.out, "QVS");
  report("criterion 5f (smoke variant p = 400: F(k_hat >= m0) >= 0.9, < 3 min)", s.ge_m0 >= 0.9 && secs < 180.0,
         fmt("F(k_hat >= m0) %.2f, mean k_hat %.2f, mean m0 %.2f, %.1f s", s.ge_m0, s.k_mean, s.m0, secs));
}

// 6. Perfect-separation regime.
void criterion6() {
  ScenarioConfig cfg;
  cfg.n = 200;
  cfg.p = 400;
  cfg.s = 5;
  cfg.beta_value = 2.0;
  cfg.reps = 100;
  cfg.seed = 606;
  cfg.methods = {Method::qvs, Method::q_fdr};
  cfg.level = 0.05;
  const auto cal = calibrate(cfg.n, cfg.p, cfg.cov, 300, VmMethod::null_path, 607);
  const auto rep = run_scenario(cfg, cal);
  std::vector<double> k;
  double fdp = 0.0;
  std::size_t nq = 0;
  for (const auto& row : rep.rows) {
    if (row.method == Method::qvs) k.push_back(static_cast<double>(row.k_hat));
    if (row.method == Method::q_fdr) {
      fdp += row.metrics.fdp;
      ++nq;
    }
  }
  std::sort(k.begin(), k.end());
  const double median = 0.5 * (k[(k.size() - 1) / 2] + k[k.size() / 2]);
  fdp /= static_cast<double>(nq);
  report("criterion 6 (perfect separation: median k_hat = 5 +- 2, Q-FDR FDR <= 0.10)",
         std::abs(median - 5.0) <= 2.0 && fdp <= 0.10,
         fmt("median k_hat %.1f, mean m0 %.2f, mean m1 %.2f, Q-FDR empirical FDR %.4f, c_m %.4f", median, rep.m0.mean,
             rep.m1.mean, fdp, cal.c_m));
}

// 7. Selector algebra.
void criterion7() {
  Rng rng = derive_stream(7000, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    QSeries q;
    q.q.resize(1 + static_cast<std::size_t>(u(rng) * 200));
    for (auto& v : q.q) v = std::pow(u(rng), 1.0 + 8.0 * u(rng));
    if (rep % 2) std::sort(q.q.begin(), q.q.end());
    const double level = 0.01 + 0.2 * u(rng);
    if (q_bon(q, level).k_hat > q_fdr(q, level).k_hat) ++violations;
    std::vector<double> cs(12);
    for (auto& c : cs) c = -1.0 + 4.0 * u(rng);
    std::sort(cs.begin(), cs.end());
    for (std::size_t i = 1; i < cs.size(); ++i) {
      if (qvs_select(q, cs[i]).k_hat > qvs_select(q, cs[i - 1]).k_hat) ++violations;
    }
  }
  Rng drng = derive_stream(7001, 0);
  const RegressionData d(oracle::orthonormal_design(30, 10, drng), Vector::Zero(30));
  const auto path = fit_path(d);
  const QSeries empty;
  Rng cv = derive_stream(7002, 0);
  const bool empty_ok = path.empty() && qvs_select(empty, 0.3, path).k_hat == 0 && q_bon(empty, 0.05, path).k_hat == 0 &&
                        q_fdr(empty, 0.05, path).k_hat == 0 && bic_select(path, d).k_hat == 0 &&
                        cv_select(d, path, 5, cv).k_hat == 0;
  report("criterion 7 (selector algebra)", violations == 0 && empty_ok,
         fmt("%zu violations over 1000 fixtures; empty path all zero: %s", violations, empty_ok ? "yes" : "no"));
}

// 8. Calibration consistency of the uniform oracle.
void criterion8() {
  std::string detail;
  bool ok = true;
  for (Index m : {50, 199, 500}) {
    const auto rec = calibrate(m + 1, m, CovarianceSpec::identity(), 1000, VmMethod::uniform_oracle, 8000);
    std::size_t above = 0;
    for (std::size_t r = 0; r < 1000; ++r) {
      Rng rng = derive_stream(8001, r);
      above += simulate_vm_uniform(m, rng) > rec.c_m ? 1 : 0;
    }
    const double freq = static_cast<double>(above) / 1000.0;
    const double target = std::min(1.0, alpha_m(m));
    ok = ok && std::abs(freq - target) <= 0.05;
    detail += fmt("m=%d: P(V>c)=%.3f vs alpha=%.3f; ", static_cast<int>(m), freq, target);
  }
  report("criterion 8 (calibration consistency)", ok, detail);
}

// 9. Determinism of `simulate` across runs and thread counts.
void criterion9(const std::filesystem::path& scratch, const std::string& table1_output) {
  const auto again = cli_run({"--seed", "11", "--cache-dir", (scratch / "c5").string(), "simulate", "--config",
                              "table1_row1", "--calibration-reps", "300"});
  const auto threaded = cli_run({"--seed", "11", "--threads", "8", "--cache-dir", (scratch / "c9").string(),
                                 "simulate", "--config", "table1_row1", "--calibration-reps", "300"});
  const bool ok = !table1_output.empty() && again.code == 0 && threaded.code == 0 && again.out == table1_output &&
                  threaded.out == table1_output;
  report("criterion 9 (simulate byte-identical across runs and --threads 1 vs 8)", ok,
         fmt("repeat run identical: %s; 8-thread run identical: %s; %zu bytes", again.out == table1_output ? "yes" : "no",
             threaded.out == table1_output ? "yes" : "no", table1_output.size()));
}

}  // namespace

int main() {
  const auto scratch = oracle::scratch_dir("acceptance");
  try {
    criterion1();
    criterion2();
    criteria3and4();
    std::string table1;
    criterion5(scratch, table1);
    criterion6();
    criterion7();
    criterion8();
    criterion9(scratch, table1);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    ++failures;
  }
  std::filesystem::remove_all(scratch);
  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
