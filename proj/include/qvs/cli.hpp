#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qvs/analysis.hpp"
#include "qvs/calibration.hpp"
#include "qvs/experiment.hpp"
#include "qvs/io.hpp"

namespace qvs::cli {

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string cache_dir;
  std::string output = "stdout";
  std::string format = "tsv";
};

namespace detail {

inline std::string default_cache_dir() {
  if (const char* env = std::getenv("QVS_CACHE_DIR"); env && *env) return env;
  return ".qvs-cache";
}

inline std::optional<double> parse_sigma2(const std::string& text) {
  if (text.empty() || text == "estimate" || text == "unknown") return std::nullopt;
  auto v = io::parse_double(text);
  if (!v || !(*v > 0.0)) throw InputError("--sigma2 must be a positive number or 'estimate', got '" + text + "'");
  return v;
}

inline std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  for (const auto& part : io::split(text, ',')) {
    const auto t = io::trim(part);
    if (!t.empty()) out.push_back(parse_method(t));
  }
  if (out.empty()) throw InputError("--methods lists no methods");
  return out;
}

/// 1-based comma/whitespace separated indices to 0-based.
inline std::vector<Index> parse_indices(const std::string& text, const std::string& origin) {
  std::vector<Index> out;
  std::string norm = text;
  for (char& c : norm) {
    if (c == ',' || c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  std::istringstream is(norm);
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v < 1) throw InputError(origin + ": bad variable index '" + tok + "' (expected 1-based)");
    out.push_back(static_cast<Index>(v - 1));
  }
  return out;
}

inline void emit(const GlobalOptions& g, const std::vector<io::Table>& tables, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (g.format == "json") {
      io::write_json(os, tables);
    } else {
      io::write_tsv(os, tables);
    }
  };
  if (g.output.empty() || g.output == "stdout" || g.output == "-") {
    write(out);
    out.flush();
    return;
  }
  std::ofstream f(g.output, std::ios::trunc);
  if (!f) throw Error("cannot open output file " + g.output);
  write(f);
  if (!f) throw Error("failed writing " + g.output);
}

struct DataArgs {
  std::string design;
  std::string response;
  std::string sigma2 = "estimate";

  void attach(CLI::App* app) {
    app->add_option("--design,-x", design, "design matrix CSV (n rows, p columns)")->required();
    app->add_option("--response,-y", response, "response CSV (single column)")->required();
    app->add_option("--sigma2", sigma2, "noise variance, or 'estimate' for the least-squares estimate");
  }
};

}  // namespace detail

/// Parse argv and run one subcommand. Exit codes: 0 success, 1 runtime
/// failure, 2 usage error.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Q-statistic variable selection along the lasso path", "qvs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  g.cache_dir = detail::default_cache_dir();
  app.add_option("--seed", g.seed, "master random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for calibration and simulation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "calibration cache directory (default $QVS_CACHE_DIR or .qvs-cache)");
  app.add_option("--output,-o", g.output, "output file, or 'stdout'")->capture_default_str();
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"tsv", "json"}))->capture_default_str();

  // path / covtest / qstat share the data arguments.
  detail::DataArgs path_args, cov_args, q_args, sel_args;
  auto* path_cmd = app.add_subcommand("path", "emit the lasso solution path knots");
  path_args.attach(path_cmd);
  auto* cov_cmd = app.add_subcommand("covtest", "emit covariance test statistics per entry knot");
  cov_args.attach(cov_cmd);
  auto* q_cmd = app.add_subcommand("qstat", "emit covariance test and Q statistics per entry knot");
  q_args.attach(q_cmd);

  Index cal_n = 0, cal_p = 0;
  std::size_t cal_reps = 1000;
  std::string cal_design = "identity", cal_method = "null-path";
  auto* cal_cmd = app.add_subcommand("calibrate", "simulate V_m and store the bounding constant c_m");
  cal_cmd->add_option("--n", cal_n, "observations")->required()->check(CLI::Range(3, 1 << 30));
  cal_cmd->add_option("--p", cal_p, "candidate variables")->required()->check(CLI::Range(2, 1 << 30));
  cal_cmd->add_option("--reps", cal_reps, "Monte-Carlo replications (>= 100)")->capture_default_str();
  cal_cmd->add_option("--design", cal_design, "null design covariance: identity or ar1(rho)")->capture_default_str();
  cal_cmd->add_option("--method", cal_method, "null-path or uniform-oracle")->capture_default_str();

  double level = 0.05;
  std::optional<double> cm;
  std::string methods = "qvs,qbon,qfdr,bic,lcv";
  std::size_t folds = 10;
  std::string sel_design = "identity", sel_method = "null-path";
  auto* sel_cmd = app.add_subcommand("select", "run the selection rules on a design/response pair");
  sel_args.attach(sel_cmd);
  sel_cmd->add_option("--level", level, "nominal level for Q-BON and Q-FDR")->capture_default_str();
  sel_cmd->add_option("--cm", cm, "bounding constant c_m (skips the cache lookup)");
  sel_cmd->add_option("--methods", methods, "comma-separated: qvs,qbon,qfdr,bic,lcv")->capture_default_str();
  sel_cmd->add_option("--folds", folds, "cross-validation folds for LCV")->capture_default_str();
  sel_cmd->add_option("--calibration-design", sel_design, "design label of the cached calibration")
      ->capture_default_str();
  sel_cmd->add_option("--calibration-method", sel_method, "method of the cached calibration")->capture_default_str();

  std::string config;
  bool raw = false;
  std::optional<std::size_t> sim_reps, sim_cal_reps;
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation scenario or grid");
  sim_cmd->add_option("--config", config, "config file or built-in name (e.g. table1_row1)")->required();
  sim_cmd->add_flag("--raw", raw, "also emit per-replication rows");
  sim_cmd->add_option("--reps", sim_reps, "override the number of replications");
  sim_cmd->add_option("--calibration-reps", sim_cal_reps, "override the calibration replications");

  std::string selection_file, truth_file;
  Index metrics_p = 0;
  auto* met_cmd = app.add_subcommand("metrics", "score a selection table against a truth file");
  met_cmd->add_option("--selection", selection_file, "selection TSV written by `qvs select`")->required();
  met_cmd->add_option("--truth", truth_file, "relevant variables, 1-based, comma or newline separated")->required();
  met_cmd->add_option("--p", metrics_p, "number of candidate variables")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "qvs: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    const CalibrationCache cache(g.cache_dir);

    auto fit = [&](const detail::DataArgs& a, bool with_T, bool with_q) {
      const auto data = io::load_csv(a.design, a.response);
      const auto path = fit_path(data);
      std::vector<io::Table> tables;
      if (!with_T) {
        tables.push_back(report::path_table(path));
      } else {
        const double s2 = detail::parse_sigma2(a.sigma2).value_or(resolve_sigma2(data));
        const auto T = covariance_test(path, data, s2);
        const auto q = q_statistics(T);
        tables.push_back(report::knot_table(path, &T, with_q ? &q : nullptr));
      }
      detail::emit(g, tables, out);
    };

    if (*path_cmd) {
      fit(path_args, false, false);
    } else if (*cov_cmd) {
      fit(cov_args, true, false);
    } else if (*q_cmd) {
      fit(q_args, true, true);
    } else if (*cal_cmd) {
      CalibrateOptions opts;
      opts.threads = g.threads;
      opts.cache = &cache;
      const auto rec =
          calibrate(cal_n, cal_p, CovarianceSpec::parse(cal_design), cal_reps, parse_vm_method(cal_method), g.seed, opts);
      io::Table t;
      t.name = "calibration";
      t.columns = {"m", "n", "p", "design", "method", "alpha_m", "c_m", "reps", "seed"};
      t.add_row({static_cast<long long>(rec.m), static_cast<long long>(rec.n), static_cast<long long>(rec.p), rec.design,
                 to_string(rec.method), rec.alpha_m, rec.c_m, static_cast<long long>(rec.reps),
                 std::to_string(rec.seed)});
      t.notes.push_back("cache=" + cache.file().string());
      detail::emit(g, {t}, out);
    } else if (*sel_cmd) {
      AnalysisRequest req;
      req.design_path = sel_args.design;
      req.response_path = sel_args.response;
      req.sigma2 = detail::parse_sigma2(sel_args.sigma2);
      req.level = level;
      req.c_m = cm;
      req.methods = detail::parse_methods(methods);
      req.folds = folds;
      req.seed = g.seed;
      req.calibration_design = CovarianceSpec::parse(sel_design).label();
      req.calibration_method = parse_vm_method(sel_method);
      const auto rep = analyze(req, &cache);
      detail::emit(g, report::analysis_tables(rep), out);
    } else if (*sim_cmd) {
      auto exp = load_experiment(config);
      if (sim_cal_reps) exp.calibration_reps = *sim_cal_reps;
      std::vector<io::Table> tables;
      CalibrateOptions opts;
      opts.threads = g.threads;
      opts.cache = &cache;
      for (auto& sc : exp.scenarios) {
        sc.seed = g.seed;
        if (sim_reps) sc.reps = *sim_reps;
        const bool wants_qvs = std::find(sc.methods.begin(), sc.methods.end(), Method::qvs) != sc.methods.end();
        CalibrationRecord cal;
        if (wants_qvs) {
          cal = calibrate(sc.n, sc.p, sc.cov, exp.calibration_reps, exp.calibration_method,
                          exp.calibration_seed.value_or(g.seed), opts);
        } else {
          cal.n = sc.n;
          cal.p = sc.p;
          cal.m = std::min(sc.n - 1, sc.p);
          cal.design = sc.cov.label();
          cal.method = exp.calibration_method;
        }
        const auto rep = run_scenario(sc, cal, g.threads);
        tables.push_back(report::scenario_table(rep));
        if (raw) tables.push_back(report::raw_table(rep));
      }
      detail::emit(g, tables, out);
    } else if (*met_cmd) {
      const auto sel_tables = io::read_tsv_tables(selection_file);
      std::ifstream tin(truth_file);
      if (!tin) throw InputError("cannot open " + truth_file);
      std::stringstream buf;
      for (std::string line; std::getline(tin, line);) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        buf << line << '\n';
      }
      const auto truth = detail::parse_indices(buf.str(), truth_file);
      std::vector<std::pair<std::string, Metrics>> rows;
      for (const auto& t : sel_tables) {
        const auto mcol = t.column("method");
        const auto scol = t.column("selected");
        if (!mcol || !scol) continue;
        for (const auto& r : t.rows) {
          const std::string sel = *scol < r.size() ? r[*scol] : std::string();
          rows.emplace_back(r[*mcol], score_selection(detail::parse_indices(sel, selection_file), truth, metrics_p));
        }
      }
      if (rows.empty()) throw InputError(selection_file + ": no table with 'method' and 'selected' columns");
      detail::emit(g, {report::metrics_table(rows)}, out);
    }
  } catch (const std::exception& e) {
    err << "qvs: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qvs::cli
