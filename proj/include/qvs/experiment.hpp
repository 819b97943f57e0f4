#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qvs/calibration.hpp"
#include "qvs/io.hpp"
#include "qvs/scenario.hpp"

namespace qvs {

/// A scenario grid read from a config file. Keys holding comma lists
/// (s, beta, p) sweep; every combination is one ScenarioConfig.
struct Experiment {
  std::vector<ScenarioConfig> scenarios;
  std::size_t calibration_reps = 1000;
  VmMethod calibration_method = VmMethod::null_path;
  std::optional<std::uint64_t> calibration_seed;
};

namespace detail {

inline std::vector<std::string> list_values(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& part : io::split(v, ',')) {
    const auto t = io::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(text, &used);
    } else if constexpr (std::is_signed_v<T>) {
      v = static_cast<T>(std::stoll(text, &used));
    } else {
      if (!text.empty() && text[0] == '-') throw InputError("");
      v = static_cast<T>(std::stoull(text, &used));
    }
    if (used != text.size()) throw InputError("");
    return v;
  } catch (const std::exception&) {
    throw InputError("bad value '" + text + "' for config key '" + key + "'");
  }
}

}  // namespace detail

/// Built-in experiment definitions, addressable by name from the CLI.
inline const std::map<std::string, std::string>& builtin_configs() {
  static const std::map<std::string, std::string> configs = {
      {"table1_row1",
       "# Table-1 style: n = 200, p = 2000, s = 10, identity covariance\n"
       "n = 200\np = 2000\ns = 10\nbeta = 0.3\ncov = identity\nsigma = 1\nreps = 100\n"
       "methods = qvs\ncalibration_reps = 1000\n"},
      {"table1_smoke",
       "# reduced Table-1 row: p = 400 with the ar1(0.5) design of the figure grids\n"
       "n = 200\np = 400\ns = 10\nbeta = 0.3\ncov = ar1(0.5)\nsigma = 1\nreps = 100\n"
       "methods = qvs\ncalibration_reps = 300\n"},
      {"table1_p2000",
       "n = 200\np = 2000\ns = 10,20,30,40\nbeta = 0.3\ncov = identity\nsigma = 1\nreps = 100\n"
       "methods = qvs\ncalibration_reps = 1000\n"},
      {"table1_p10000",
       "n = 200\np = 10000\ns = 10,20,30,40\nbeta = 0.3\ncov = identity\nsigma = 1\nreps = 100\n"
       "methods = qvs\ncalibration_reps = 1000\n"},
      {"figure_p2000",
       "n = 200\np = 2000\ns = 10,20,40\nbeta = 0.3,0.5,1,2\ncov = ar1(0.5)\nsigma = 1\nreps = 100\n"
       "methods = qvs,qbon,qfdr,bic,lcv\ncalibration_reps = 1000\n"},
      {"figure_p400",
       "n = 200\np = 400\ns = 10,20,40\nbeta = 0.3,0.5,1,2\ncov = ar1(0.5)\nsigma = 1\nreps = 100\n"
       "methods = qvs,qbon,qfdr,bic,lcv\ncalibration_reps = 1000\n"},
      {"figure_p10000",
       "n = 200\np = 10000\ns = 10,20,40\nbeta = 0.3,0.5,1,2\ncov = ar1(0.5)\nsigma = 1\nreps = 100\n"
       "methods = qvs,qbon,qfdr,bic,lcv\ncalibration_reps = 1000\n"},
      {"smoke",
       "# small, fast scenario\n"
       "n = 60\np = 120\ns = 5\nbeta = 1\ncov = ar1(0.5)\nsigma = 1\nreps = 12\n"
       "methods = qvs,qbon,qfdr,bic,lcv\ncalibration_reps = 100\n"},
  };
  return configs;
}

inline Experiment parse_experiment(const std::map<std::string, std::string>& kv) {
  static const std::vector<std::string> known = {"n", "p", "s", "beta", "cov", "rho", "sigma", "reps", "seed",
                                                 "methods", "level", "folds", "calibration_reps",
                                                 "calibration_method", "calibration_seed"};
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InputError("unknown config key '" + key + "'");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  ScenarioConfig base;
  if (auto v = get("n")) base.n = detail::parse_scalar<Index>("n", *v);
  if (auto v = get("cov")) base.cov = CovarianceSpec::parse(*v);
  if (auto v = get("rho")) base.cov = CovarianceSpec::ar1(detail::parse_scalar<double>("rho", *v));
  if (auto v = get("sigma")) base.sigma = detail::parse_scalar<double>("sigma", *v);
  if (auto v = get("reps")) base.reps = detail::parse_scalar<std::size_t>("reps", *v);
  if (auto v = get("seed")) base.seed = detail::parse_scalar<std::uint64_t>("seed", *v);
  if (auto v = get("level")) base.level = detail::parse_scalar<double>("level", *v);
  if (auto v = get("folds")) base.folds = detail::parse_scalar<std::size_t>("folds", *v);
  if (auto v = get("methods")) {
    base.methods.clear();
    for (const auto& m : detail::list_values(*v)) base.methods.push_back(parse_method(m));
  }

  Experiment exp;
  if (auto v = get("calibration_reps")) exp.calibration_reps = detail::parse_scalar<std::size_t>("calibration_reps", *v);
  if (auto v = get("calibration_method")) exp.calibration_method = parse_vm_method(*v);
  if (auto v = get("calibration_seed")) exp.calibration_seed = detail::parse_scalar<std::uint64_t>("calibration_seed", *v);

  auto sweep = [&](const std::string& key, const std::string& fallback) {
    auto v = get(key);
    auto vals = detail::list_values(v ? *v : fallback);
    if (vals.empty()) throw InputError("config key '" + key + "' is empty");
    return vals;
  };
  for (const auto& p : sweep("p", std::to_string(base.p))) {
    for (const auto& s : sweep("s", std::to_string(base.s))) {
      for (const auto& b : sweep("beta", io::format_number(base.beta_value, 17))) {
        ScenarioConfig c = base;
        c.p = detail::parse_scalar<Index>("p", p);
        c.s = detail::parse_scalar<Index>("s", s);
        c.beta_value = detail::parse_scalar<double>("beta", b);
        c.validate();
        exp.scenarios.push_back(c);
      }
    }
  }
  return exp;
}

/// Load a config file, or a built-in definition when no such file exists.
inline Experiment load_experiment(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) {
    std::ifstream in(name_or_path);
    if (!in) throw InputError("cannot open " + name_or_path);
    return parse_experiment(io::parse_key_values(in, name_or_path));
  }
  const auto& builtins = builtin_configs();
  if (auto it = builtins.find(name_or_path); it != builtins.end()) {
    std::istringstream in(it->second);
    return parse_experiment(io::parse_key_values(in, name_or_path));
  }
  std::string names;
  for (const auto& [k, v] : builtins) names += (names.empty() ? "" : ", ") + k;
  throw InputError("no config file or built-in config named '" + name_or_path + "' (built-ins: " + names + ")");
}

namespace report {

inline io::Table scenario_table(const ScenarioReport& r) {
  const auto& c = r.config;
  const auto& cal = r.calibration;
  io::Table t;
  t.name = "scenario";
  t.notes.push_back("scenario n=" + std::to_string(c.n) + " p=" + std::to_string(c.p) + " s=" + std::to_string(c.s) +
                    " beta=" + io::format_number(c.beta_value, 17) + " cov=" + c.cov.label() +
                    " sigma=" + io::format_number(c.sigma, 17) + " reps=" + std::to_string(c.reps) +
                    " seed=" + std::to_string(c.seed) + " level=" + io::format_number(c.level, 17));
  t.notes.push_back("calibration m=" + std::to_string(cal.m) + " design=" + cal.design + " method=" +
                    to_string(cal.method) + " alpha_m=" + io::format_number(cal.alpha_m, 17) +
                    " c_m=" + io::format_number(cal.c_m, 17) + " reps=" + std::to_string(cal.reps) +
                    " seed=" + std::to_string(cal.seed));
  t.notes.push_back("markers m0_mean=" + io::format_number(r.m0.mean, 12) + " m0_sd=" + io::format_number(r.m0.sd, 12) +
                    " m1_mean=" + io::format_number(r.m1.mean, 12) + " m1_sd=" + io::format_number(r.m1.sd, 12) +
                    " path_length_mean=" + io::format_number(r.path_length.mean, 12));
  t.columns = {"method", "k_hat_mean", "k_hat_se", "tpp_mean", "tpp_se", "fdp_mean",
               "fdp_se", "g_mean", "g_se", "freq_ge_m0", "freq_le_m1"};
  for (const auto& m : r.methods) {
    t.add_row({method_label(m.method), m.k_hat.mean, m.k_hat.se, m.tpp.mean, m.tpp.se, m.fdp.mean, m.fdp.se, m.g.mean,
               m.g.se, m.freq_ge_m0, m.freq_le_m1});
  }
  return t;
}

inline io::Table raw_table(const ScenarioReport& r) {
  io::Table t;
  t.name = "replications";
  t.columns = {"p", "s", "beta", "rep", "method", "m", "k_hat", "m0", "m1", "tpp", "fdp", "specificity", "g_measure"};
  for (const auto& row : r.rows) {
    t.add_row({static_cast<long long>(r.config.p), static_cast<long long>(r.config.s), r.config.beta_value,
               static_cast<long long>(row.rep), method_label(row.method), static_cast<long long>(row.m),
               static_cast<long long>(row.k_hat), static_cast<long long>(row.m0), static_cast<long long>(row.m1),
               row.metrics.tpp, row.metrics.fdp, row.metrics.specificity, row.metrics.g_measure});
  }
  return t;
}

}  // namespace report
}  // namespace qvs
