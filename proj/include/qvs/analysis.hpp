#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qvs/calibration.hpp"
#include "qvs/inference.hpp"
#include "qvs/io.hpp"
#include "qvs/path_solver.hpp"
#include "qvs/scenario.hpp"
#include "qvs/selectors.hpp"

namespace qvs {

/// Real-data workflow: path, covariance statistics, Q statistics and the
/// selection rules on one design/response pair.
struct AnalysisRequest {
  std::string design_path;
  std::string response_path;
  /// Known noise variance; nullopt estimates it by least squares.
  std::optional<double> sigma2;
  double level = 0.05;
  /// Bounding constant given inline; otherwise looked up in the cache.
  std::optional<double> c_m;
  std::string calibration_design = "identity";
  VmMethod calibration_method = VmMethod::null_path;
  std::vector<Method> methods = all_methods();
  std::size_t folds = 10;
  std::uint64_t seed = 1;
};

struct AnalysisReport {
  Index n = 0;
  Index p = 0;
  double sigma2 = 0.0;
  std::optional<double> c_m;
  SolutionPath path;
  CovTestSeries covtest;
  QSeries q;
  std::vector<SelectionResult> selections;
};

/// Error raised when QVS is requested without a bounding constant.
class MissingCalibration : public Error {
 public:
  using Error::Error;
};

inline AnalysisReport analyze(const RegressionData& data, const AnalysisRequest& req,
                              const CalibrationCache* cache = nullptr) {
  AnalysisReport rep;
  rep.n = data.n();
  rep.p = data.p();
  const bool wants_qvs = std::find(req.methods.begin(), req.methods.end(), Method::qvs) != req.methods.end();
  rep.c_m = req.c_m;
  if (wants_qvs && !rep.c_m) {
    std::optional<CalibrationRecord> rec;
    if (cache) rec = cache->find(data.n(), data.p(), req.calibration_design, req.calibration_method);
    if (!rec) {
      throw MissingCalibration("no calibration for n=" + std::to_string(data.n()) + " p=" + std::to_string(data.p()) +
                               " design=" + req.calibration_design + " method=" + to_string(req.calibration_method) +
                               "; run `qvs calibrate --n " + std::to_string(data.n()) + " --p " +
                               std::to_string(data.p()) + "` first or pass --cm");
    }
    rep.c_m = rec->c_m;
  }

  rep.sigma2 = req.sigma2 ? *req.sigma2 : resolve_sigma2(data);
  rep.path = fit_path(data);
  rep.covtest = covariance_test(rep.path, data, rep.sigma2);
  rep.q = q_statistics(rep.covtest);

  Rng cv_rng = derive_stream(req.seed, 0);
  for (Method m : req.methods) {
    switch (m) {
      case Method::qvs: rep.selections.push_back(qvs_select(rep.q, *rep.c_m, rep.path)); break;
      case Method::q_bon: rep.selections.push_back(q_bon(rep.q, req.level, rep.path)); break;
      case Method::q_fdr: rep.selections.push_back(q_fdr(rep.q, req.level, rep.path)); break;
      case Method::bic: rep.selections.push_back(bic_select(rep.path, data)); break;
      case Method::lcv: {
        if (rep.path.empty()) {
          rep.selections.push_back(SelectionResult{"LCV", 0, {}, {}});
        } else {
          const auto folds = std::min<std::size_t>(req.folds, static_cast<std::size_t>(data.n()));
          rep.selections.push_back(cv_select(data, rep.path, folds, cv_rng));
        }
        break;
      }
    }
  }
  return rep;
}

inline AnalysisReport analyze(const AnalysisRequest& req, const CalibrationCache* cache = nullptr) {
  const auto data = io::load_csv(req.design_path, req.response_path);
  return analyze(data, req, cache);
}

/// Score a selection against known relevant variables among p candidates,
/// without reference to a path: TPP = TP / |relevant|, specificity over all
/// p - |relevant| noise variables.
inline Metrics score_selection(const std::vector<Index>& selected, const std::vector<Index>& relevant, Index p) {
  const std::set<Index> rel(relevant.begin(), relevant.end());
  const std::set<Index> chosen(selected.begin(), selected.end());
  for (Index j : rel) {
    if (j < 0 || j >= p) throw InputError("relevant variable " + std::to_string(j + 1) + " outside 1.." + std::to_string(p));
  }
  for (Index j : chosen) {
    if (j < 0 || j >= p) throw InputError("selected variable " + std::to_string(j + 1) + " outside 1.." + std::to_string(p));
  }
  std::size_t tp = 0;
  for (Index j : chosen) tp += rel.count(j);
  const std::size_t fp = chosen.size() - tp;
  const std::size_t noise = static_cast<std::size_t>(p) - rel.size();
  Metrics out;
  out.relevant_on_path = rel.size();
  out.noise_on_path = noise;
  out.tpp = rel.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(rel.size());
  out.fdp = chosen.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(chosen.size());
  out.specificity = noise ? static_cast<double>(noise - fp) / static_cast<double>(noise) : 1.0;
  out.g_measure = std::sqrt(out.specificity * out.tpp);
  return out;
}

namespace report {

/// 1-based variable label as printed in tables.
inline long long var_label(Index j) { return static_cast<long long>(j) + 1; }

inline std::string join_vars(const std::vector<Index>& vars) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(var_label(vars[i]));
  }
  return out;
}

/// Every knot: position, penalty, event and variable (1-based).
inline io::Table path_table(const SolutionPath& path) {
  io::Table t;
  t.name = "path";
  t.columns = {"knot", "lambda", "event", "variable", "active_size"};
  for (std::size_t i = 0; i < path.knots.size(); ++i) {
    const auto& k = path.knots[i];
    const long long active = static_cast<long long>(k.active_before.size()) + (k.kind == EventKind::entry ? 1 : -1);
    t.add_row({static_cast<long long>(i + 1), k.lambda, std::string(k.kind == EventKind::entry ? "entry" : "drop"),
               var_label(k.variable), active});
  }
  t.notes.push_back("tail_lambda=" + io::format_number(path.tail_lambda, 17) +
                    (path.truncated ? " (next entry knot)" : " (path end)"));
  return t;
}

/// One row per entry knot: k, lambda_k, entering variable, T_k and q_k.
inline io::Table knot_table(const SolutionPath& path, const CovTestSeries* T, const QSeries* q) {
  io::Table t;
  t.name = "knots";
  t.columns = {"knot", "lambda", "variable"};
  if (T) t.columns.push_back("covtest");
  if (q) t.columns.push_back("q");
  const auto entries = path.entry_positions();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& knot = path.knots[entries[k]];
    std::vector<io::Table::Cell> row{static_cast<long long>(k + 1), knot.lambda, var_label(knot.variable)};
    if (T) row.emplace_back(T->T[k]);
    if (q) row.emplace_back(q->q[k]);
    t.add_row(std::move(row));
  }
  if (T) {
    t.notes.push_back("sigma2=" + io::format_number(T->sigma2_used, 17) +
                      " tail_lambda=" + io::format_number(T->tail_lambda, 17) +
                      (T->tail_source == TailSource::next_knot ? " (next entry knot)" : " (path end)"));
    if (T->has_negative()) t.notes.push_back("warning: negative covariance statistics present");
  }
  return t;
}

inline io::Table selection_table(const std::vector<SelectionResult>& sels) {
  io::Table t;
  t.name = "selections";
  t.columns = {"method", "k_hat", "selected"};
  for (const auto& s : sels) t.add_row({s.method, static_cast<long long>(s.k_hat), join_vars(s.selected)});
  return t;
}

inline std::vector<io::Table> analysis_tables(const AnalysisReport& rep) {
  auto knots = knot_table(rep.path, &rep.covtest, &rep.q);
  knots.notes.insert(knots.notes.begin(), "n=" + std::to_string(rep.n) + " p=" + std::to_string(rep.p) +
                                              " m=" + std::to_string(rep.path.length()));
  auto sel = selection_table(rep.selections);
  if (rep.c_m) sel.notes.push_back("c_m=" + io::format_number(*rep.c_m, 17));
  return {knots, sel};
}

inline io::Table metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
  io::Table t;
  t.name = "metrics";
  t.columns = {"method", "tpp", "fdp", "specificity", "g_measure", "relevant_on_path", "noise_on_path"};
  for (const auto& [name, m] : rows) {
    t.add_row({name, m.tpp, m.fdp, m.specificity, m.g_measure, static_cast<long long>(m.relevant_on_path),
               static_cast<long long>(m.noise_on_path)});
  }
  return t;
}

}  // namespace report
}  // namespace qvs
