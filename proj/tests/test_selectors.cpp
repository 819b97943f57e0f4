#include <gtest/gtest.h>

#include "qvs/selectors.hpp"
#include "qvs/simulate.hpp"
#include "support.hpp"

using namespace qvs;

namespace {

QSeries make_q(std::vector<double> v) {
  QSeries q;
  q.q = std::move(v);
  return q;
}

QSeries padded(std::vector<double> head, std::size_t m, double fill) {
  head.resize(m, fill);
  return make_q(std::move(head));
}

}  // namespace

TEST(QvsSelect, WorkedExample) {
  const auto q = make_q({0.01, 0.04, 0.5, 0.9, 0.95, 1.0});
  const auto r = qvs_select(q, 0.2);
  ASSERT_EQ(r.objective_trace.size(), 3u);
  EXPECT_NEAR(r.objective_trace[0], 0.13677, 1e-5);
  EXPECT_NEAR(r.objective_trace[1], 0.25414, 1e-5);
  EXPECT_NEAR(r.objective_trace[2], -0.1, 1e-12);
  EXPECT_EQ(r.k_hat, 1u);
}

TEST(QvsSelect, AllNullGivesZero) {
  EXPECT_EQ(qvs_select(make_q(std::vector<double>(20, 1.0)), 0.3).k_hat, 0u);
  EXPECT_EQ(qvs_select(make_q({}), 0.3).k_hat, 0u);
  EXPECT_EQ(qvs_select(make_q({0.0}), 0.3).k_hat, 0u);
  EXPECT_THROW(qvs_select(make_q({0.1}), std::nan("")), InputError);
  EXPECT_THROW(qvs_select(make_q({1.5}), 0.1), InputError);
}

TEST(QvsSelect, IgnoresSecondHalf) {
  Rng rng = derive_stream(1, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> q(2 + rep % 60);
    for (auto& v : q) v = u(rng) * u(rng);
    std::sort(q.begin(), q.end());
    auto q2 = q;
    for (std::size_t k = q.size() / 2; k < q.size(); ++k) q2[k] = u(rng);
    EXPECT_EQ(qvs_select(make_q(q), 0.2).k_hat, qvs_select(make_q(q2), 0.2).k_hat);
  }
}

TEST(QBon, Examples) {
  auto q = padded({1e-6, 3e-5}, 2000, 0.5);
  EXPECT_EQ(q_bon(q, 0.05).k_hat, 1u);
  EXPECT_EQ(q_bon(padded({}, 50, 0.5), 0.05).k_hat, 0u);
  q = padded({1e-4, 6e-4, 4e-4}, 100, 0.9);
  EXPECT_EQ(q_bon(q, 0.05).k_hat, 3u);
}

TEST(QFdr, Examples) {
  EXPECT_EQ(q_fdr(padded({0.0004, 0.002, 0.001}, 100, 0.9), 0.05).k_hat, 3u);
  EXPECT_EQ(q_fdr(make_q(std::vector<double>(30, 1.0)), 0.05).k_hat, 0u);
  // Exactly on the threshold at k = 5 (0.05 * 5 / 20 = 0.0125, exact in binary
  // after the same arithmetic).
  std::vector<double> q(20, 0.9);
  q[4] = 0.05 * 5.0 / 20.0;
  EXPECT_EQ(q_fdr(make_q(q), 0.05).k_hat, 5u);
}

TEST(Selectors, AlgebraOnRandomFixtures) {
  Rng rng = derive_stream(2, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> q(1 + rep % 80);
    for (auto& v : q) v = std::pow(u(rng), 1.0 + 6.0 * u(rng));
    if (rep % 2) std::sort(q.begin(), q.end());
    const auto qs = make_q(q);
    EXPECT_LE(q_bon(qs, 0.05).k_hat, q_fdr(qs, 0.05).k_hat);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double c = -0.5; c <= 3.0; c += 0.25) {
      const auto k = qvs_select(qs, c).k_hat;
      EXPECT_LE(k, prev);
      prev = k;
    }
  }
}

TEST(Selectors, EmptyPathGivesZero) {
  Rng rng = derive_stream(3, 0);
  const RegressionData d(oracle::orthonormal_design(20, 5, rng), Vector::Zero(20));
  const auto path = fit_path(d);
  ASSERT_TRUE(path.empty());
  const QSeries q;
  EXPECT_EQ(qvs_select(q, 0.2, path).k_hat, 0u);
  EXPECT_EQ(q_bon(q, 0.05, path).k_hat, 0u);
  EXPECT_EQ(q_fdr(q, 0.05, path).k_hat, 0u);
  EXPECT_EQ(bic_select(path, d).k_hat, 0u);
  Rng cv = derive_stream(3, 1);
  EXPECT_EQ(cv_select(d, path, 5, cv).k_hat, 0u);
}

TEST(Selectors, SelectedFollowsEntryOrder) {
  Rng rng = derive_stream(4, 0);
  const Matrix x = gen_design(80, 40, CovarianceSpec::identity(), rng);
  const auto truth = gen_truth(40, 3, 3.0, rng);
  const auto d = RegressionData::from_raw(x, gen_response(x, truth.beta, 1.0, rng), 1.0);
  const auto path = fit_path(d);
  const auto q = q_statistics(covariance_test(path, d, 1.0));
  const auto r = q_fdr(q, 0.05, path);
  const auto order = path.entry_order();
  ASSERT_LE(r.selected.size(), r.k_hat);
  for (std::size_t i = 0; i < r.selected.size(); ++i) EXPECT_EQ(r.selected[i], order[i]);
}

TEST(BicSelect, SingleStrongSignal) {
  Rng rng = derive_stream(5, 0);
  const Index n = 200, p = 50;
  const Matrix x = gen_design(n, p, CovarianceSpec::identity(), rng);
  Vector beta = Vector::Zero(p);
  beta[0] = 10.0;
  const auto d = RegressionData::from_raw(x, gen_response(x, beta, 1.0, rng));
  const auto path = fit_path(d);
  const auto r = bic_select(path, d);
  EXPECT_EQ(r.k_hat, 1u);
  ASSERT_EQ(r.selected.size(), 1u);
  EXPECT_EQ(r.selected[0], 0);
  // The returned position minimizes the recorded criterion.
  const auto best = std::min_element(r.objective_trace.begin(), r.objective_trace.end()) - r.objective_trace.begin();
  EXPECT_EQ(static_cast<std::size_t>(best), r.k_hat);
}

TEST(BicSelect, PureNoiseSelectsLittle) {
  Rng rng = derive_stream(6, 0);
  const Matrix x = gen_design(300, 30, CovarianceSpec::identity(), rng);
  const auto d = RegressionData::from_raw(x, gen_response(x, Vector::Zero(30), 1.0, rng));
  const auto r = bic_select(fit_path(d), d);
  EXPECT_LE(r.k_hat, 2u);
}

TEST(CvSelect, NullDataSelectsLittle) {
  int small = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = derive_stream(seed, 10);
    const Matrix x = gen_design(100, 200, CovarianceSpec::identity(), rng);
    const auto d = RegressionData::from_raw(x, gen_response(x, Vector::Zero(200), 1.0, rng));
    Rng cv = derive_stream(seed, 11);
    small += cv_select(d, 10, cv).selected.size() <= 10 ? 1 : 0;
  }
  EXPECT_GE(small, 18);
}

TEST(CvSelect, DominantSignalAlwaysSelected) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = derive_stream(seed, 20);
    const Matrix x = gen_design(100, 200, CovarianceSpec::identity(), rng);
    Vector beta = Vector::Zero(200);
    beta[0] = 10.0;
    const auto d = RegressionData::from_raw(x, gen_response(x, beta, 1.0, rng));
    Rng cv = derive_stream(seed, 21);
    const auto r = cv_select(d, 10, cv);
    EXPECT_NE(std::find(r.selected.begin(), r.selected.end(), 0), r.selected.end()) << "seed " << seed;
  }
}

TEST(CvSelect, LeaveOneOutAndFoldChecks) {
  Rng rng = derive_stream(7, 0);
  const Matrix x = gen_design(10, 5, CovarianceSpec::identity(), rng);
  Vector beta = Vector::Zero(5);
  beta[1] = 2.0;
  const auto d = RegressionData::from_raw(x, gen_response(x, beta, 1.0, rng));
  Rng cv = derive_stream(7, 1);
  const auto r = cv_select(d, 10, cv);
  EXPECT_LE(r.k_hat, 5u);
  EXPECT_EQ(r.k_hat, r.selected.size());
  EXPECT_THROW(cv_select(d, 1, cv), InputError);
  EXPECT_THROW(cv_select(d, 11, cv), InputError);
}
