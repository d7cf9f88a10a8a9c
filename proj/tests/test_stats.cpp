#include "doctest.h"

#include "tangle/error.hpp"
#include "tangle/random.hpp"
#include "tangle/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

using namespace tangle;

namespace {

double boost_t_cdf(double t, double df) { return boost::math::cdf(boost::math::students_t(df), t); }
double boost_f_cdf(double f, double d1, double d2) { return boost::math::cdf(boost::math::fisher_f(d1, d2), f); }

double var(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

/// Textbook Welch test evaluated with the Boost distribution.
double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = a.size(), nb = b.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na, mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  const double qa = var(a) / na, qb = var(b) / nb;
  const double t = (ma - mb) / std::sqrt(qa + qb);
  const double df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1));
  return 2.0 * (1.0 - boost_t_cdf(std::abs(t), df));
}

double f_test_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double f = var(a) / var(b);
  const double c = boost_f_cdf(f, a.size() - 1.0, b.size() - 1.0);
  return std::min(1.0, 2.0 * std::min(c, 1.0 - c));
}

std::vector<double> normal_sample(Rng& rng, int n, double mu, double sd) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(mu + sd * standard_normal(rng));
  return out;
}

}  // namespace

TEST_CASE("mcfadden r2") {
  CHECK(mcfadden_r2(-100.0, -100.0) == 0.0);
  CHECK(mcfadden_r2(-1e-12, -100.0) == doctest::Approx(1.0));
  CHECK(mcfadden_r2(-50.0, -100.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(mcfadden_r2(-1.0, 0.0), InvalidArgument);
}

TEST_CASE("relative importance") {
  const std::vector<double> ids = {0.591, 0.130, 0.072};
  const auto pct = relative_importance(ids, 0.794);
  REQUIRE(pct.size() == 3);
  CHECK(pct[0] == doctest::Approx(100 * 0.591 / 0.794).epsilon(1e-12));
  CHECK(pct[1] == doctest::Approx(100 * 0.130 / 0.794).epsilon(1e-12));
  CHECK(pct[2] == doctest::Approx(100 * 0.072 / 0.794).epsilon(1e-12));
  // The printed table rounds its inputs; the leading entry still matches.
  CHECK(std::abs(pct[0] - 74.41) < 0.05);

  const std::vector<double> one = {0.3};
  CHECK(relative_importance(one, 0.3)[0] == doctest::Approx(100.0));
  CHECK_THROWS_AS(relative_importance(ids, 0.0), InvalidArgument);
}

TEST_CASE("dominance analysis") {
  Rng rng(31);
  const int n = 200;
  SUBCASE("exact predictor dominates noise") {
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = uniform(rng, 0, 10);
      X(i, 1) = standard_normal(rng);
      X(i, 2) = standard_normal(rng);
      y[i] = X(i, 0);
    }
    const DominanceReport r = dominance_analysis(X, y, {"x1", "x2", "x3"});
    CHECK(r.subset_r2.size() == 7);
    CHECK(r.failed_subsets.empty());
    CHECK(r.relative_importance_pct[0] > 95.0);
    CHECK(r.relative_importance_pct[0] > r.relative_importance_pct[1]);
    CHECK(r.relative_importance_pct[0] > r.relative_importance_pct[2]);
    CHECK(std::abs(r.relative_importance_pct[1] - r.relative_importance_pct[2]) < 1.0);

    // Brute force over the subsets.
    const double ll0 = ols_log_likelihood(Eigen::MatrixXd(n, 0), y);
    for (int k = 0; k < 3; ++k) {
      Eigen::MatrixXd without(n, 2);
      for (int j = 0, c = 0; j < 3; ++j)
        if (j != k) without.col(c++) = X.col(j);
      CHECK(r.interactional_dominance[k] ==
            doctest::Approx(r.full_r2 - mcfadden_r2(ols_log_likelihood(without, y), ll0)));
    }
  }
  SUBCASE("noisy linear response, relabeling invariance") {
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) X(i, k) = uniform(rng, 0, 5);
      y[i] = 4 * X(i, 0) + 2 * X(i, 1) + X(i, 2) + 3 * standard_normal(rng);
    }
    const DominanceReport r = dominance_analysis(X, y, {"a", "b", "c"});
    Eigen::MatrixXd P(n, 3);
    P << X.col(2), X.col(0), X.col(1);
    const DominanceReport q = dominance_analysis(P, y, {"c", "a", "b"});
    CHECK(q.full_r2 == doctest::Approx(r.full_r2));
    CHECK(q.interactional_dominance[1] == doctest::Approx(r.interactional_dominance[0]));
    CHECK(q.interactional_dominance[2] == doctest::Approx(r.interactional_dominance[1]));
    CHECK(q.interactional_dominance[0] == doctest::Approx(r.interactional_dominance[2]));
    for (int k = 0; k < 3; ++k)
      CHECK(r.relative_importance_pct[k] == doctest::Approx(100 * r.interactional_dominance[k] / r.full_r2));
  }
  SUBCASE("single predictor") {
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = uniform(rng, 0, 5);
      y[i] = X(i, 0) + standard_normal(rng);
    }
    const DominanceReport r = dominance_analysis(X, y, {"x"});
    CHECK(r.subset_r2.size() == 1);
    CHECK(r.interactional_dominance[0] == doctest::Approx(r.full_r2));
    CHECK(r.relative_importance_pct[0] == doctest::Approx(100.0));
  }
  SUBCASE("singular full design") {
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = uniform(rng, 0, 5);
      X(i, 1) = 3.0;  // collinear with the intercept
      X(i, 2) = uniform(rng, 0, 5);
      y[i] = X(i, 0) + X(i, 2) + standard_normal(rng);
    }
    CHECK_THROWS_AS(dominance_analysis(X, y, {"a", "b", "c"}), InvalidArgument);
    Eigen::MatrixXd Y = X;
    Y.col(1) = X.col(0) * 2.0;  // duplicates predictor a
    CHECK_THROWS_AS(dominance_analysis(Y, y, {"a", "b", "c"}), InvalidArgument);
    Eigen::MatrixXd Z(n, 2);
    Z << X.col(0), X.col(2);
    const DominanceReport r = dominance_analysis(Z, y, {"a", "c"});
    CHECK(r.failed_subsets.empty());
  }
  SUBCASE("csv") {
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = uniform(rng, 0, 5);
      X(i, 1) = uniform(rng, 0, 5);
      y[i] = X(i, 0) + standard_normal(rng);
    }
    std::ostringstream os;
    write_dominance_csv(os, dominance_analysis(X, y, {"a", "b"}));
    CHECK(os.str().rfind("subset_mask,r2\n1,", 0) == 0);
    CHECK(os.str().find("predictor,interactional_dominance,relative_importance_pct\na,") != std::string::npos);
  }
}

TEST_CASE("dominance on a pick dataset") {
  PickDataset d;
  Rng rng(2);
  for (const TargetConfig& c : full_grid())
    for (int it = 0; it < 3; ++it) {
      const double units = 0.4 * c.lambda + 20 * (1.0 - c.tau) + 5 * c.spikes + 2 * standard_normal(rng);
      d.records.push_back({Protocol::Magnet, 100, c, it, 1, units * 0.1, 0.1, static_cast<int>(std::lround(units))});
    }
  const DominanceReport r = dominance_analysis(d);
  REQUIRE(r.predictors.size() == 3);
  CHECK(r.predictors[0] == "length");
  CHECK(r.predictors[1] == "thickness");
  CHECK(r.predictors[2] == "spikes");
  CHECK(r.relative_importance_pct[0] > r.relative_importance_pct[1]);
  CHECK(r.relative_importance_pct[1] > r.relative_importance_pct[2]);
}

TEST_CASE("distribution functions match the Boost oracle") {
  for (double df : {1.0, 2.0, 3.5, 9.0, 18.0, 60.0, 400.0})
    for (double t = -8.0; t <= 8.0; t += 0.25) {
      CAPTURE(df);
      CAPTURE(t);
      CHECK(std::abs(student_t_cdf(t, df) - boost_t_cdf(t, df)) < 1e-6);
    }
  for (double d1 : {1.0, 4.0, 9.0, 30.0})
    for (double d2 : {1.0, 5.0, 9.0, 50.0})
      for (double f = 0.0; f <= 10.0; f += 0.2) {
        CAPTURE(d1);
        CAPTURE(d2);
        CAPTURE(f);
        CHECK(std::abs(f_cdf(f, d1, d2) - boost_f_cdf(f, d1, d2)) < 1e-6);
      }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37));
}

TEST_CASE("t test") {
  const std::vector<double> a = {3.1, 4.2, 5.0, 4.4, 3.9};
  SUBCASE("identical samples") {
    const TestResult r = t_test_mean(a, a);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK_FALSE(r.significant);
    CHECK(r.kind == TestKind::TTestMean);
  }
  SUBCASE("separated means") {
    const std::vector<double> lo = {0.01, 0.02, 0.0, 0.03, 0.01}, hi = {10.01, 10.0, 10.02, 10.03, 10.01};
    const TestResult r = t_test_mean(lo, hi);
    CHECK(r.p_value < 0.01);
    CHECK(r.significant);
  }
  SUBCASE("independent implementation and swap invariance") {
    Rng rng(77);
    for (int k = 0; k < 50; ++k) {
      const auto x = normal_sample(rng, 5 + k % 7, 10.0, 2.0), y = normal_sample(rng, 4 + k % 5, 11.0, 1.0 + k % 3);
      const TestResult r = t_test_mean(x, y);
      CHECK(std::abs(r.p_value - welch_p(x, y)) < 1e-6);
      CHECK(r.p_value >= 0.0);
      CHECK(r.p_value <= 1.0);
      CHECK(t_test_mean(y, x).p_value == doctest::Approx(r.p_value).epsilon(1e-12));
      CHECK(t_test_mean(y, x).statistic == doctest::Approx(-r.statistic));
    }
  }
  SUBCASE("errors") {
    const std::vector<double> c = {2, 2, 2};
    CHECK_THROWS_AS(t_test_mean(c, c), InvalidArgument);
    const std::vector<double> one = {1.0};
    CHECK_THROWS_AS(t_test_mean(one, a), InvalidArgument);
  }
}

TEST_CASE("f test") {
  const std::vector<double> a = {3.1, 4.2, 5.0, 4.4, 3.9};
  const TestResult same = f_test_variance(a, a);
  CHECK(same.statistic == doctest::Approx(1.0));
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK(same.kind == TestKind::FTestVariance);

  std::vector<double> shifted = a;
  for (double& v : shifted) v += 7.0;
  CHECK(f_test_variance(a, shifted).statistic == doctest::Approx(1.0));

  Rng rng(78);
  for (int k = 0; k < 50; ++k) {
    const auto x = normal_sample(rng, 6 + k % 5, 0.0, 1.0), y = normal_sample(rng, 5 + k % 8, 0.0, 1.0 + 0.5 * (k % 4));
    const TestResult r = f_test_variance(x, y);
    CHECK(r.statistic >= 1.0);
    CHECK(std::abs(r.p_value - f_test_p(x, y)) < 1e-6);
    CHECK(f_test_variance(y, x).p_value == doctest::Approx(r.p_value));
  }
  const std::vector<double> c = {2, 2, 2};
  CHECK_THROWS_AS(f_test_variance(c, a), InvalidArgument);

  std::ostringstream os;
  write_test_csv(os, same);
  CHECK(os.str().rfind("kind,statistic,p_value,df1,df2,significant\n", 0) == 0);
}

TEST_CASE("normalized std") {
  const std::vector<double> c = {4, 4, 4, 4};
  CHECK(normalized_std(c) == 0.0);
  const std::vector<double> pair = {8, 12};
  CHECK(mean(pair) == 10.0);
  CHECK(sample_std(pair) == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(normalized_std(pair) == doctest::Approx(0.2828427).epsilon(1e-6));
  std::vector<double> x = {1.5, 7.0, 3.25, 9.0}, kx;
  for (double v : x) kx.push_back(3.7 * v);
  CHECK(normalized_std(kx) == doctest::Approx(normalized_std(x)).epsilon(1e-12));
  const std::vector<double> zero = {-1, 1};
  CHECK_THROWS_AS(normalized_std(zero), InvalidArgument);
  const std::vector<double> single = {5};
  CHECK(sample_std(single) == 0.0);
}

TEST_CASE("spearman") {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6};
  const std::vector<double> up = {2, 4, 9, 16, 30, 31}, down = {9, 7, 5, 3, 2, 1}, tied = {1, 1, 2, 2, 3, 3};
  CHECK(spearman(x, up).rho == doctest::Approx(1.0));
  CHECK(spearman(x, down).rho == doctest::Approx(-1.0));
  CHECK(spearman(x, up).p_value < 0.01);
  const Correlation t = spearman(x, tied);
  CHECK(t.rho > 0.9);
  CHECK(t.rho < 1.0);
  const std::vector<double> c = {1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(spearman(x, c), InvalidArgument);
  const std::vector<double> two = {1, 2};
  CHECK_THROWS_AS(spearman(two, two), InvalidArgument);
}
