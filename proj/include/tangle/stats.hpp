#pragma once

// Dominance analysis with McFadden pseudo-R^2, two-sample tests and the
// distribution functions behind them.

#include "tangle/pick.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tangle {

/// 1 - ll_full / ll_null. Throws InvalidArgument when ll_null is 0.
double mcfadden_r2(double ll_full, double ll_null);

/// Gaussian log-likelihood of the OLS fit of y on [1, X] with the
/// maximum-likelihood residual variance. X may have zero columns.
double ols_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct DominanceReport {
  std::vector<std::string> predictors;
  std::map<unsigned, double> subset_r2;  // bit k set: predictor k included
  std::vector<unsigned> failed_subsets;  // singular designs, left out of subset_r2
  double full_r2 = 0.0;
  std::vector<double> interactional_dominance;  // R2_full - R2_without_k
  std::vector<double> relative_importance_pct;  // 100 * ID / R2_full
};

/// Fits all 2^n - 1 subset models (plus the intercept-only null) and
/// derives interactional dominance and relative importance.
DominanceReport dominance_analysis(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const std::vector<std::string>& predictors);

/// Predictors length, thickness and spikes against picked units.
DominanceReport dominance_analysis(const PickDataset& data);

/// 100 * ID / full_r2 per entry. Throws InvalidArgument for full_r2 <= 0.
std::vector<double> relative_importance(std::span<const double> interactional_dominance, double full_r2);

/// CSV `subset_mask,r2` then a `predictor,interactional_dominance,relative_importance_pct` block.
void write_dominance_csv(std::ostream& os, const DominanceReport& report);

enum class TestKind { TTestMean, FTestVariance };

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;
  double df2 = 0.0;  // F test only
  TestKind kind = TestKind::TTestMean;
  bool significant = false;  // p < 0.01
};

inline constexpr double kSignificance = 0.01;

/// Welch two-sample t test, two-sided.
TestResult t_test_mean(std::span<const double> a, std::span<const double> b);

/// Ratio of sample variances (larger over smaller), two-sided p.
TestResult f_test_variance(std::span<const double> a, std::span<const double> b);

/// kind,statistic,p_value,df1,df2,significant
void write_test_csv(std::ostream& os, const TestResult& r);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for a single value.
double sample_std(std::span<const double> x);
/// sample_std / mean. Throws InvalidArgument for a zero mean.
double normalized_std(std::span<const double> x);

/// Regularized incomplete beta I_x(a, b) by continued fraction; relative
/// tolerance 1e-10.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
double f_cdf(double f, double df1, double df2);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, t approximation with n - 2 df
};

/// Spearman rank correlation with average ranks for ties.
Correlation spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tangle
