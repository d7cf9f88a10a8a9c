#pragma once

// Picked-amount model: y = w1 * phi(tau) * lambda + w2, with phi a
// logistic in thickness. Fitting picks (theta1, theta2) by leave-one-out
// error and solves the weights in closed form; the Bayesian variant puts
// a Gaussian prior on the weights.

#include "tangle/pick.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace tangle {

inline constexpr double kLogisticRange = 0.6;  // L
inline constexpr double kLogisticFloor = 0.1;  // L0
inline constexpr double kSigmaNonSpiky = 27.44;
inline constexpr double kSigmaSpiky = 38.27;

struct ModelParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double theta1 = 1.0;  // 1/mm
  double theta2 = 0.5;  // mm
  double L = kLogisticRange;
  double L0 = kLogisticFloor;
  bool spiky = false;
  double sigma_normalizer = kSigmaNonSpiky;

  void validate() const;
};

template <typename Scalar>
Scalar phi(Scalar tau, Scalar theta1, Scalar theta2, Scalar L, Scalar L0) {
  using std::exp;
  return L / (Scalar(1) + exp(-theta1 * (tau - theta2))) + L0;
}

inline double phi(double tau, const ModelParams& p) { return phi(tau, p.theta1, p.theta2, p.L, p.L0); }

/// Raw prediction, not clamped.
inline double predict(double tau, double lambda, const ModelParams& p) {
  return p.omega1 * phi(tau, p) * lambda + p.omega2;
}

/// Elementwise over arrays of inputs.
template <typename DerivedT, typename DerivedL>
Eigen::ArrayXd predict(const Eigen::ArrayBase<DerivedT>& tau, const Eigen::ArrayBase<DerivedL>& lambda,
                       const ModelParams& p) {
  const Eigen::ArrayXd f = p.L / (1.0 + (-p.theta1 * (tau.derived().template cast<double>() - p.theta2)).exp()) + p.L0;
  return p.omega1 * f * lambda.derived().template cast<double>() + p.omega2;
}

/// Prediction clamped to [0, available] for reporting.
double predict_clamped(double tau, double lambda, const ModelParams& p, int available = kAvailableUnits);

/// Mean squared error divided by sigma (not sigma squared).
double nmse(std::span<const double> y, std::span<const double> yhat, double sigma);

struct Observation {
  double tau = 0.0;
  double lambda = 0.0;
  double y = 0.0;
};

/// Rows of one cohort (spiky: spikes > 0) with y = picked units.
std::vector<Observation> cohort(const PickDataset& data, bool spiky);

struct LinearWeights {
  double omega1 = 0.0;
  double omega2 = 0.0;
};

/// Least squares on features [phi(tau) lambda, 1]. Throws DegenerateDesign
/// when the first feature is constant.
LinearWeights fit_weights(std::span<const Observation> rows, double theta1, double theta2, double L = kLogisticRange,
                          double L0 = kLogisticFloor);

/// Mean held-out NMSE over leave-one-out folds, from the hat matrix of the
/// weight regression. Infinite when the design is degenerate.
double loo_nmse(std::span<const Observation> rows, double theta1, double theta2, double sigma,
                double L = kLogisticRange, double L0 = kLogisticFloor);

struct FitOptions {
  int grid_theta1 = 32;  // log-spaced
  double theta1_min = 0.1, theta1_max = 50.0;
  int grid_theta2 = 32;
  double theta2_min = 0.0, theta2_max = 2.0;
  double train_fraction = 0.9;
  int polish_iterations = 200;
  double sigma = 0.0;  // 0: the cohort constant
};

struct FitReport {
  ModelParams params;
  double nmse_train = 0.0;
  double nmse_test = 0.0;
  double loo = 0.0;  // mean held-out NMSE at the chosen thetas
  double sigma = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Rows are put in a canonical order, shuffled by `split_seed` and split
/// 90/10. Needs at least 10 rows.
FitReport fit(std::span<const Observation> rows, bool spiky, std::uint64_t split_seed, const FitOptions& options = {});
FitReport fit(const PickDataset& data, bool spiky, std::uint64_t split_seed, const FitOptions& options = {});

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

struct PosteriorSummary {
  Eigen::Vector2d weight_mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d weight_covariance = Eigen::Matrix2d::Zero();
  double noise_variance = 0.0;
  ModelParams params;  // nonlinear part; omega1/omega2 set to the posterior mean

  /// Predictive mean and one standard deviation (the band covering about
  /// two thirds of outcomes), noise included.
  Prediction predict(double tau, double lambda) const;
};

struct BayesOptions {
  double prior_variance = 1e4;
  double noise_variance = 0.0;  // 0: residual variance RSS / (n - 2) of the least-squares fit
};

PosteriorSummary bayes_fit(std::span<const Observation> rows, const ModelParams& nonlinear,
                           const BayesOptions& options = {});

/// key=value lines: omega1, omega2, theta1_per_mm, theta2_mm, L, L0,
/// spiky, sigma_normalizer. Doubles use 17 significant digits.
void write_model(std::ostream& os, const ModelParams& p);
ModelParams read_model(std::istream& is);

/// Minimizes `f` over R^2 from `start` with initial simplex step `step`.
struct NelderMeadResult {
  Eigen::Vector2d x;
  double value = 0.0;
  int iterations = 0;
};
template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::Vector2d& start, const Eigen::Vector2d& step, int max_iterations,
                             double tolerance = 1e-10);

}  // namespace tangle

#include "tangle/detail/nelder_mead.hpp"
