#include "tangle/model.hpp"

#include "tangle/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>

namespace tangle {

void ModelParams::validate() const {
  if (!(L > 0.0)) throw InvalidArgument("model", "L must be positive");
  if (!(L0 >= 0.0)) throw InvalidArgument("model", "L0 must be non-negative");
  if (!std::isfinite(omega1) || !std::isfinite(omega2) || !std::isfinite(theta1) || !std::isfinite(theta2))
    throw InvalidArgument("model", "non-finite model parameter");
  if (!(sigma_normalizer > 0.0)) throw InvalidArgument("model", "sigma normalizer must be positive");
}

double predict_clamped(double tau, double lambda, const ModelParams& p, int available) {
  return std::clamp(predict(tau, lambda, p), 0.0, static_cast<double>(available));
}

double nmse(std::span<const double> y, std::span<const double> yhat, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("model", "sigma must be positive");
  if (y.size() != yhat.size()) throw InvalidArgument("model", "length mismatch");
  if (y.empty()) throw InvalidArgument("model", "nmse of no values");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / static_cast<double>(y.size()) / sigma;
}

std::vector<Observation> cohort(const PickDataset& data, bool spiky) {
  std::vector<Observation> rows;
  for (const auto& r : data.records)
    if ((r.target.spikes > 0) == spiky) rows.push_back({r.target.tau, r.target.lambda, static_cast<double>(r.picked_units)});
  return rows;
}

namespace {

Eigen::MatrixX2d design(std::span<const Observation> rows, double theta1, double theta2, double L, double L0) {
  Eigen::MatrixX2d X(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = phi(rows[i].tau, theta1, theta2, L, L0) * rows[i].lambda;
    X(static_cast<Eigen::Index>(i), 1) = 1.0;
  }
  return X;
}

Eigen::VectorXd targets(std::span<const Observation> rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = rows[i].y;
  return y;
}

bool degenerate(const Eigen::MatrixX2d& X) {
  const double lo = X.col(0).minCoeff(), hi = X.col(0).maxCoeff();
  return !(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)));
}

double cohort_sigma(bool spiky, const FitOptions& o) { return o.sigma > 0.0 ? o.sigma : (spiky ? kSigmaSpiky : kSigmaNonSpiky); }

}  // namespace

LinearWeights fit_weights(std::span<const Observation> rows, double theta1, double theta2, double L, double L0) {
  const Eigen::MatrixX2d X = design(rows, theta1, theta2, L, L0);
  if (rows.size() < 2 || degenerate(X)) throw DegenerateDesign("all phi(tau) * lambda values are identical");
  const Eigen::Vector2d w = X.colPivHouseholderQr().solve(targets(rows));
  return {w[0], w[1]};
}

double loo_nmse(std::span<const Observation> rows, double theta1, double theta2, double sigma, double L, double L0) {
  if (!(sigma > 0.0)) throw InvalidArgument("model", "sigma must be positive");
  const Eigen::MatrixX2d X = design(rows, theta1, theta2, L, L0);
  if (rows.size() < 3 || degenerate(X)) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd y = targets(rows);
  const Eigen::Matrix2d G = (X.transpose() * X).inverse();
  const Eigen::Vector2d w = G * X.transpose() * y;
  const Eigen::VectorXd resid = y - X * w;
  const Eigen::VectorXd h = ((X * G).array() * X.array()).rowwise().sum();
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(1.0 - h[i] > 1e-12)) return std::numeric_limits<double>::infinity();
    const double e = resid[i] / (1.0 - h[i]);
    s += e * e;
  }
  return s / static_cast<double>(y.size()) / sigma;
}

FitReport fit(std::span<const Observation> input, bool spiky, std::uint64_t split_seed, const FitOptions& options) {
  if (input.size() < 10) throw InvalidArgument("model", "fit needs at least 10 rows");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
    throw InvalidArgument("model", "train fraction must lie in (0, 1)");
  const double sigma = cohort_sigma(spiky, options);

  std::vector<Observation> rows(input.begin(), input.end());
  std::sort(rows.begin(), rows.end(), [](const Observation& a, const Observation& b) {
    return std::tie(a.tau, a.lambda, a.y) < std::tie(b.tau, b.lambda, b.y);
  });
  Rng rng(split_seed);
  for (std::size_t i = rows.size() - 1; i > 0; --i) std::swap(rows[i], rows[uniform_index(rng, i + 1)]);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround((1.0 - options.train_fraction) * static_cast<double>(rows.size()))));
  const std::span<const Observation> test(rows.data(), n_test);
  const std::span<const Observation> train(rows.data() + n_test, rows.size() - n_test);

  // phi(tau) * lambda is constant for every theta only when all inputs coincide or lambda is zero.
  const bool constant_inputs = std::all_of(train.begin(), train.end(), [&](const Observation& r) {
    return (r.tau == train.front().tau && r.lambda == train.front().lambda) || r.lambda == 0.0;
  });
  if (constant_inputs) throw DegenerateDesign("all phi(tau) * lambda values are identical");

  // Grid, lowest index wins ties.
  double best = std::numeric_limits<double>::infinity();
  double b1 = 0.0, b2 = 0.0;
  for (int i = 0; i < options.grid_theta1; ++i) {
    const double t1 = options.grid_theta1 == 1
                          ? options.theta1_min
                          : options.theta1_min * std::pow(options.theta1_max / options.theta1_min,
                                                          static_cast<double>(i) / (options.grid_theta1 - 1));
    for (int j = 0; j < options.grid_theta2; ++j) {
      const double t2 = options.grid_theta2 == 1 ? options.theta2_min
                                                 : options.theta2_min + (options.theta2_max - options.theta2_min) * j /
                                                                            (options.grid_theta2 - 1);
      const double v = loo_nmse(train, t1, t2, sigma);
      if (v < best) {
        best = v;
        b1 = t1;
        b2 = t2;
      }
    }
  }
  if (!std::isfinite(best)) throw DegenerateDesign("no (theta1, theta2) gives a usable design");

  // Polish in (log theta1, theta2).
  auto objective = [&](const Eigen::Vector2d& z) {
    const double v = loo_nmse(train, std::exp(z.x()), z.y(), sigma);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  const NelderMeadResult nm = nelder_mead(objective, Eigen::Vector2d(std::log(b1), b2), Eigen::Vector2d(0.1, 0.05),
                                          options.polish_iterations);
  if (nm.value < best) {
    best = nm.value;
    b1 = std::exp(nm.x.x());
    b2 = nm.x.y();
  }

  FitReport rep;
  rep.sigma = sigma;
  rep.loo = best;
  rep.n_train = train.size();
  rep.n_test = test.size();
  const LinearWeights w = fit_weights(train, b1, b2);
  rep.params = {w.omega1, w.omega2, b1, b2, kLogisticRange, kLogisticFloor, spiky, sigma};
  auto score = [&](std::span<const Observation> part) {
    std::vector<double> y, yh;
    for (const auto& r : part) {
      y.push_back(r.y);
      yh.push_back(predict(r.tau, r.lambda, rep.params));
    }
    return nmse(y, yh, sigma);
  };
  rep.nmse_train = score(train);
  rep.nmse_test = score(test);
  return rep;
}

FitReport fit(const PickDataset& data, bool spiky, std::uint64_t split_seed, const FitOptions& options) {
  const std::vector<Observation> rows = cohort(data, spiky);
  return fit(rows, spiky, split_seed, options);
}

Prediction PosteriorSummary::predict(double tau, double lambda) const {
  const Eigen::Vector2d x(phi(tau, params) * lambda, 1.0);
  const double var = x.dot(weight_covariance * x) + noise_variance;
  return {x.dot(weight_mean), std::sqrt(std::max(var, 0.0))};
}

PosteriorSummary bayes_fit(std::span<const Observation> rows, const ModelParams& nonlinear, const BayesOptions& options) {
  if (rows.empty()) throw InvalidArgument("model", "bayes fit of an empty cohort");
  if (!(options.prior_variance > 0.0)) throw InvalidArgument("model", "prior variance must be positive");
  nonlinear.validate();
  const Eigen::MatrixX2d X = design(rows, nonlinear.theta1, nonlinear.theta2, nonlinear.L, nonlinear.L0);
  if (degenerate(X)) throw DegenerateDesign("all phi(tau) * lambda values are identical");
  const Eigen::VectorXd y = targets(rows);

  double noise = options.noise_variance;
  if (!(noise > 0.0)) {
    if (rows.size() < 3) throw InvalidArgument("model", "residual variance needs at least 3 rows");
    const Eigen::Vector2d w = X.colPivHouseholderQr().solve(y);
    noise = (y - X * w).squaredNorm() / static_cast<double>(rows.size() - 2);
    // Exact data: keep the likelihood finite and let it dominate the prior.
    noise = std::max(noise, 1e-24 * std::max(1.0, y.squaredNorm() / static_cast<double>(rows.size())));
  }

  PosteriorSummary out;
  out.noise_variance = noise;
  const Eigen::Matrix2d precision =
      X.transpose() * X / noise + Eigen::Matrix2d::Identity() / options.prior_variance;
  const Eigen::LDLT<Eigen::Matrix2d> ldlt(precision);
  out.weight_covariance = ldlt.solve(Eigen::Matrix2d::Identity());
  out.weight_covariance = 0.5 * (out.weight_covariance + out.weight_covariance.transpose()).eval();
  out.weight_mean = ldlt.solve(X.transpose() * y / noise);
  out.params = nonlinear;
  out.params.omega1 = out.weight_mean[0];
  out.params.omega2 = out.weight_mean[1];
  return out;
}

void write_model(std::ostream& os, const ModelParams& p) {
  char buf[64];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << key << '=' << buf << '\n';
  };
  line("omega1", p.omega1);
  line("omega2", p.omega2);
  line("theta1_per_mm", p.theta1);
  line("theta2_mm", p.theta2);
  line("L", p.L);
  line("L0", p.L0);
  os << "spiky=" << (p.spiky ? 1 : 0) << '\n';
  line("sigma_normalizer", p.sigma_normalizer);
}

ModelParams read_model(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("model", "line " + std::to_string(n) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto num = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidArgument("model", std::string("missing key '") + key + "'");
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') throw InvalidArgument("model", std::string("bad value for '") + key + "'");
    return v;
  };
  ModelParams p;
  p.omega1 = num("omega1");
  p.omega2 = num("omega2");
  p.theta1 = num("theta1_per_mm");
  p.theta2 = num("theta2_mm");
  p.L = num("L");
  p.L0 = num("L0");
  p.spiky = num("spiky") != 0.0;
  p.sigma_normalizer = num("sigma_normalizer");
  p.validate();
  return p;
}

}  // namespace tangle
