#include "tangle/stats.hpp"

#include "tangle/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

namespace tangle {

double mcfadden_r2(double ll_full, double ll_null) {
  if (ll_null == 0.0) throw InvalidArgument("stats", "null log-likelihood is zero");
  return 1.0 - ll_full / ll_null;
}

double ols_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  if (n < 2 || X.rows() != n) throw InvalidArgument("stats", "design and response sizes differ");
  Eigen::MatrixXd A(n, X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) throw InvalidArgument("stats", "singular design");
  const double rss = (y - A * qr.solve(y)).squaredNorm();
  const double var = std::max(rss / static_cast<double>(n), std::numeric_limits<double>::min());
  return -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

std::vector<double> relative_importance(std::span<const double> ids, double full_r2) {
  if (!(full_r2 > 0.0)) throw InvalidArgument("stats", "full-model R2 must be positive");
  std::vector<double> out;
  for (double d : ids) out.push_back(100.0 * d / full_r2);
  return out;
}

DominanceReport dominance_analysis(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const std::vector<std::string>& predictors) {
  const int p = static_cast<int>(X.cols());
  if (p < 1) throw InvalidArgument("stats", "need at least one predictor");
  if (p > 16) throw InvalidArgument("stats", "too many predictors for an exhaustive subset search");
  if (static_cast<int>(predictors.size()) != p) throw InvalidArgument("stats", "one name per predictor column");
  DominanceReport rep;
  rep.predictors = predictors;
  const double ll_null = ols_log_likelihood(Eigen::MatrixXd(y.size(), 0), y);

  const unsigned full = (1u << p) - 1u;
  for (unsigned mask = 1; mask <= full; ++mask) {
    Eigen::MatrixXd S(X.rows(), std::popcount(mask));
    for (int k = 0, c = 0; k < p; ++k)
      if (mask & (1u << k)) S.col(c++) = X.col(k);
    try {
      rep.subset_r2[mask] = mcfadden_r2(ols_log_likelihood(S, y), ll_null);
    } catch (const InvalidArgument&) {
      rep.failed_subsets.push_back(mask);
    }
  }
  const auto f = rep.subset_r2.find(full);
  if (f == rep.subset_r2.end()) throw InvalidArgument("stats", "full model design is singular");
  rep.full_r2 = f->second;
  for (int k = 0; k < p; ++k) {
    const unsigned without = full & ~(1u << k);
    double r2_without = 0.0;
    if (without != 0) {
      const auto it = rep.subset_r2.find(without);
      r2_without = it == rep.subset_r2.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    }
    rep.interactional_dominance.push_back(rep.full_r2 - r2_without);
  }
  if (rep.full_r2 > 0.0) rep.relative_importance_pct = relative_importance(rep.interactional_dominance, rep.full_r2);
  return rep;
}

DominanceReport dominance_analysis(const PickDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.records.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PickRecord& r = data.records[static_cast<std::size_t>(i)];
    X(i, 0) = r.target.lambda;
    X(i, 1) = r.target.tau;
    X(i, 2) = r.target.spikes;
    y[i] = r.picked_units;
  }
  return dominance_analysis(X, y, {"length", "thickness", "spikes"});
}

void write_dominance_csv(std::ostream& os, const DominanceReport& rep) {
  char buf[64];
  os << "subset_mask,r2\n";
  for (const auto& [mask, r2] : rep.subset_r2) {
    std::snprintf(buf, sizeof buf, "%.9g", r2);
    os << mask << ',' << buf << '\n';
  }
  os << "\npredictor,interactional_dominance,relative_importance_pct\n";
  for (std::size_t k = 0; k < rep.predictors.size(); ++k) {
    os << rep.predictors[k] << ',';
    std::snprintf(buf, sizeof buf, "%.9g", rep.interactional_dominance[k]);
    os << buf << ',';
    if (k < rep.relative_importance_pct.size()) {
      std::snprintf(buf, sizeof buf, "%.9g", rep.relative_importance_pct[k]);
      os << buf;
    }
    os << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.9g", rep.full_r2);
  os << "full_r2," << buf << '\n';
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("stats", "mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  const double m = mean(x);
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double normalized_std(std::span<const double> x) {
  const double m = mean(x);
  if (m == 0.0) throw InvalidArgument("stats", "normalized std of a zero-mean sample");
  return sample_std(x) / m;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 1e-10;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps * 1e-3) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("stats", "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(ln_front) * beta_fraction(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("stats", "degrees of freedom must be positive");
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

double f_cdf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw InvalidArgument("stats", "degrees of freedom must be positive");
  if (f <= 0.0) return 0.0;
  return incomplete_beta(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2));
}

namespace {

double sample_var(std::span<const double> x) {
  const double s = sample_std(x);
  return s * s;
}

}  // namespace

TestResult t_test_mean(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("stats", "t test needs at least two values per sample");
  const double va = sample_var(a) / static_cast<double>(a.size());
  const double vb = sample_var(b) / static_cast<double>(b.size());
  if (va + vb == 0.0) throw InvalidArgument("stats", "both samples have zero variance");
  TestResult r;
  r.kind = TestKind::TTestMean;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.df1 = (va + vb) * (va + vb) /
          (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const double t = std::abs(r.statistic);
  r.p_value = std::clamp(incomplete_beta(0.5 * r.df1, 0.5, r.df1 / (r.df1 + t * t)), 0.0, 1.0);
  r.significant = r.p_value < kSignificance;
  return r;
}

TestResult f_test_variance(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("stats", "F test needs at least two values per sample");
  double va = sample_var(a), vb = sample_var(b);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  if (va == 0.0 || vb == 0.0) throw InvalidArgument("stats", "F test with a zero-variance sample");
  if (va < vb) {
    std::swap(va, vb);
    std::swap(na, nb);
  }
  TestResult r;
  r.kind = TestKind::FTestVariance;
  r.statistic = va / vb;
  r.df1 = na - 1.0;
  r.df2 = nb - 1.0;
  // Upper tail via the complementary incomplete beta.
  const double upper = incomplete_beta(0.5 * r.df2, 0.5 * r.df1, r.df2 / (r.df2 + r.df1 * r.statistic));
  r.p_value = std::clamp(2.0 * upper, 0.0, 1.0);
  r.significant = r.p_value < kSignificance;
  return r;
}

void write_test_csv(std::ostream& os, const TestResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%d\n", r.kind == TestKind::TTestMean ? "t_test_mean" : "f_test_variance",
                r.statistic, r.p_value, r.df1, r.df2, r.significant ? 1 : 0);
  os << "kind,statistic,p_value,df1,df2,significant\n" << buf;
}

namespace {

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("stats", "length mismatch");
  if (x.size() < 3) throw InvalidArgument("stats", "spearman needs at least three pairs");
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("stats", "spearman of a constant sample");
  Correlation c;
  c.rho = sxy / std::sqrt(sxx * syy);
  const double df = static_cast<double>(x.size()) - 2.0;
  if (std::abs(c.rho) >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.rho * std::sqrt(df / (1.0 - c.rho * c.rho));
    c.p_value = std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
  }
  return c;
}

}  // namespace tangle
