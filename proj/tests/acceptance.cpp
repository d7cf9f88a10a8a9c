// Acceptance checks, one PASS/FAIL line each. `acceptance --only N` runs a
// single criterion; the exit status is nonzero when any run criterion fails.

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tangle/config.hpp"
#include "tangle/dataio.hpp"
#include "tangle/deposit.hpp"
#include "tangle/distance.hpp"
#include "tangle/entangle.hpp"
#include "tangle/model.hpp"
#include "tangle/pick.hpp"
#include "tangle/simulate.hpp"
#include "tangle/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace tangle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool rel_eq(double got, double want, double tol = 1e-9) {
  if (want == 0.0) return std::abs(got) <= tol;
  return std::abs(got - want) <= tol * std::abs(want);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1 ------------------------------------------------------------------------

Outcome formulas() {
  int bad = 0, total = 0;
  std::string first;
  auto check = [&](const std::string& what, double got, double want) {
    ++total;
    if (!rel_eq(got, want)) {
      ++bad;
      if (first.empty()) first = what + " got " + fmt("%.17g", got) + " want " + fmt("%.17g", want);
    }
  };

  const double integ[][3] = {{20, 5, 0.75}, {10, 0, 1.0}, {12.5, 2.5, 0.8}, {8, 8, 0.0}, {25, 1, 0.96}, {3, 0.3, 0.9}};
  for (const auto& c : integ) check("integrity", integrity(c[0], c[1]), c[2]);

  const double pf[][3] = {{1, 4, 0.25}, {2, 5, 0.4}, {7, 10, 0.7}, {0.9, 1.5, 0.6}, {5, 8, 0.625}};
  for (const auto& c : pf) check("packing_fraction", packing_fraction(c[0], c[1]), c[2]);

  const double ei[][3] = {{3.05, 0.12, 366.0}, {2, 0.5, 1000.0}, {200, 0.001, 200.0}, {4, 0.0008, 3.2}, {1, 1, 1000.0}};
  for (const auto& c : ei) check("bending_stiffness", bending_stiffness(c[0], c[1]), c[2]);

  const double pu[][3] = {{2.0, 0.2, 10}, {1.04, 0.1, 10}, {0.0, 0.3, 0}, {55.0, 0.5, 100}, {0.76, 0.2, 4}, {3.3, 0.3, 11}};
  for (const auto& c : pu) check("picked_units", picked_units(c[0], c[1]), c[2]);

  struct NmseCase {
    std::vector<double> y, yhat;
    double sigma, want;
  };
  const std::vector<NmseCase> nm = {{{1, 2, 3}, {1, 2, 4}, 2.0, 1.0 / 6.0},
                                    {{0, 0}, {3, 4}, 5.0, 2.5},
                                    {{10}, {8}, 4.0, 1.0},
                                    {{1, 2, 3, 4}, {1, 2, 3, 4}, 1.0, 0.0},
                                    {{2, 4}, {1, 1}, 0.5, 10.0}};
  for (const NmseCase& c : nm) check("nmse", nmse(c.y, c.yhat, c.sigma), c.want);

  const double mf[][3] = {{-50, -100, 0.5}, {-75, -100, 0.25}, {-100, -100, 0.0}, {-10, -40, 0.75}, {-1, -5, 0.8}};
  for (const auto& c : mf) check("mcfadden_r2", mcfadden_r2(c[0], c[1]), c[2]);

  const std::vector<std::pair<std::vector<double>, double>> ns = {{{1, 2, 3}, 0.5},
                                                                   {{2, 4, 4, 4, 5, 5, 7, 9}, std::sqrt(32.0 / 7.0) / 5.0},
                                                                   {{10, 10, 10}, 0.0},
                                                                   {{1, 3}, std::sqrt(2.0) / 2.0},
                                                                   {{4, 8}, std::sqrt(2.0) / 3.0},
                                                                   {{0, 10, 20}, 1.0}};
  for (const auto& [x, want] : ns) check("normalized_std", normalized_std(x), want);

  return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " cases exact" +
                        (first.empty() ? "" : "; first miss: " + first)};
}

// 2 ------------------------------------------------------------------------

Outcome table_fixture() {
  const std::vector<double> ids = {0.591, 0.130, 0.072};
  const std::vector<double> want = {74.41, 16.45, 9.14};
  const auto pct = relative_importance(ids, 0.794);
  double worst = 0.0;
  std::string d = "got";
  for (std::size_t k = 0; k < 3; ++k) {
    worst = std::max(worst, std::abs(pct[k] - want[k]));
    d += fmt(" %.3f", pct[k]);
  }
  return {worst <= 0.05, d + " vs 74.41 16.45 9.14, worst " + fmt("%.3f", worst) + " pp (tol 0.05)"};
}

// 3 ------------------------------------------------------------------------

Outcome model_recovery() {
  std::string d;
  bool pass = true;
  for (bool spiky : {false, true}) {
    const ModelParams gen = synthetic::generator(spiky);
    const double sigma = spiky ? kSigmaSpiky : kSigmaNonSpiky;
    Rng rng(spiky ? 303 : 302);
    int ok = 0;
    std::vector<double> vals;
    for (std::uint64_t split = 1; split <= 10; ++split) {
      const auto rows = synthetic::cohort(gen, spiky, 10, 0.1 * sigma, rng);
      const double v = fit(rows, spiky, split).nmse_test;
      vals.push_back(v);
      if (v <= 0.12) ++ok;
    }
    pass = pass && ok >= 9;
    d += std::string(spiky ? "spiky" : "non-spiky") + " " + std::to_string(ok) + "/10 splits <= 0.12 (median " +
         fmt("%.3f", median(vals)) + ") ";
  }
  return {pass, d};
}

// 4 ------------------------------------------------------------------------

Outcome calibration() {
  Rng rng(404);
  int inside = 0, total = 0;
  for (int t = 0; t < 500; ++t) {
    const bool spiky = t % 2;
    const ModelParams gen = synthetic::generator(spiky);
    const double noise = 0.1 * (spiky ? kSigmaSpiky : kSigmaNonSpiky);
    const auto rows = synthetic::cohort(gen, spiky, 10, noise, rng);
    const FitReport f = fit(rows, spiky, static_cast<std::uint64_t>(t));
    const PosteriorSummary post = bayes_fit(rows, f.params);
    for (const TargetConfig& c : full_grid()) {
      if ((c.spikes > 0) != spiky) continue;
      const double y = predict(c.tau, c.lambda, gen) + noise * standard_normal(rng);
      const Prediction p = post.predict(c.tau, c.lambda);
      inside += std::abs(y - p.mean) <= p.std;
      ++total;
    }
  }
  const double pct = 100.0 * inside / total;
  return {std::abs(pct - 100.0 * 2.0 / 3.0) <= 5.0,
          fmt("%.2f%%", pct) + " of " + std::to_string(total) + " held-out points inside 1 std (target 66.7 +- 5)"};
}

// 5 ------------------------------------------------------------------------

double var(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

double welch_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = a.size(), nb = b.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na, mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  const double qa = var(a) / na, qb = var(b) / nb;
  const double t = (ma - mb) / std::sqrt(qa + qb);
  const double df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(t)));
}

double f_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double va = var(a), vb = var(b);
  const bool a_big = va >= vb;
  const double f = a_big ? va / vb : vb / va;
  const double d1 = (a_big ? a.size() : b.size()) - 1.0, d2 = (a_big ? b.size() : a.size()) - 1.0;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f)));
}

Outcome oracles() {
  Rng rng(505);
  auto point = [&] { return Vec3(uniform(rng, -6, 6), uniform(rng, -6, 6), uniform(rng, -6, 6)); };
  double worst_d = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Capsule a{point(), point(), uniform(rng, 0.1, 1.0)};
    Capsule b{point(), point(), uniform(rng, 0.1, 1.0)};
    if (k % 10 == 0) b.b = b.a + 0.7 * (a.b - a.a);
    if (k % 17 == 0) a.b = a.a;
    worst_d = std::max(worst_d, std::abs(capsule_closest_distance(a, b).distance - oracle::sampled_capsule_distance(a, b)));
  }

  double worst_p = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int na = 3 + static_cast<int>(uniform_index(rng, 30)), nb = 3 + static_cast<int>(uniform_index(rng, 30));
    std::vector<double> a, b;
    const double shift = uniform(rng, -1.5, 1.5), scale = uniform(rng, 0.3, 3.0);
    for (int i = 0; i < na; ++i) a.push_back(standard_normal(rng));
    for (int i = 0; i < nb; ++i) b.push_back(shift + scale * standard_normal(rng));
    worst_p = std::max(worst_p, std::abs(t_test_mean(a, b).p_value - welch_p(a, b)));
    worst_p = std::max(worst_p, std::abs(f_test_variance(a, b).p_value - f_p(a, b)));
  }

  const auto poses = fixtures::corpus();
  int agree = 0;
  for (const fixtures::Pose& p : poses) {
    const bool h = interlock_test(p.a, p.b).entangled || interlock_test(p.b, p.a).entangled;
    agree += h == escape_oracle(p.a, p.b);
  }
  const double agreement = static_cast<double>(agree) / poses.size();

  const bool pass = worst_d <= 1e-3 && worst_p <= 1e-6 && agreement >= 0.9;
  return {pass, "distance worst " + fmt("%.2e", worst_d) + " mm (tol 1e-3); p-value worst " + fmt("%.2e", worst_p) +
                    " (tol 1e-6); interlock agreement " + std::to_string(agree) + "/" + std::to_string(poses.size())};
}

// 6 ------------------------------------------------------------------------

Outcome integrity_ordering() {
  const RunConfig cfg;
  std::map<GrainType, double> med;
  std::string d;
  for (GrainType type : {GrainType::V, GrainType::IV, GrainType::VII, GrainType::I}) {
    std::vector<double> v;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      v.push_back(integrity_run(type, cfg.segments, cfg.grain_density_gcc, seed, cfg.study.params).integrity);
    med[type] = median(v);
    d += std::string(to_string(type)) + " " + fmt("%.3f", med[type]) + " ";
  }
  const bool pass = med[GrainType::V] >= med[GrainType::IV] && med[GrainType::V] >= med[GrainType::VII] &&
                    med[GrainType::V] > med[GrainType::I] && med[GrainType::I] < 0.6;
  return {pass, "median integrity " + d + "(need V >= IV, V >= VII, V > I, I < 0.6)"};
}

// 7 ------------------------------------------------------------------------

Outcome picking_trends() {
  StudySpec spec;
  spec.iterations = 10;
  std::vector<std::string> failures;
  const PickDataset data = run_parametric_study(full_grid(), spec, 7, &failures);
  std::vector<double> tau, lambda, spikes, means;
  for (const GroupSummary& g : summarize(data)) {
    tau.push_back(g.key.target.tau);
    lambda.push_back(g.key.target.lambda);
    spikes.push_back(g.key.target.spikes);
    means.push_back(g.mean);
  }
  const Correlation ct = spearman(tau, means), cl = spearman(lambda, means), cs = spearman(spikes, means);
  const bool pass = means.size() == 27 && cl.rho > 0 && cl.p_value < 0.05 && cs.rho > 0 && cs.p_value < 0.05 &&
                    ct.rho < 0 && ct.p_value < 0.05;
  return {pass, std::to_string(means.size()) + " cells, " + std::to_string(failures.size()) + " failed picks; lambda rho " +
                    fmt("%.3f", cl.rho) + " p " + fmt("%.3g", cl.p_value) + ", spikes rho " + fmt("%.3f", cs.rho) + " p " +
                    fmt("%.3g", cs.p_value) + ", tau rho " + fmt("%.3f", ct.rho) + " p " + fmt("%.3g", ct.p_value)};
}

// 8 ------------------------------------------------------------------------

Outcome grain_count_control() {
  // Thin, long, branched: the grid cell closest to a leafy target.
  const TargetConfig cell{0.2, 120, 2};
  const auto units = [](const PickDataset& d) {
    std::vector<double> y;
    for (const PickRecord& r : d.records) y.push_back(r.picked_units);
    return y;
  };
  StudySpec spec;
  std::vector<double> medians;
  std::vector<double> top;
  std::string d = "medians";
  for (int n : {25, 50, 75, 100, 125, 150}) {
    spec.grain_count = n;
    const auto y = units(run_parametric_study({cell}, spec, 7));
    medians.push_back(median(y));
    d += fmt(" %.1f", medians.back());
    if (n == 150) top = y;
  }
  spec.protocol = Protocol::Gripper;
  const auto grip = units(run_parametric_study({cell}, spec, 7));
  const bool monotone = std::is_sorted(medians.begin(), medians.end());
  const double ns_magnet = normalized_std(top), ns_gripper = normalized_std(grip);
  return {monotone && ns_magnet < ns_gripper, d + "; normalized std magnet(150) " + fmt("%.3f", ns_magnet) +
                                                  " vs gripper " + fmt("%.3f", ns_gripper) +
                                                  " (gripper median " + fmt("%.1f", median(grip)) + ")"};
}

// 9 ------------------------------------------------------------------------

Outcome determinism() {
  const RunConfig cfg = parse_config(
      "seed = 21\ngrid = single\ntarget.tau_mm = 0.4\ntarget.lambda_mm = 60\ntarget.spikes = 1\niterations = 3\n"
      "grain_count = 8\nunits = 12\nbed_relax_steps = 100\nbed_settle_steps = 200\nsupply.settle_steps = 200\n"
      "return_settle_steps = 100\n");
  const ExperimentRun run = simulate_run(cfg);
  const fs::path dir = fs::temp_directory_path() / "tangle_acceptance_run";
  fs::remove_all(dir);
  save_run(run, dir);
  const bool replay_ok = to_csv(replay(load_run(dir))) == to_csv(run.dataset);
  fs::remove_all(dir);

  const bool seed_ok = to_csv(simulate_run(cfg).dataset) == to_csv(run.dataset);

  const std::string csv = to_csv(run.dataset);
  std::istringstream is(csv);
  const bool csv_ok = to_csv(read_csv(is)) == csv;

  ModelParams p = synthetic::generator(true);
  p.omega1 = 0.1 + 0.2;
  p.theta1 = std::exp(1.0);
  std::stringstream ms;
  write_model(ms, p);
  const ModelParams q = read_model(ms);
  const bool model_ok = q.omega1 == p.omega1 && q.omega2 == p.omega2 && q.theta1 == p.theta1 &&
                        q.theta2 == p.theta2 && q.L == p.L && q.L0 == p.L0 && q.spiky == p.spiky &&
                        q.sigma_normalizer == p.sigma_normalizer;

  const auto yn = [](bool b) { return b ? "ok" : "MISMATCH"; };
  return {replay_ok && seed_ok && csv_ok && model_ok, std::string("replay ") + yn(replay_ok) + ", same seed " +
                                                          yn(seed_ok) + ", csv " + yn(csv_ok) + ", model file " +
                                                          yn(model_ok)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"formula exactness", formulas},
      {"dominance table fixture", table_fixture},
      {"model recovery", model_recovery},
      {"bayesian calibration", calibration},
      {"oracle equivalence", oracles},
      {"integrity ordering", integrity_ordering},
      {"picking trends", picking_trends},
      {"grain-count control", grain_count_control},
      {"determinism and round trips", determinism}};

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s | %s | %.1f s\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
