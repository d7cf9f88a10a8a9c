// tangle: batch driver for catalogs, cylinder runs, picking studies, model
// fitting and the statistics on picking datasets.

#include "tangle/config.hpp"
#include "tangle/dataio.hpp"
#include "tangle/deposit.hpp"
#include "tangle/error.hpp"
#include "tangle/geometry.hpp"
#include "tangle/model.hpp"
#include "tangle/stats.hpp"
#include "tangle/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace tangle;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> iterations;
  std::optional<int> grains;
  std::optional<std::string> grid;
  std::optional<std::string> cohort;
  std::optional<std::string> protocol;
  std::string data;
  std::string model;
  std::string a, b;
  std::vector<double> ids;
  std::optional<double> full_r2;
  std::optional<double> tau, lambda;
};

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot write " + path.string());
  out << text;
}

RunConfig load(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.iterations) c.study.iterations = *o.iterations;
  if (o.grains) c.study.grain_count = *o.grains;
  if (o.grid) c.grid = *o.grid == "full" ? GridMode::Full : GridMode::Single;
  if (o.protocol) c.study.protocol = parse_protocol(*o.protocol);
  return c;
}

void require_seed(const Options& o) {
  if (!o.seed) throw InvalidArgument("cli", "--seed is required for simulation commands");
}

PickDataset load_data(const Options& o) {
  if (o.data.empty()) throw InvalidArgument("cli", "--data <dataset.csv> is required");
  return ingest_csv(o.data);
}

bool spiky_cohort(const Options& o) {
  if (!o.cohort) throw InvalidArgument("cli", "--cohort {spiky|nonspiky} is required");
  return *o.cohort == "spiky";
}

fs::path out_dir(const Options& o) {
  fs::create_directories(o.out);
  return o.out;
}

void cmd_gen(const Options& o) {
  const RunConfig c = load(o);
  const fs::path dir = out_dir(o);
  std::vector<GrainShape> grains;
  for (GrainType t : c.grain_types) grains.push_back(build_grain(t));
  std::vector<TargetShape> targets;
  for (const TargetConfig& t : c.targets()) targets.push_back(build_target(t.tau, t.lambda, t.spikes));
  std::ostringstream gs, ts;
  write_grain_catalog(gs, grains);
  write_target_catalog(ts, targets);
  write_text(dir / "grains.txt", gs.str());
  write_text(dir / "targets.txt", ts.str());
  std::cout << grains.size() << " grains, " << targets.size() << " targets written to " << dir.string() << "\n";
}

BarChart per_type_bars(const std::string& title, const std::string& y_label,
                       const std::vector<std::pair<GrainType, std::vector<double>>>& rows) {
  BarChart chart;
  chart.title = title;
  chart.y_label = y_label;
  Series s;
  s.label = "mean";
  for (const auto& [type, v] : rows) {
    chart.categories.push_back(std::string(to_string(type)));
    s.y.push_back(mean(v));
    s.err.push_back(sample_std(v));
  }
  chart.series.push_back(s);
  return chart;
}

void cmd_pack(const Options& o, bool with_removal) {
  require_seed(o);
  const RunConfig c = load(o);
  const fs::path dir = out_dir(o);
  const ShakeSpec* shake = c.shake ? &c.shake_spec : nullptr;
  std::ostringstream csv;
  std::vector<std::pair<GrainType, std::vector<double>>> rows;
  csv << (with_removal ? "type,seed,h0_mm,h_after_mm,integrity,packing_fraction,converged\n"
                       : "type,seed,h0_mm,packing_fraction,converged\n");
  for (std::size_t k = 0; k < c.grain_types.size(); ++k) {
    const GrainType type = c.grain_types[k];
    std::vector<double> values;
    for (int s = 0; s < c.integrity_seeds; ++s) {
      const std::uint64_t seed = derive_seed(derive_seed(c.seed, k), static_cast<std::uint64_t>(s));
      if (with_removal) {
        const IntegrityRun r =
            integrity_run(type, c.segments, c.grain_density_gcc, seed, c.study.params, shake, c.removal);
        csv << to_string(type) << ',' << seed << ',' << g9(r.h0) << ',' << g9(r.h_after) << ',' << g9(r.integrity) << ','
            << g9(r.packing_fraction) << ',' << (r.converged ? 1 : 0) << '\n';
        values.push_back(r.integrity);
      } else {
        const PackRun r = pack_run(type, c.segments, c.grain_density_gcc, seed, c.study.params, shake);
        csv << to_string(type) << ',' << seed << ',' << g9(r.h0) << ',' << g9(r.packing_fraction) << ','
            << (r.converged ? 1 : 0) << '\n';
        values.push_back(r.packing_fraction);
      }
    }
    std::cout << to_string(type) << ": mean " << (with_removal ? "integrity " : "packing fraction ") << g9(mean(values))
              << "\n";
    rows.emplace_back(type, values);
  }
  const std::string name = with_removal ? "integrity" : "pack";
  write_text(dir / (name + ".csv"), csv.str());
  write_text(dir / (name + ".svg"),
             render_svg(per_type_bars(with_removal ? "Structural integrity" : "Packing fraction",
                                      with_removal ? "integrity" : "packing fraction", rows)));
}

void write_report(const PickDataset& data, const fs::path& dir) {
  const std::vector<GroupSummary> groups = summarize(data);
  std::ostringstream csv;
  write_summary_csv(csv, groups);
  write_text(dir / "summary.csv", csv.str());

  // Bars: one category per target config, one series per protocol and grain count.
  std::vector<TargetConfig> configs;
  std::map<std::pair<Protocol, int>, std::map<std::size_t, const GroupSummary*>> by_series;
  for (const GroupSummary& g : groups) {
    auto it = std::find(configs.begin(), configs.end(), g.key.target);
    if (it == configs.end()) it = configs.insert(configs.end(), g.key.target);
    by_series[{g.key.protocol, g.key.grain_count}][static_cast<std::size_t>(it - configs.begin())] = &g;
  }
  BarChart bars;
  bars.title = "Picked units per target cell";
  bars.y_label = "picked units";
  for (const TargetConfig& t : configs)
    bars.categories.push_back(g9(t.tau) + "/" + g9(t.lambda) + "/" + std::to_string(t.spikes));
  for (const auto& [key, cells] : by_series) {
    Series s;
    s.label = std::string(to_string(key.first)) + (key.first == Protocol::Magnet ? " " + std::to_string(key.second) : "");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto it = cells.find(i);
      s.y.push_back(it == cells.end() ? 0.0 : it->second->mean);
      s.err.push_back(it == cells.end() ? 0.0 : it->second->std);
    }
    bars.series.push_back(s);
  }
  write_text(dir / "picks.svg", render_svg(bars, std::max<int>(720, 40 * static_cast<int>(configs.size()) + 220)));

  ScatterChart sc;
  sc.title = "Picked units against target length";
  sc.x_label = "lambda (mm)";
  sc.y_label = "picked units";
  sc.lines = true;
  std::map<std::pair<double, int>, Series> trend;
  for (const GroupSummary& g : groups) {
    Series& s = trend[{g.key.target.tau, g.key.target.spikes}];
    s.label = "tau " + g9(g.key.target.tau) + ", " + std::to_string(g.key.target.spikes) + " spikes";
    s.x.push_back(g.key.target.lambda);
    s.y.push_back(g.mean);
    s.err.push_back(g.std);
  }
  for (auto& [k, s] : trend) sc.series.push_back(s);
  write_text(dir / "lambda.svg", render_svg(sc, 820, 460));
}

void cmd_pick(const Options& o) {
  require_seed(o);
  const RunConfig c = load(o);
  const fs::path dir = out_dir(o);
  std::vector<std::string> failures;
  const ExperimentRun run = simulate_run(c, &failures);
  save_run(run, dir);
  write_report(run.dataset, dir);
  for (const std::string& f : failures) std::cerr << "warning: " << f << "\n";
  std::cout << run.dataset.records.size() << " records written to " << (dir / "dataset.csv").string() << "\n";
}

void cmd_fit(const Options& o) {
  const RunConfig c = load(o);
  const PickDataset data = load_data(o);
  const bool spiky = spiky_cohort(o);
  const FitReport r = fit(data, spiky, o.seed.value_or(c.seed), c.fit);
  const fs::path dir = out_dir(o);
  std::ostringstream model;
  write_model(model, r.params);
  write_text(dir / "model.txt", model.str());
  std::ostringstream csv;
  csv << "cohort,n_train,n_test,theta1_per_mm,theta2_mm,omega1,omega2,sigma,nmse_train,nmse_test,loo_nmse\n"
      << (spiky ? "spiky" : "nonspiky") << ',' << r.n_train << ',' << r.n_test << ',' << g9(r.params.theta1) << ','
      << g9(r.params.theta2) << ',' << g9(r.params.omega1) << ',' << g9(r.params.omega2) << ',' << g9(r.sigma) << ','
      << g9(r.nmse_train) << ',' << g9(r.nmse_test) << ',' << g9(r.loo) << '\n';
  write_text(dir / "fit_report.csv", csv.str());
  std::cout << csv.str();
}

void cmd_predict(const Options& o) {
  if (o.model.empty()) throw InvalidArgument("cli", "--model <model.txt> is required");
  std::ifstream in(o.model);
  if (!in) throw Error("cli", "cannot open " + o.model);
  const ModelParams p = read_model(in);
  std::optional<PosteriorSummary> post;
  if (!o.data.empty()) post = bayes_fit(cohort(ingest_csv(o.data), p.spiky), p);

  std::vector<double> taus, lambdas;
  if (o.tau) taus = {*o.tau};
  else
    for (int i = 1; i <= 40; ++i) taus.push_back(0.1 * i);
  if (o.lambda) lambdas = {*o.lambda};
  else lambdas = {12.0, 60.0, 120.0};

  std::ostringstream csv;
  csv << "tau_mm,lambda_mm,mean_units,std_units,clamped_units\n";
  ScatterChart sc;
  sc.title = std::string("Predicted picked units (") + (p.spiky ? "spiky" : "non-spiky") + ")";
  sc.x_label = "tau (mm)";
  sc.y_label = "picked units";
  sc.lines = true;
  for (double lambda : lambdas) {
    Series s;
    s.label = "lambda " + g9(lambda);
    for (double tau : taus) {
      const Prediction pr = post ? post->predict(tau, lambda) : Prediction{predict(tau, lambda, p), 0.0};
      csv << g9(tau) << ',' << g9(lambda) << ',' << g9(pr.mean) << ',' << g9(pr.std) << ','
          << g9(std::clamp(pr.mean, 0.0, static_cast<double>(kAvailableUnits))) << '\n';
      s.x.push_back(tau);
      s.y.push_back(pr.mean);
      s.err.push_back(pr.std);
    }
    sc.series.push_back(s);
  }
  const fs::path dir = out_dir(o);
  write_text(dir / "predictions.csv", csv.str());
  write_text(dir / "predictions.svg", render_svg(sc));
  if (taus.size() == 1 && lambdas.size() == 1) std::cout << csv.str();
}

void cmd_dominance(const Options& o) {
  const fs::path dir = out_dir(o);
  std::ostringstream csv;
  if (!o.ids.empty()) {
    if (!o.full_r2) throw InvalidArgument("cli", "--ids needs --full-r2");
    const std::vector<double> pct = relative_importance(o.ids, *o.full_r2);
    csv << "predictor,interactional_dominance,relative_importance_pct\n";
    for (std::size_t k = 0; k < pct.size(); ++k) csv << k << ',' << g9(o.ids[k]) << ',' << g9(pct[k]) << '\n';
  } else {
    write_dominance_csv(csv, dominance_analysis(load_data(o)));
  }
  write_text(dir / "dominance.csv", csv.str());
  std::cout << csv.str();
}

// "protocol=magnet,tau=0.2,lambda=60,spikes=1,grain_count=100"
std::vector<double> select(const PickDataset& data, const std::string& filter) {
  if (filter.empty()) throw InvalidArgument("cli", "--a and --b sample filters are required");
  std::map<std::string, std::string> want;
  std::istringstream ss(filter);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("cli", "filter item '" + item + "' is not key=value");
    want[item.substr(0, eq)] = item.substr(eq + 1);
  }
  for (const auto& [k, v] : want)
    if (k != "protocol" && k != "grain_count" && k != "tau" && k != "lambda" && k != "spikes")
      throw InvalidArgument("cli", "unknown filter key '" + k + "'");
  std::vector<double> out;
  for (const PickRecord& r : data.records) {
    bool ok = true;
    for (const auto& [k, v] : want) {
      if (k == "protocol") ok &= to_string(r.protocol) == v;
      else if (k == "grain_count") ok &= r.grain_count == std::stoi(v);
      else if (k == "tau") ok &= r.target.tau == std::stod(v);
      else if (k == "lambda") ok &= r.target.lambda == std::stod(v);
      else if (k == "spikes") ok &= r.target.spikes == std::stoi(v);
    }
    if (ok) out.push_back(r.picked_units);
  }
  if (out.empty()) throw InvalidArgument("cli", "filter '" + filter + "' selects no records");
  return out;
}

void cmd_test(const Options& o, TestKind kind) {
  const PickDataset data = load_data(o);
  const std::vector<double> a = select(data, o.a), b = select(data, o.b);
  const TestResult r = kind == TestKind::TTestMean ? t_test_mean(a, b) : f_test_variance(a, b);
  std::ostringstream csv;
  write_test_csv(csv, r);
  write_text(out_dir(o) / (kind == TestKind::TTestMean ? "ttest.csv" : "ftest.csv"), csv.str());
  std::cout << csv.str();
}

void cmd_report(const Options& o) {
  const PickDataset data = load_data(o);
  write_report(data, out_dir(o));
  std::cout << summarize(data).size() << " groups summarized in " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entangled-grain picking: simulation, studies, model fitting and statistics"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  const auto sim = [&](CLI::App* sub) {
    common(sub);
    sub->add_option("--seed", o.seed, "master seed (required)");
  };

  CLI::App* gen = app.add_subcommand("gen", "write grain and target catalogs");
  common(gen);
  gen->add_option("--grid", o.grid, "full or single")->check(CLI::IsMember({"full", "single"}));

  CLI::App* pack = app.add_subcommand("pack", "cylinder packing: h0 and packing fraction per grain type");
  sim(pack);
  CLI::App* integ = app.add_subcommand("integrity", "cylinder removal: integrity per grain type over seeds");
  sim(integ);

  CLI::App* pick = app.add_subcommand("pick", "picking study over the target grid");
  sim(pick);
  pick->add_option("--iterations", o.iterations, "iterations per target config")->check(CLI::PositiveNumber);
  pick->add_option("--grains", o.grains, "grains deployed per magnet pick")->check(CLI::NonNegativeNumber);
  pick->add_option("--grid", o.grid, "full or single")->check(CLI::IsMember({"full", "single"}));
  pick->add_option("--protocol", o.protocol, "magnet or gripper")->check(CLI::IsMember({"magnet", "gripper"}));

  CLI::App* fitc = app.add_subcommand("fit", "fit the picked-amount model to one cohort");
  common(fitc);
  fitc->add_option("--seed", o.seed, "train/test split seed");
  fitc->add_option("--data", o.data, "dataset CSV")->required();
  fitc->add_option("--cohort", o.cohort, "spiky or nonspiky")->required()->check(CLI::IsMember({"spiky", "nonspiky"}));

  CLI::App* pred = app.add_subcommand("predict", "model predictions with Bayesian bands");
  common(pred);
  pred->add_option("--model", o.model, "model file from fit")->required();
  pred->add_option("--data", o.data, "dataset CSV for the Bayesian posterior");
  pred->add_option("--tau", o.tau, "single thickness (mm)");
  pred->add_option("--lambda", o.lambda, "single length (mm)");

  CLI::App* dom = app.add_subcommand("dominance", "dominance analysis of length, thickness and spikes");
  common(dom);
  dom->add_option("--data", o.data, "dataset CSV");
  dom->add_option("--ids", o.ids, "normalize given interactional dominances instead")->delimiter(',');
  dom->add_option("--full-r2", o.full_r2, "full-model R2 for --ids");

  CLI::App* tt = app.add_subcommand("ttest", "Welch t test on picked units of two record filters");
  CLI::App* ft = app.add_subcommand("ftest", "F test on the variances of two record filters");
  for (CLI::App* sub : {tt, ft}) {
    common(sub);
    sub->add_option("--data", o.data, "dataset CSV")->required();
    sub->add_option("--a", o.a, "filter, e.g. protocol=magnet,tau=0.2")->required();
    sub->add_option("--b", o.b, "filter for the second sample")->required();
  }

  CLI::App* rep = app.add_subcommand("report", "summary tables and plots for a dataset");
  common(rep);
  rep->add_option("--data", o.data, "dataset CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) cmd_gen(o);
    else if (pack->parsed()) cmd_pack(o, false);
    else if (integ->parsed()) cmd_pack(o, true);
    else if (pick->parsed()) cmd_pick(o);
    else if (fitc->parsed()) cmd_fit(o);
    else if (pred->parsed()) cmd_predict(o);
    else if (dom->parsed()) cmd_dominance(o);
    else if (tt->parsed()) cmd_test(o, TestKind::TTestMean);
    else if (ft->parsed()) cmd_test(o, TestKind::FTestVariance);
    else if (rep->parsed()) cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
