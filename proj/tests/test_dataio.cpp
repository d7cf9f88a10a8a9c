#include "doctest.h"

#include "tangle/config.hpp"
#include "tangle/dataio.hpp"
#include "tangle/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace tangle;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "protocol,grain_count,tau_mm,lambda_mm,spikes,iteration,seed,picked_mass_g,unit_mass_g,picked_units\n";

const char* kSmallStudy =
    "seed = 21\n"
    "grid = single\n"
    "target.tau_mm = 1\n"
    "target.lambda_mm = 60\n"
    "target.spikes = 1\n"
    "iterations = 3\n"
    "grain_count = 8\n"
    "units = 12\n"
    "bed_relax_steps = 100\n"
    "bed_settle_steps = 200\n"
    "supply.settle_steps = 200\n"
    "return_settle_steps = 100\n";

PickDataset sample_dataset() {
  PickDataset d;
  int k = 0;
  for (const TargetConfig& c : full_grid())
    for (int it = 0; it < 2; ++it, ++k) {
      const double unit = build_target(c.tau, c.lambda, c.spikes).mass();
      const int units = (k * 37) % 101;
      d.records.push_back({k % 3 ? Protocol::Magnet : Protocol::Gripper, 100, c, it, 1000u + k, units * unit * 1.01, unit,
                           units});
    }
  return d;
}

PickDataset parse(const std::string& text) {
  std::istringstream is(text);
  return read_csv(is);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tangle_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("csv header is fixed") {
  CHECK(std::string(kDatasetHeader) + "\n" == kHeader);
  CHECK(to_csv(PickDataset{}) == kHeader);
}

TEST_CASE("ingest") {
  SUBCASE("header only") {
    const PickDataset d = parse(kHeader);
    CHECK(d.records.empty());
  }
  SUBCASE("full study file") {
    PickDataset d;
    for (const TargetConfig& c : full_grid())
      for (int it = 0; it < 10; ++it) d.records.push_back({Protocol::Magnet, 100, c, it, 5, 1.0, 0.1, 10});
    const fs::path dir = scratch("ingest");
    fs::create_directories(dir);
    std::ofstream(dir / "data.csv") << to_csv(d);
    const PickDataset back = ingest_csv(dir / "data.csv");
    CHECK(back.records.size() == 270);
    CHECK(back.iterations == 10);
    CHECK(back.unit_mass == doctest::Approx(0.1));
    fs::remove_all(dir);
  }
  SUBCASE("negative mass is rejected at its row") {
    const std::string text = std::string(kHeader) + "magnet,100,1,12,0,0,1,0.5,0.1,5\n" +
                             "magnet,100,1,12,0,1,1,-1,0.1,0\n";
    try {
      parse(text);
      FAIL("expected ValueError");
    } catch (const ValueError& e) {
      CHECK(e.row() == 3);
      CHECK(std::string(e.what()).find("picked_mass_g") != std::string::npos);
    }
  }
  SUBCASE("bad thickness") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "magnet,100,0,12,0,0,1,0.5,0.1,5\n"), ValueError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "magnet,100,-0.2,12,0,0,1,0.5,0.1,5\n"), ValueError);
  }
  SUBCASE("other bad values") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "robot,100,1,12,0,0,1,0.5,0.1,5\n"), ValueError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "magnet,100,1,12,0,0,1,0.5,0,5\n"), ValueError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "magnet,100,1,12,0,0,1,abc,0.1,5\n"), ValueError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "magnet,100,1,12,0,0,1,nan,0.1,5\n"), ValueError);
  }
  SUBCASE("schema errors carry the line") {
    try {
      parse("protocol,grain_count\n");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.line() == 1);
    }
    try {
      parse(std::string(kHeader) + "magnet,100,1,12,0,0,1,0.5,0.1,5\nmagnet,100,1\n");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(ingest_csv("/nonexistent/data.csv"), Error); }
}

TEST_CASE("csv round trip is lossless") {
  const PickDataset d = sample_dataset();
  const PickDataset back = parse(to_csv(d));
  REQUIRE(back.records.size() == d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const PickRecord &a = d.records[i], &b = back.records[i];
    CHECK(a.protocol == b.protocol);
    CHECK(a.grain_count == b.grain_count);
    CHECK(a.target == b.target);
    CHECK(a.iteration == b.iteration);
    CHECK(a.seed == b.seed);
    CHECK(a.picked_units == b.picked_units);
    CHECK(b.picked_mass == doctest::Approx(a.picked_mass).epsilon(1e-8));
    CHECK(b.unit_mass == doctest::Approx(a.unit_mass).epsilon(1e-8));
  }
  // Values already at nine significant digits come back bit for bit.
  CHECK(to_csv(back) == to_csv(parse(to_csv(back))));
  const PickDataset again = parse(to_csv(back));
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    CHECK(again.records[i].picked_mass == back.records[i].picked_mass);
    CHECK(again.records[i].unit_mass == back.records[i].unit_mass);
  }
}

TEST_CASE("summaries") {
  PickDataset d;
  const TargetConfig c{0.4, 60, 1};
  d.records.push_back({Protocol::Magnet, 100, c, 0, 1, 0.8, 0.1, 8});
  d.records.push_back({Protocol::Magnet, 100, c, 1, 1, 1.2, 0.1, 12});
  d.records.push_back({Protocol::Gripper, 0, c, 0, 1, 0.5, 0.1, 5});
  const auto groups = summarize(d);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].key.protocol == Protocol::Magnet);
  CHECK(groups[0].mean == 10.0);
  CHECK(groups[0].std == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(groups[0].n == 2);
  CHECK_FALSE(groups[0].single);
  CHECK(groups[1].std == 0.0);
  CHECK(groups[1].n == 1);
  CHECK(groups[1].single);

  std::ostringstream os;
  write_summary_csv(os, groups);
  CHECK(os.str().rfind("protocol,grain_count,tau_mm,lambda_mm,spikes,n,mean_units,std_units,single\n", 0) == 0);

  PickDataset full;
  for (const TargetConfig& t : full_grid())
    for (int it = 0; it < 10; ++it) full.records.push_back({Protocol::Magnet, 100, t, it, 1, 1.0, 0.1, it});
  CHECK(summarize(full).size() == 27);
}

TEST_CASE("summaries do not depend on row order") {
  PickDataset d = sample_dataset();
  for (auto& r : d.records) r.protocol = Protocol::Magnet;
  const auto ref = summarize(d);
  std::mt19937 g(4);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(d.records.begin(), d.records.end(), g);
    const auto s = summarize(d);
    REQUIRE(s.size() == ref.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].key == ref[i].key);
      CHECK(s[i].mean == ref[i].mean);
      CHECK(s[i].std == ref[i].std);
    }
  }
}

TEST_CASE("run store and replay") {
  const RunConfig cfg = parse_config(kSmallStudy);
  const ExperimentRun run = simulate_run(cfg);
  REQUIRE(run.dataset.records.size() == 3);
  CHECK(run.run_id.rfind("sim-", 0) == 0);

  const fs::path dir = scratch("run");
  save_run(run, dir);
  for (const char* f : {"config.txt", "dataset.csv", "checksum.txt", "meta.txt"}) CHECK(fs::exists(dir / f));

  const ExperimentRun loaded = load_run(dir);
  CHECK(loaded.provenance == Provenance::Simulated);
  CHECK(loaded.run_id == run.run_id);
  CHECK(loaded.config_text == run.config_text);

  SUBCASE("replay is byte identical") { CHECK(to_csv(replay(loaded)) == to_csv(run.dataset)); }
  SUBCASE("external runs cannot be replayed") {
    const ExperimentRun ext = external_run(run.dataset, "bench notebook");
    CHECK_THROWS_AS(replay(ext), ProvenanceError);
    const fs::path edir = scratch("ext");
    save_run(ext, edir);
    CHECK(load_run(edir).provenance == Provenance::External);
    CHECK_THROWS_AS(replay(load_run(edir)), ProvenanceError);
    fs::remove_all(edir);
  }
  SUBCASE("tampered config") {
    std::string text = loaded.config_text;
    const auto pos = text.find("iterations = 3");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 14, "iterations = 4");
    std::ofstream(dir / "config.txt") << text;
    CHECK_THROWS_AS(replay(load_run(dir)), ChecksumError);
  }
  SUBCASE("tampered dataset") {
    std::string csv = to_csv(run.dataset);
    csv.back() = '9';
    std::ofstream(dir / "dataset.csv") << csv << '\n';
    CHECK_THROWS_AS(load_run(dir), ChecksumError);
  }
  fs::remove_all(dir);
}

TEST_CASE("timestamps") {
  const std::string t = utc_timestamp();
  CHECK(t.size() == 20);
  CHECK(t[10] == 'T');
  CHECK(t.back() == 'Z');
}
