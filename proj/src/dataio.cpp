#include "tangle/dataio.hpp"

#include "tangle/error.hpp"
#include "tangle/stats.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace tangle {

namespace {

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(s.substr(0, p));
    if (p == std::string_view::npos) return out;
    s.remove_prefix(p + 1);
  }
}

template <typename T>
T field(std::string_view s, std::size_t line, const char* name) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValueError(line, std::string(name) + ": cannot parse '" + std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw ValueError(line, std::string(name) + " is not finite");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("data-io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("data-io", "cannot write " + path.string());
  out << bytes;
}

}  // namespace

void write_csv(std::ostream& os, const PickDataset& data) {
  os << kDatasetHeader << '\n';
  for (const PickRecord& r : data.records) {
    os << to_string(r.protocol) << ',' << r.grain_count << ',' << g9(r.target.tau) << ',' << g9(r.target.lambda) << ','
       << r.target.spikes << ',' << r.iteration << ',' << r.seed << ',' << g9(r.picked_mass) << ',' << g9(r.unit_mass)
       << ',' << r.picked_units << '\n';
  }
}

std::string to_csv(const PickDataset& data) {
  std::ostringstream ss;
  write_csv(ss, data);
  return ss.str();
}

PickDataset read_csv(std::istream& is) {
  PickDataset data;
  std::string raw;
  std::size_t line = 0;
  if (!std::getline(is, raw)) throw SchemaError(1, "missing header");
  ++line;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  if (raw != kDatasetHeader) throw SchemaError(line, "header does not match the dataset schema");
  int max_iteration = -1;
  while (std::getline(is, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    const auto cols = split(raw, ',');
    if (cols.size() != 10) throw SchemaError(line, "expected 10 columns, got " + std::to_string(cols.size()));
    PickRecord r;
    try {
      r.protocol = parse_protocol(cols[0]);
    } catch (const Error&) {
      throw ValueError(line, "protocol: unknown '" + std::string(cols[0]) + "'");
    }
    r.grain_count = field<int>(cols[1], line, "grain_count");
    r.target.tau = field<double>(cols[2], line, "tau_mm");
    r.target.lambda = field<double>(cols[3], line, "lambda_mm");
    r.target.spikes = field<int>(cols[4], line, "spikes");
    r.iteration = field<int>(cols[5], line, "iteration");
    r.seed = field<std::uint64_t>(cols[6], line, "seed");
    r.picked_mass = field<double>(cols[7], line, "picked_mass_g");
    r.unit_mass = field<double>(cols[8], line, "unit_mass_g");
    r.picked_units = field<int>(cols[9], line, "picked_units");
    if (r.grain_count < 0) throw ValueError(line, "grain_count is negative");
    if (!(r.target.tau > 0.0)) throw ValueError(line, "tau_mm must be positive");
    if (!(r.target.lambda > 0.0)) throw ValueError(line, "lambda_mm must be positive");
    if (r.target.spikes < 0) throw ValueError(line, "spikes is negative");
    if (r.iteration < 0) throw ValueError(line, "iteration is negative");
    if (r.picked_mass < 0.0) throw ValueError(line, "picked_mass_g is negative");
    if (!(r.unit_mass > 0.0)) throw ValueError(line, "unit_mass_g must be positive");
    if (r.picked_units < 0) throw ValueError(line, "picked_units is negative");
    max_iteration = std::max(max_iteration, r.iteration);
    data.records.push_back(r);
  }
  if (!data.records.empty()) {
    data.iterations = max_iteration + 1;
    const double m = data.records.front().unit_mass;
    const bool one = std::all_of(data.records.begin(), data.records.end(),
                                 [&](const PickRecord& r) { return r.unit_mass == m; });
    data.unit_mass = one ? m : 0.0;
  }
  return data;
}

PickDataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("data-io", "cannot open " + path.string());
  return read_csv(in);
}

std::vector<GroupSummary> summarize(const PickDataset& data) {
  std::map<GroupKey, std::vector<double>> groups;
  for (const PickRecord& r : data.records)
    groups[GroupKey{r.protocol, r.grain_count, r.target}].push_back(static_cast<double>(r.picked_units));
  std::vector<GroupSummary> out;
  for (auto& [key, ys] : groups) {
    // Sorted values make the sums independent of row order.
    std::sort(ys.begin(), ys.end());
    GroupSummary g;
    g.key = key;
    g.n = static_cast<int>(ys.size());
    g.mean = mean(ys);
    g.std = sample_std(ys);
    g.single = g.n == 1;
    out.push_back(g);
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<GroupSummary>& groups) {
  os << "protocol,grain_count,tau_mm,lambda_mm,spikes,n,mean_units,std_units,single\n";
  for (const GroupSummary& g : groups)
    os << to_string(g.key.protocol) << ',' << g.key.grain_count << ',' << g9(g.key.target.tau) << ','
       << g9(g.key.target.lambda) << ',' << g.key.target.spikes << ',' << g.n << ',' << g9(g.mean) << ',' << g9(g.std)
       << ',' << (g.single ? 1 : 0) << '\n';
}

std::string_view to_string(Provenance p) { return p == Provenance::Simulated ? "simulated" : "external"; }

PickDataset run_study(const RunConfig& config, std::vector<std::string>* failures) {
  return run_parametric_study(config.targets(), config.study, config.seed, failures);
}

ExperimentRun simulate_run(const RunConfig& config, std::vector<std::string>* failures) {
  ExperimentRun run;
  run.config_text = to_text(config);
  run.config_checksum = fnv1a64(run.config_text);
  run.run_id = "sim-" + hex64(run.config_checksum);
  run.provenance = Provenance::Simulated;
  run.dataset = run_study(config, failures);
  run.created_at = utc_timestamp();
  return run;
}

ExperimentRun external_run(PickDataset data, const std::string& source) {
  ExperimentRun run;
  run.config_text = "# external dataset: " + source + "\n";
  run.config_checksum = fnv1a64(run.config_text);
  run.run_id = "ext-" + hex64(fnv1a64(to_csv(data)));
  run.provenance = Provenance::External;
  run.dataset = std::move(data);
  run.created_at = utc_timestamp();
  return run;
}

void save_run(const ExperimentRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string csv = to_csv(run.dataset);
  write_file(dir / "config.txt", run.config_text);
  write_file(dir / "dataset.csv", csv);
  write_file(dir / "checksum.txt",
             "config fnv1a64 " + hex64(run.config_checksum) + "\ndataset fnv1a64 " + hex64(fnv1a64(csv)) + "\n");
  write_file(dir / "meta.txt", "run_id = " + run.run_id + "\nprovenance = " + std::string(to_string(run.provenance)) +
                                   "\ncreated_at = " + run.created_at + "\n");
}

ExperimentRun load_run(const std::filesystem::path& dir) {
  ExperimentRun run;
  run.config_text = read_file(dir / "config.txt");
  const std::string csv = read_file(dir / "dataset.csv");
  std::istringstream cs(csv);
  run.dataset = read_csv(cs);

  std::istringstream sums(read_file(dir / "checksum.txt"));
  std::string what, algo, hex;
  bool have_config = false;
  while (sums >> what >> algo >> hex) {
    if (algo != "fnv1a64") throw ChecksumError("unknown checksum algorithm '" + algo + "'");
    const std::uint64_t v = std::stoull(hex, nullptr, 16);
    if (what == "config") {
      run.config_checksum = v;
      have_config = true;
    } else if (what == "dataset" && v != fnv1a64(csv)) {
      throw ChecksumError("dataset.csv does not match its checksum");
    }
  }
  if (!have_config) throw ChecksumError("checksum.txt has no config checksum");

  std::istringstream meta(read_file(dir / "meta.txt"));
  std::string raw;
  while (std::getline(meta, raw)) {
    const auto eq = raw.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = raw.substr(0, eq), value = raw.substr(eq + 3);
    if (key == "run_id") run.run_id = value;
    else if (key == "created_at") run.created_at = value;
    else if (key == "provenance") {
      if (value == "simulated") run.provenance = Provenance::Simulated;
      else if (value == "external") run.provenance = Provenance::External;
      else throw Error("data-io", "unknown provenance '" + value + "'");
    }
  }
  return run;
}

PickDataset replay(const ExperimentRun& run) {
  if (run.provenance != Provenance::Simulated) throw ProvenanceError("run " + run.run_id + " is external; nothing to replay");
  if (fnv1a64(run.config_text) != run.config_checksum)
    throw ChecksumError("config snapshot of run " + run.run_id + " does not match its checksum");
  return run_study(parse_config(run.config_text));
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tangle
