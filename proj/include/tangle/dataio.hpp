#pragma once

// Pick dataset CSV, per-config summaries and the run store. A run is a
// directory holding config.txt, dataset.csv, checksum.txt and meta.txt.

#include "tangle/config.hpp"
#include "tangle/pick.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

namespace tangle {

inline constexpr const char* kDatasetHeader =
    "protocol,grain_count,tau_mm,lambda_mm,spikes,iteration,seed,picked_mass_g,unit_mass_g,picked_units";

/// Header then one row per record, floats with 9 significant digits.
void write_csv(std::ostream& os, const PickDataset& data);
std::string to_csv(const PickDataset& data);

/// Throws SchemaError for a header or column-count mismatch and ValueError
/// for a bad field, both with the 1-based line number.
PickDataset read_csv(std::istream& is);
PickDataset ingest_csv(const std::filesystem::path& path);

struct GroupKey {
  Protocol protocol = Protocol::Magnet;
  int grain_count = 0;
  TargetConfig target;

  friend auto operator<=>(const GroupKey& a, const GroupKey& b) {
    return std::tie(a.protocol, a.grain_count, a.target.tau, a.target.lambda, a.target.spikes) <=>
           std::tie(b.protocol, b.grain_count, b.target.tau, b.target.lambda, b.target.spikes);
  }
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

struct GroupSummary {
  GroupKey key;
  double mean = 0.0;  // picked units
  double std = 0.0;   // sample std; 0 when n == 1
  int n = 0;
  bool single = false;  // n == 1
};

/// Groups by (protocol, grain_count, tau, lambda, spikes), sorted by key.
std::vector<GroupSummary> summarize(const PickDataset& data);

/// protocol,grain_count,tau_mm,lambda_mm,spikes,n,mean_units,std_units,single
void write_summary_csv(std::ostream& os, const std::vector<GroupSummary>& groups);

enum class Provenance { Simulated, External };

std::string_view to_string(Provenance p);

struct ExperimentRun {
  std::string run_id;
  std::string config_text;  // snapshot, exactly as stored
  std::uint64_t config_checksum = 0;
  PickDataset dataset;
  Provenance provenance = Provenance::Simulated;
  std::string created_at;
};

/// Runs the parametric study the config describes. `failures` as in
/// run_parametric_study.
PickDataset run_study(const RunConfig& config, std::vector<std::string>* failures = nullptr);

/// Runs the study and wraps it as a simulated run. The run id is derived
/// from the config checksum.
ExperimentRun simulate_run(const RunConfig& config, std::vector<std::string>* failures = nullptr);

/// Wraps an ingested dataset; it cannot be replayed.
ExperimentRun external_run(PickDataset data, const std::string& source);

void save_run(const ExperimentRun& run, const std::filesystem::path& dir);
ExperimentRun load_run(const std::filesystem::path& dir);

/// Re-executes a simulated run from its config snapshot after checking the
/// stored checksum. Throws ProvenanceError for external runs and
/// ChecksumError when the snapshot does not match its checksum.
PickDataset replay(const ExperimentRun& run);

/// UTC, ISO 8601, second resolution.
std::string utc_timestamp();

}  // namespace tangle
