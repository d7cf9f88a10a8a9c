#pragma once

// Picking protocols on a bowl of targets: the magnet drop-and-recall and
// the parallel-gripper baseline, plus the parametric study over the
// target grid. Bodies that are not ferromagnetic are the payload; picked
// mass counts payload only.

#include "tangle/entangle.hpp"
#include "tangle/random.hpp"
#include "tangle/scene.hpp"
#include "tangle/simulate.hpp"

#include <cstdint>
#include <functional>
#include <set>
#include <string_view>
#include <vector>

namespace tangle {

enum class Protocol { Magnet, Gripper };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

struct MagnetSpec {
  double face_diameter = 80.0;  // mm
  double capture_gap = 3.0;     // mm
  double max_pull = 2000.0;     // N, recorded only

  void validate() const;
};

/// Jaws close along x, centred on the container axis, from `jaw_width`
/// apart by `closing_stroke`. The grasp region is the box left between
/// the closed jaws, `jaw_depth` along y and `finger_length` down from the
/// pile top.
struct GripperSpec {
  double jaw_width = 60.0;       // mm
  double jaw_depth = 20.0;       // mm
  double closing_stroke = 55.0;  // mm
  double finger_length = 20.0;   // mm

  double closed_gap() const { return jaw_width - closing_stroke; }
  void validate() const;
};

/// Grains the magnet carries to the bowl.
struct GrainSupply {
  GrainType type = GrainType::V;
  double density_gcc = 7.9;        // stainless steel
  std::uint64_t relax_steps = 0;   // per grain after it lands; 0 keeps the first-contact pose
  // After the last grain lands, grains and every payload body centred
  // within `settle_reach` of the axis move together for up to
  // `settle_steps`, so heavy grains sink into a light bed.
  std::uint64_t settle_steps = 1500;
  double settle_reach = 45.0;  // mm
};

struct TargetConfig {
  double tau = 1.0;
  double lambda = 12.0;
  int spikes = 0;

  friend bool operator==(const TargetConfig&, const TargetConfig&) = default;
};

/// tau {0.2, 0.4, 1} x lambda {12, 60, 120} x spikes {0, 1, 2}, tau slowest.
std::vector<TargetConfig> full_grid();

inline constexpr int kAvailableUnits = 100;

struct PickRecord {
  Protocol protocol = Protocol::Magnet;
  int grain_count = 0;
  TargetConfig target;
  int iteration = 0;
  std::uint64_t seed = 0;
  double picked_mass = 0.0;  // g
  double unit_mass = 0.0;    // g
  int picked_units = 0;
};

struct PickDataset {
  std::vector<PickRecord> records;
  double unit_mass = 0.0;  // g; 0 when records mix target configs
  int available_units = kAvailableUnits;
  int iterations = 10;
};

struct PickResult {
  std::vector<int> seeds;  // bodies held by the magnet or the jaws
  std::set<int> picked;    // closure, seeds included
  std::vector<int> grains;  // bodies the magnet deployed (empty for the gripper)
  double picked_mass = 0.0;     // payload only, g
  double remaining_mass = 0.0;  // payload left behind, g
};

/// round(picked_mass / unit_mass) clamped to [0, available]. Throws
/// InvalidArgument for unit_mass <= 0.
int picked_units(double picked_mass, double unit_mass, int available = kAvailableUnits);

/// Drops `grain_count` grains one by one inside the face disc over the
/// container axis. Returns their indices.
std::vector<int> deploy_grains(SceneState& scene, const MagnetSpec& magnet, int grain_count, const GrainSupply& supply,
                               const SimParams& params, Rng& rng);

/// Lowers the face over the container axis until it meets the highest
/// ferromagnetic body under it, attaches every ferromagnetic body whose
/// top is within the capture gap, then every ferromagnetic body within
/// the gap of an attached one.
std::vector<int> magnet_attach(const SceneState& scene, const MagnetSpec& magnet);

/// Deploys the grains into `scene` (they stay there), rebuilds the
/// entanglement graph, re-attracts and takes the pick closure. Zero
/// grains pick nothing; grains deployed but none attached throw
/// NoGrainsAttached.
PickResult magnet_pick_protocol(SceneState& scene, const MagnetSpec& magnet, int grain_count,
                                const LinkModel& link_model, Rng& rng, const GrainSupply& supply = {},
                                const SimParams& params = {});

/// Bodies with material inside the closed grasp region.
std::vector<int> gripper_grasp(const SceneState& scene, const GripperSpec& gripper);

PickResult gripper_pick_protocol(const SceneState& scene, const GripperSpec& gripper, const LinkModel& link_model,
                                 Rng& rng);

/// Removes the deployed grains and drops every picked payload group back
/// into the container, relaxing each for up to `relax_steps`, then lets
/// the whole container settle for up to `settle_steps` when anything
/// came back.
void return_picked(SceneState& scene, const PickResult& result, const SimParams& params, std::uint64_t relax_steps,
                   Rng& rng, std::uint64_t settle_steps = 0);

/// How picked units go back between iterations. Restore puts the whole
/// bowl back to its settled pre-pick state; Redrop drops the picked units
/// on top and settles (units land where they first touch, so a fully
/// picked bowl comes back as a loose tower).
enum class ReturnMode { Restore, Redrop };

struct StudySpec {
  Protocol protocol = Protocol::Magnet;
  ReturnMode return_mode = ReturnMode::Restore;
  int iterations = 10;
  int grain_count = 100;
  int units = kAvailableUnits;
  std::uint64_t bed_relax_steps = 600;     // per unit while filling the bowl
  std::uint64_t bed_settle_steps = 3000;   // whole bowl once filled
  std::uint64_t return_relax_steps = 0;     // per unit returned between iterations
  std::uint64_t return_settle_steps = 1000; // whole bowl after a return
  MagnetSpec magnet;
  GripperSpec gripper;
  GrainSupply supply;
  LinkModel link_model{8.0, std::nullopt};  // d0 calibrated on the bowl study
  SimParams params;
};

/// One bowl per config, seeded from (seed, config index); iterations pick
/// from it and put the picked units back. A config whose protocol throws
/// is skipped and the study goes on; `failures` (when given) collects the
/// messages.
PickDataset run_parametric_study(const std::vector<TargetConfig>& grid, const StudySpec& spec, std::uint64_t seed,
                                 std::vector<std::string>* failures = nullptr);

/// Fraction of records satisfying `success`. Throws InvalidArgument on an
/// empty list.
double success_rate(const std::vector<PickRecord>& records, const std::function<bool(const PickRecord&)>& success);

}  // namespace tangle
