#pragma once

// Penalty-contact rigid-body integrator and the column metrics built on
// it (structure height, packing fraction, structural integrity).

#include "tangle/error.hpp"
#include "tangle/scene.hpp"

#include <cstdint>

namespace tangle {

struct SimParams {
  double dt = 1e-4;                   // s
  double contact_stiffness = 0.1;     // N/mm
  double contact_damping = 0.3;       // damping ratio
  double tangential_ratio = 0.5;      // tangential / normal spring stiffness
  double friction = 0.5;
  double local_damping = 0.2;         // non-viscous damping on bodies in contact
  double rolling_friction = 1.0;      // rolling torque / (normal force * contact radius)
  double joint_stiffness = 0.2;       // N/mm, link ball joints
  double settle_ke_threshold = 1e-9;  // J
  std::uint64_t max_steps = 50000;
  std::uint64_t settle_window = 200;  // consecutive quiet steps required
  double penetration_tol = 0.1;       // mm
  double max_speed = 10000.0;         // mm/s (10 m/s)
  double min_inertial_mass = 0.005;   // g
};

/// Advances one `dt` in place. Throws InstabilityError when any body
/// exceeds `max_speed` or goes non-finite.
void advance(SceneState& state, const SimParams& params);

SceneState step(const SceneState& state, const SimParams& params);

struct SettleResult {
  SceneState state;
  bool converged = false;
  std::uint64_t steps = 0;
};

/// Raised by `settle_or_throw`; carries the last state.
class NotConverged : public Error {
 public:
  explicit NotConverged(SceneState last)
      : Error("simulate", "settle did not reach the kinetic-energy threshold"), state(std::move(last)) {}
  SceneState state;
};

/// Steps until the kinetic energy stays below the threshold for
/// `settle_window` steps, or `max_steps` is reached.
SettleResult settle(SceneState state, const SimParams& params);
SceneState settle_or_throw(SceneState state, const SimParams& params);

struct ShakeSpec {
  double duration = 10.0;   // s
  double amplitude = 2.0;   // mm
  double frequency = 10.0;  // Hz
};

/// Oscillates the container vertically and laterally for a whole number
/// of cycles, then settles.
SettleResult shake(SceneState state, const SimParams& params, const ShakeSpec& spec = {});

/// Highest capsule surface point above the container floor; 0 when empty.
double structure_height(const SceneState& state);

double packing_fraction(double grain_volume, double container_volume);

/// Material volume of all bodies (capsule axis length times square
/// cross-section).
double grain_volume(const SceneState& state);

/// packing_fraction over a cylinder of the scene's diameter and the
/// current structure height.
double cylinder_packing_fraction(const SceneState& state);

struct RemovalSpec {
  double lift_speed = 50.0;  // mm/s
  double clearance = 5.0;    // mm above the structure before the wall is deleted
};

/// Lifts the cylinder wall at constant speed until clear of the column,
/// deletes it (the floor stays) and settles again.
SettleResult remove_cylinder_and_relax(SceneState state, const SimParams& params, const RemovalSpec& spec = {});

/// (h0 - dh) / h0. Throws InvalidArgument for h0 <= 0, dh < 0 or dh > h0.
double integrity(double h0, double dh);

/// Worst penetration of any capsule surface into the container walls or
/// floor, in mm (0 when none).
double max_container_penetration(const SceneState& state);

}  // namespace tangle
