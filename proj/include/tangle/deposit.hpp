#pragma once

// Scene builders. Bodies are placed by lowering them straight down until
// first contact (conservative advancement on capsule distances), which
// gives a loose overlap-free pile cheaply; the integrator then settles it.

#include "tangle/random.hpp"
#include "tangle/scene.hpp"
#include "tangle/simulate.hpp"

#include <span>

namespace tangle {

struct LowerResult {
  double travel = 0.0;      // mm moved down
  double final_gap = 0.0;   // remaining clearance, mm
  bool touched = false;     // stopped on something rather than on the iteration cap
};

/// Translates the bodies `ids` rigidly along -z until their clearance to
/// the remaining bodies, the floor or the bowl wall drops below `stop_gap`.
LowerResult lower_until_contact(SceneState& state, std::span<const int> ids, double stop_gap = 0.01,
                                int max_iterations = 400);

/// Highest capsule surface point in the scene over the xy disc of radius
/// `reach` around (x, y); the floor height when nothing is there.
double pile_top(const SceneState& state, double x, double y, double reach);

/// Appends `bodies` (already posed relative to each other) as one rigid
/// drop: random xy inside the container (or within `spread` mm of its
/// axis when positive), released above the pile, then lowered to contact.
/// Returns the index of the first appended body.
int drop_bodies(SceneState& state, std::vector<Body> bodies, const std::vector<Joint>& joints, Rng& rng,
                double spread = 0.0);

/// Deletes the bodies `ids` and every joint touching them; later bodies
/// shift down and joints are renumbered. Contact history is cleared.
void erase_bodies(SceneState& state, std::vector<int> ids);

struct RelaxResult {
  std::uint64_t steps = 0;
  bool converged = false;
};

/// Lets only the bodies `ids` move (everything else frozen) until their
/// kinetic energy stays under the settle threshold or `max_steps` pass.
/// Runs on a sub-scene of the movers and their neighbours, rebuilt every
/// `chunk` steps; contact history is not carried across rebuilds.
RelaxResult relax_bodies(SceneState& state, std::span<const int> ids, const SimParams& params,
                         std::uint64_t max_steps, std::uint64_t chunk = 250);

/// Uniformly random orientation and the body group set to `group`.
Body posed_grain(GrainType type, double density_gcc, bool ferromagnetic, int group, Rng& rng);

/// Target links posed with random yaw about z, random roll about the
/// target axis and a tilt of at most `max_tilt` radians.
ArticulatedTarget posed_target(const TargetShape& shape, int subdivisions, double min_inertial_mass, double dt,
                               int group, Rng& rng, double max_tilt = 0.35);

/// Cylinder holding grains of one type totalling at least `segments`
/// segments, dropped one at a time.
SceneState fill_cylinder(GrainType type, int segments, double density_gcc, std::uint64_t seed,
                         double min_inertial_mass, const Container& cylinder = Container::cylinder());

struct PackRun {
  SceneState state;  // settled column, wall still in place
  double h0 = 0.0;   // mm
  double packing_fraction = 0.0;
  bool converged = false;
};

/// fill_cylinder, an optional shake, then settle.
PackRun pack_run(GrainType type, int segments, double density_gcc, std::uint64_t seed, const SimParams& params,
                 const ShakeSpec* shake = nullptr);

struct IntegrityRun {
  double h0 = 0.0;       // mm, before the wall is removed
  double h_after = 0.0;  // mm, after removal and relaxation
  double integrity = 0.0;
  double packing_fraction = 0.0;
  bool converged = false;  // both settles
};

/// pack_run, then remove_cylinder_and_relax. The height drop is clamped
/// to [0, h0] before integrity() so a column that rises by settling noise
/// scores 1.
IntegrityRun integrity_run(GrainType type, int segments, double density_gcc, std::uint64_t seed,
                           const SimParams& params, const ShakeSpec* shake = nullptr, const RemovalSpec& removal = {});

struct BowlFill {
  int units = 100;
  int subdivisions = 0;             // 0: default_target_subdivisions(lambda)
  std::uint64_t relax_steps = 0;    // per dropped unit; 0 leaves it where it first touched
  std::uint64_t settle_steps = 0;   // whole-bowl dynamics after the last unit
};

/// Bowl holding `fill.units` copies of `target`, each its own group. Links
/// are built for `params.dt` and `params.min_inertial_mass`.
SceneState fill_bowl(const TargetShape& target, const BowlFill& fill, const SimParams& params, std::uint64_t seed,
                     const Container& bowl = Container::bowl());

}  // namespace tangle
