#pragma once

// Scene state for the capsule-contact engine. Internal units: mm, g, s;
// force in g*mm/s^2 (1e-6 N), energy in g*mm^2/s^2 (1e-9 J).

#include "tangle/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace tangle {

using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kGravity = 9810.0;            // mm/s^2
inline constexpr double kJouleToInternal = 1e9;       // g*mm^2/s^2 per J
inline constexpr double kNewtonToInternal = 1e6;      // g*mm/s^2 per N
inline constexpr double kMinInertiaRatio = 0.1;       // smallest / largest principal moment

enum class ContainerKind { Cylinder, Bowl, Plane };

struct Container {
  ContainerKind kind = ContainerKind::Plane;
  double diameter = 30.0;  // cylinder
  double height = 100.0;   // cylinder
  double bottom_diameter = 80.0;  // bowl
  double top_diameter = 200.0;    // bowl
  double depth = 60.0;            // bowl
  // Height of the wall's lower edge above the floor; walls only act on
  // material above it. Raised while the cylinder is lifted off a column.
  double wall_lift = 0.0;
  double wall_lift_rate = 0.0;  // mm/s, advanced by the integrator
  // Rigid offset of the whole container (shaking) and its velocity.
  Vec3 offset = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();

  static Container cylinder(double diameter = 30.0, double height = 100.0);
  static Container bowl(double bottom_diameter = 80.0, double top_diameter = 200.0, double depth = 60.0);
  static Container plane();
};

enum class BodyKind { Grain, Target, Fixture };

struct Body {
  int group = 0;  // bodies of one articulated target share a group
  BodyKind kind = BodyKind::Grain;
  bool ferromagnetic = false;
  bool pinned = false;
  CapsuleSet shape;                     // local frame, origin at centre of mass
  std::vector<CaptureRegion> regions;   // local frame
  double mass = 0.0;                    // bookkeeping mass, g
  double inertial_mass = 0.0;           // mass used by the dynamics, g
  Mat3 inertia = Mat3::Identity();      // local frame, g*mm^2
  double bound_radius = 0.0;            // local bounding sphere about the origin
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();

  Vec3 to_world(const Vec3& local) const { return position + orientation * local; }
  Capsule world_capsule(std::size_t i) const;
  CapsuleSet world_shape() const;
  CaptureRegion world_region(std::size_t i) const;
};

/// Elastic ball joint with a bending spring between two links.
struct Joint {
  int body_a = 0;
  int body_b = 0;
  Vec3 anchor_a = Vec3::Zero();  // local to body_a
  Vec3 anchor_b = Vec3::Zero();  // local to body_b
  Quat rest = Quat::Identity();  // rest value of conj(q_a) * q_b
  double angular_stiffness = 0.0;  // g*mm^2/s^2 per rad
};

struct ContactHistory {
  std::uint64_t key = 0;
  Vec3 tangential = Vec3::Zero();  // accumulated tangential spring displacement
};

struct SceneState {
  std::vector<Body> bodies;
  std::vector<Joint> joints;
  Container container;
  Vec3 gravity = Vec3(0.0, 0.0, -kGravity);
  std::uint64_t rng_seed = 0;
  double time = 0.0;
  std::uint64_t steps = 0;
  std::vector<ContactHistory> contacts;  // sorted by key

  double total_mass() const;
  double kinetic_energy() const;  // internal units
  int group_count() const;
};

/// Rigid body built from capsules of uniform square cross-section. The
/// capsules are re-expressed about the centre of mass.
Body make_body(CapsuleSet capsules, std::vector<CaptureRegion> regions, double density_gcc,
               double cross_section, double bookkeeping_mass, double min_inertial_mass = 0.0);

/// Canonical grain body (local frame) of `type` with `density_gcc`.
Body make_grain_body(GrainType type, double density_gcc, bool ferromagnetic,
                     double per_segment_mass = kSegmentMass);

struct ArticulatedTarget {
  std::vector<Body> links;  // local frames, positioned relative to the target frame
  std::vector<Joint> joints;  // body indices local to `links`
};

/// Largest bending-spring stiffness the integrator carries at step `dt`
/// between links whose smallest principal moment is `link_inertia`.
double stable_angular_stiffness(double dt, double link_inertia);

/// Bending springs stiffer than this multiple of the stable value merge
/// the target into one rigid body; softer excess is clamped to the
/// stable value.
inline constexpr double kRigidMergeFactor = 10.0;

/// Target as chained links joined by ball joints with bending springs
/// (EI / link length). A single link, or a target much stiffer than the
/// integrator can carry at `dt`, becomes one rigid body.
ArticulatedTarget make_target_bodies(const TargetShape& shape, int subdivisions, double min_inertial_mass,
                                     double dt);

/// Versioned text snapshot: poses in mm and unit quaternions, container,
/// seed. Capsule geometry is stored so the snapshot is self-contained.
void write_snapshot(std::ostream& os, const SceneState& state);
SceneState read_snapshot(std::istream& is);

/// CSV header: step,body_id,x,y,z,qw,qx,qy,qz
void write_trajectory_header(std::ostream& os);
void append_trajectory(std::ostream& os, const SceneState& state);

}  // namespace tangle
