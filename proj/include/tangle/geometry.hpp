#pragma once

// Grain and target-cell construction, capsule discretization and the
// mass / stiffness bookkeeping attached to them. Lengths are mm, masses g.

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tangle {

using Vec3 = Eigen::Vector3d;

inline constexpr double kSegmentLength = 12.0;       // mm
inline constexpr double kSegmentCrossSection = 1.0;  // mm, square side
inline constexpr double kSegmentMass = 0.04;         // g (4 g per 100 segments)
inline constexpr double kSpikeLength = 12.0;         // mm

enum class GrainType { I, II, III, IV, V, VI, VII, VIII, IX };

inline constexpr std::array<GrainType, 9> kAllGrainTypes = {
    GrainType::I,  GrainType::II,  GrainType::III,  GrainType::IV, GrainType::V,
    GrainType::VI, GrainType::VII, GrainType::VIII, GrainType::IX};

std::string_view to_string(GrainType type);
GrainType parse_grain_type(std::string_view text);

/// Spike rooted on a base: `attach_fraction` is measured along the base
/// (arc length for curved bases), `side` is +1 / -1 across it.
struct Spike {
  double attach_fraction = 0.0;
  int side = 1;
  double length = kSpikeLength;
};

struct BaseCurve {
  bool curved = false;  // semicircular arc of the same arc length
  double length = kSegmentLength;
};

struct GrainShape {
  GrainType type = GrainType::I;
  BaseCurve base;
  std::vector<Spike> spikes;
  double cross_section = kSegmentCrossSection;

  int segment_count() const { return 1 + static_cast<int>(spikes.size()); }
};

struct MaterialSpec {
  std::string name;
  double youngs_modulus_gpa = 3.0;
  double density_gcc = 1.2;
  double friction = 0.5;
  double area_moment_mm4 = 0.122;
};

/// Table of the three sheet materials used for the target grid, keyed by
/// target thickness (0.2, 0.4, 1.0 mm). Other thicknesses get the nearest row.
MaterialSpec target_material_for_thickness(double tau_mm);
MaterialSpec acrylic();
MaterialSpec stainless_steel();

struct TargetShape {
  double tau = 1.0;      // thickness, square cross-section tau x tau
  double lambda = 12.0;  // length along the base
  int spikes = 0;
  double spike_length = kSpikeLength;
  double bending_stiffness = 0.0;  // N*mm^2
  double density_gcc = 1.2;
  MaterialSpec material;
  std::vector<Spike> spike_layout;

  /// Material volume in mm^3 (base plus spikes, square cross-section).
  double volume() const { return tau * tau * (lambda + spikes * spike_length); }
  double mass() const { return volume() * density_gcc * 1e-3; }
};

/// A capsule: the set of points within `radius` of the segment [a, b].
template <typename Scalar>
struct CapsuleT {
  Eigen::Matrix<Scalar, 3, 1> a = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Matrix<Scalar, 3, 1> b = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Scalar radius = Scalar(0.5);
  int body_id = 0;
  bool ferromagnetic = false;

  Scalar length() const { return (b - a).norm(); }
};
using Capsule = CapsuleT<double>;
using CapsuleSet = std::vector<Capsule>;

/// Planar region bounded by a base sub-segment (`origin` -> `origin + edge_base`)
/// and an adjacent spike (`origin` -> `origin + edge_spike`). The side flags
/// mark which of the two remaining parallelogram sides are closed by material.
struct CaptureRegion {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_base = Vec3::Zero();
  Vec3 edge_spike = Vec3::Zero();
  bool far_base_closed = false;  // side at origin + edge_base, parallel to the spike
  bool tip_closed = false;       // side at origin + edge_spike, parallel to the base
};

int segment_count(GrainType type);
GrainShape build_grain(GrainType type);
double grain_mass(const GrainShape& shape, double per_segment_mass = kSegmentMass);
double grain_mass(int segments, double per_segment_mass = kSegmentMass);

/// E [GPa] times I [mm^4], in N*mm^2 (the unit the material tables label
/// mN*m^2).
double bending_stiffness(double youngs_modulus_gpa, double area_moment_mm4);

/// Builds a target cell. Spikes sit at fractions k/(spikes+1) along the
/// length, alternating sides. Throws InvalidArgument when lambda < tau.
TargetShape build_target(double tau, double lambda, int spikes, const MaterialSpec& material);
TargetShape build_target(double tau, double lambda, int spikes);

inline constexpr int kDefaultArcSubdivisions = 6;
int default_target_subdivisions(double lambda);

/// Point on the base polyline/arc at `fraction` of its length, in the local
/// grain frame (straight base along +x from the origin; arcs bulge toward -y).
Vec3 base_point(const BaseCurve& base, double fraction);

CapsuleSet discretize(const GrainShape& shape, int arc_subdivisions = kDefaultArcSubdivisions);
std::vector<CaptureRegion> capture_regions(const GrainShape& shape);

/// Target split into chained links along +x. Spike capsules belong to the
/// link whose span contains their root.
struct TargetDiscretization {
  std::vector<CapsuleSet> links;
  std::vector<std::vector<CaptureRegion>> regions;  // per link
  std::vector<Vec3> joints;                         // shared endpoint between link k and k+1
  double link_length = 0.0;
};
TargetDiscretization discretize(const TargetShape& shape, int target_subdivisions);

double total_length(const CapsuleSet& capsules);

/// Catalog text: one `key=value` block per item, blank line separated.
/// Keys: type, tau_mm, lambda_mm, spikes, E_GPa, I_mm4, density_gcc, mu.
void write_grain_catalog(std::ostream& os, const std::vector<GrainShape>& grains);
void write_target_catalog(std::ostream& os, const std::vector<TargetShape>& targets);
std::vector<TargetShape> read_target_catalog(std::istream& is);
std::vector<GrainShape> read_grain_catalog(std::istream& is);

}  // namespace tangle
