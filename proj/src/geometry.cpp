#include "tangle/geometry.hpp"

#include "tangle/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace tangle {

namespace {

constexpr std::array<std::string_view, 9> kTypeNames = {"I", "II", "III", "IV", "V",
                                                       "VI", "VII", "VIII", "IX"};

struct CanonicalGrain {
  bool curved;
  std::vector<Spike> spikes;
};

CanonicalGrain canonical(GrainType type) {
  switch (type) {
    case GrainType::I:
      return {false, {}};
    case GrainType::II:  // L
      return {false, {{1.0, +1}}};
    case GrainType::III:  // T
      return {false, {{0.5, +1}}};
    case GrainType::IV:  // J
      return {true, {{1.0, +1}}};
    case GrainType::V:  // U
      return {false, {{0.0, +1}, {1.0, +1}}};
    case GrainType::VI:  // Z
      return {false, {{0.0, +1}, {1.0, -1}}};
    case GrainType::VII:  // round-bottomed U
      return {true, {{0.0, +1}, {1.0, +1}}};
    case GrainType::VIII:
      return {false, {{0.0, +1}, {1.0 / 3.0, -1}, {2.0 / 3.0, +1}, {1.0, -1}}};
    case GrainType::IX:
      return {false, {{0.0, +1}, {1.0 / 3.0, +1}, {2.0 / 3.0, +1}, {1.0, +1}}};
  }
  return {false, {}};
}

// Regions spanned by each spike and the base up to the neighbouring root
// (or the base end). A region closed on its far side by a same-side spike
// is emitted once, from the lower root.
template <typename PointFn>
std::vector<CaptureRegion> regions_for(const std::vector<Spike>& spikes, PointFn point_at) {
  std::vector<CaptureRegion> out;
  std::vector<double> roots;
  for (const auto& s : spikes) roots.push_back(s.attach_fraction);

  auto spike_at = [&](double f, int side) {
    for (const auto& s : spikes)
      if (std::abs(s.attach_fraction - f) < 1e-12 && s.side == side) return true;
    return false;
  };

  for (const auto& s : spikes) {
    const double f = s.attach_fraction;
    double lower = 0.0;
    double upper = 1.0;
    for (double r : roots) {
      if (r < f - 1e-12) lower = std::max(lower, r);
      if (r > f + 1e-12) upper = std::min(upper, r);
    }
    const Vec3 root = point_at(f);
    const Vec3 spike_edge = Vec3(0.0, s.side * s.length, 0.0);
    if (f < 1.0 - 1e-12) {
      CaptureRegion r;
      r.origin = root;
      r.edge_base = point_at(upper) - root;
      r.edge_spike = spike_edge;
      r.far_base_closed = spike_at(upper, s.side);
      out.push_back(r);
    }
    if (f > 1e-12 && !spike_at(lower, s.side)) {
      CaptureRegion r;
      r.origin = root;
      r.edge_base = point_at(lower) - root;
      r.edge_spike = spike_edge;
      r.far_base_closed = false;
      out.push_back(r);
    }
  }
  return out;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::vector<std::map<std::string, std::string>> read_blocks(std::istream& is) {
  std::vector<std::map<std::string, std::string>> blocks;
  std::map<std::string, std::string> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, line, "expected key=value");
    current[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (!current.empty()) blocks.push_back(std::move(current));
  return blocks;
}

double number_of(const std::map<std::string, std::string>& block, const std::string& key) {
  auto it = block.find(key);
  if (it == block.end()) throw ConfigError(0, key, "missing catalog key");
  return std::stod(it->second);
}

}  // namespace

std::string_view to_string(GrainType type) { return kTypeNames[static_cast<int>(type)]; }

GrainType parse_grain_type(std::string_view text) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == text) return static_cast<GrainType>(i);
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), ::toupper);
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == lower) return static_cast<GrainType>(i);
  throw InvalidArgument("geometry", "unknown grain type '" + std::string(text) + "'");
}

MaterialSpec target_material_for_thickness(double tau_mm) {
  if (tau_mm < 0.3) return {"mylar-0.10", 3.15, 1.4, 0.5, 0.0008};
  if (tau_mm < 0.7) return {"mylar-0.25", 3.15, 1.4, 0.5, 0.0012};
  return acrylic();
}

MaterialSpec acrylic() { return {"acrylic", 3.0, 1.2, 0.5, 0.1220}; }

MaterialSpec stainless_steel() { return {"stainless-steel", 193.0, 7.9, 0.5, 1.0 / 12.0}; }

int segment_count(GrainType type) { return 1 + static_cast<int>(canonical(type).spikes.size()); }

GrainShape build_grain(GrainType type) {
  const auto c = canonical(type);
  GrainShape g;
  g.type = type;
  g.base.curved = c.curved;
  g.spikes = c.spikes;
  return g;
}

double grain_mass(int segments, double per_segment_mass) {
  if (per_segment_mass <= 0.0) throw InvalidArgument("geometry", "per-segment mass must be positive");
  return segments * per_segment_mass;
}

double grain_mass(const GrainShape& shape, double per_segment_mass) {
  return grain_mass(shape.segment_count(), per_segment_mass);
}

double bending_stiffness(double youngs_modulus_gpa, double area_moment_mm4) {
  if (!(youngs_modulus_gpa > 0.0) || !(area_moment_mm4 > 0.0))
    throw InvalidArgument("geometry", "bending stiffness needs E > 0 and I > 0");
  // 1 GPa = 1e3 N/mm^2.
  return youngs_modulus_gpa * 1e3 * area_moment_mm4;
}

TargetShape build_target(double tau, double lambda, int spikes, const MaterialSpec& material) {
  if (!(tau > 0.0)) throw InvalidArgument("geometry", "target thickness must be positive");
  if (!(lambda > 0.0) || lambda < tau)
    throw InvalidArgument("geometry", "target length must be at least its thickness");
  if (spikes < 0) throw InvalidArgument("geometry", "spike count must be non-negative");
  TargetShape t;
  t.tau = tau;
  t.lambda = lambda;
  t.spikes = spikes;
  t.material = material;
  t.density_gcc = material.density_gcc;
  t.bending_stiffness = bending_stiffness(material.youngs_modulus_gpa, material.area_moment_mm4);
  for (int k = 1; k <= spikes; ++k)
    t.spike_layout.push_back({static_cast<double>(k) / (spikes + 1), (k % 2 == 1) ? +1 : -1,
                              t.spike_length});
  return t;
}

TargetShape build_target(double tau, double lambda, int spikes) {
  return build_target(tau, lambda, spikes, target_material_for_thickness(tau));
}

int default_target_subdivisions(double lambda) {
  return std::max(1, static_cast<int>(std::lround(lambda / kSegmentLength)));
}

Vec3 base_point(const BaseCurve& base, double fraction) {
  if (!base.curved) return Vec3(fraction * base.length, 0.0, 0.0);
  const double r = base.length / std::numbers::pi;
  const double theta = std::numbers::pi * (1.0 + fraction);
  return Vec3(r + r * std::cos(theta), r * std::sin(theta), 0.0);
}

CapsuleSet discretize(const GrainShape& shape, int arc_subdivisions) {
  if (arc_subdivisions < 1) throw InvalidArgument("geometry", "arc subdivisions must be >= 1");
  const double radius = 0.5 * shape.cross_section;
  CapsuleSet out;
  if (!shape.base.curved) {
    out.push_back({base_point(shape.base, 0.0), base_point(shape.base, 1.0), radius});
  } else {
    // Chords on a circle enlarged so the polyline keeps the arc length.
    const int n = arc_subdivisions;
    const double r = shape.base.length / std::numbers::pi;
    const double half = std::numbers::pi / (2.0 * n);
    const double scale = shape.base.length / (2.0 * n * std::sin(half)) / r;
    const Vec3 center(r, 0.0, 0.0);
    auto vertex = [&](int k) {
      if (k == 0) return base_point(shape.base, 0.0);
      if (k == n) return base_point(shape.base, 1.0);
      const Vec3 p = base_point(shape.base, static_cast<double>(k) / n);
      return Vec3(center + scale * (p - center));
    };
    for (int k = 0; k < n; ++k) out.push_back({vertex(k), vertex(k + 1), radius});
  }
  for (const auto& s : shape.spikes) {
    const Vec3 root = base_point(shape.base, s.attach_fraction);
    out.push_back({root, root + Vec3(0.0, s.side * s.length, 0.0), radius});
  }
  return out;
}

std::vector<CaptureRegion> capture_regions(const GrainShape& shape) {
  return regions_for(shape.spikes, [&](double f) { return base_point(shape.base, f); });
}

TargetDiscretization discretize(const TargetShape& shape, int target_subdivisions) {
  if (target_subdivisions < 1) throw InvalidArgument("geometry", "target subdivisions must be >= 1");
  TargetDiscretization out;
  const int n = target_subdivisions;
  const double radius = 0.5 * shape.tau;
  out.link_length = shape.lambda / n;
  out.links.resize(n);
  out.regions.resize(n);
  for (int k = 0; k < n; ++k) {
    Capsule c{Vec3(k * out.link_length, 0, 0), Vec3((k + 1) * out.link_length, 0, 0), radius};
    c.body_id = k;
    out.links[k].push_back(c);
    if (k + 1 < n) out.joints.push_back(Vec3((k + 1) * out.link_length, 0, 0));
  }
  auto link_of = [&](double x) {
    return std::clamp(static_cast<int>(std::floor(x / out.link_length)), 0, n - 1);
  };
  for (const auto& s : shape.spike_layout) {
    const Vec3 root(s.attach_fraction * shape.lambda, 0, 0);
    Capsule c{root, root + Vec3(0, s.side * s.length, 0), radius};
    c.body_id = link_of(root.x());
    out.links[c.body_id].push_back(c);
  }
  const auto regions = regions_for(shape.spike_layout,
                                   [&](double f) { return Vec3(f * shape.lambda, 0, 0); });
  for (const auto& r : regions) out.regions[link_of(r.origin.x())].push_back(r);
  return out;
}

double total_length(const CapsuleSet& capsules) {
  double sum = 0.0;
  for (const auto& c : capsules) sum += c.length();
  return sum;
}

void write_grain_catalog(std::ostream& os, const std::vector<GrainShape>& grains) {
  const MaterialSpec m = acrylic();
  os.precision(9);
  for (const auto& g : grains) {
    os << "type=" << to_string(g.type) << '\n'
       << "tau_mm=" << g.cross_section << '\n'
       << "lambda_mm=" << g.base.length << '\n'
       << "spikes=" << g.spikes.size() << '\n'
       << "E_GPa=" << m.youngs_modulus_gpa << '\n'
       << "I_mm4=" << m.area_moment_mm4 << '\n'
       << "density_gcc=" << m.density_gcc << '\n'
       << "mu=" << m.friction << "\n\n";
  }
}

void write_target_catalog(std::ostream& os, const std::vector<TargetShape>& targets) {
  os.precision(9);
  for (const auto& t : targets) {
    os << "type=target\n"
       << "tau_mm=" << t.tau << '\n'
       << "lambda_mm=" << t.lambda << '\n'
       << "spikes=" << t.spikes << '\n'
       << "E_GPa=" << t.material.youngs_modulus_gpa << '\n'
       << "I_mm4=" << t.material.area_moment_mm4 << '\n'
       << "density_gcc=" << t.density_gcc << '\n'
       << "mu=" << t.material.friction << "\n\n";
  }
}

std::vector<TargetShape> read_target_catalog(std::istream& is) {
  std::vector<TargetShape> out;
  for (const auto& block : read_blocks(is)) {
    auto it = block.find("type");
    if (it == block.end() || it->second != "target") continue;
    MaterialSpec m;
    m.name = "catalog";
    m.youngs_modulus_gpa = number_of(block, "E_GPa");
    m.area_moment_mm4 = number_of(block, "I_mm4");
    m.density_gcc = number_of(block, "density_gcc");
    m.friction = number_of(block, "mu");
    out.push_back(build_target(number_of(block, "tau_mm"), number_of(block, "lambda_mm"),
                               static_cast<int>(number_of(block, "spikes")), m));
  }
  return out;
}

std::vector<GrainShape> read_grain_catalog(std::istream& is) {
  std::vector<GrainShape> out;
  for (const auto& block : read_blocks(is)) {
    auto it = block.find("type");
    if (it == block.end() || it->second == "target") continue;
    out.push_back(build_grain(parse_grain_type(it->second)));
  }
  return out;
}

}  // namespace tangle
