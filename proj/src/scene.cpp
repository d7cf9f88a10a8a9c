#include "tangle/scene.hpp"

#include "tangle/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace tangle {

Container Container::cylinder(double diameter, double height) {
  Container c;
  c.kind = ContainerKind::Cylinder;
  c.diameter = diameter;
  c.height = height;
  return c;
}

Container Container::bowl(double bottom_diameter, double top_diameter, double depth) {
  if (!(bottom_diameter > 0.0) || !(top_diameter > bottom_diameter) || !(depth > 0.0))
    throw InvalidArgument("simulate", "bowl needs 0 < bottom diameter < top diameter and depth > 0");
  Container c;
  c.kind = ContainerKind::Bowl;
  c.bottom_diameter = bottom_diameter;
  c.top_diameter = top_diameter;
  c.depth = depth;
  return c;
}

Container Container::plane() { return Container{}; }

Capsule Body::world_capsule(std::size_t i) const {
  Capsule c = shape[i];
  c.a = to_world(c.a);
  c.b = to_world(c.b);
  return c;
}

CapsuleSet Body::world_shape() const {
  CapsuleSet out;
  out.reserve(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) out.push_back(world_capsule(i));
  return out;
}

CaptureRegion Body::world_region(std::size_t i) const {
  CaptureRegion r = regions[i];
  r.origin = to_world(r.origin);
  r.edge_base = orientation * r.edge_base;
  r.edge_spike = orientation * r.edge_spike;
  return r;
}

double SceneState::total_mass() const {
  double m = 0.0;
  for (const auto& b : bodies) m += b.mass;
  return m;
}

double SceneState::kinetic_energy() const {
  double e = 0.0;
  for (const auto& b : bodies) {
    if (b.pinned) continue;
    const Vec3 w_local = b.orientation.conjugate() * b.angular_velocity;
    e += 0.5 * b.inertial_mass * b.velocity.squaredNorm() + 0.5 * w_local.dot(b.inertia * w_local);
  }
  return e;
}

int SceneState::group_count() const {
  std::set<int> groups;
  for (const auto& b : bodies) groups.insert(b.group);
  return static_cast<int>(groups.size());
}

Body make_body(CapsuleSet capsules, std::vector<CaptureRegion> regions, double density_gcc,
               double cross_section, double bookkeeping_mass, double min_inertial_mass) {
  if (capsules.empty()) throw InvalidArgument("simulate", "body needs at least one capsule");
  const double area = cross_section * cross_section;
  const double rho = density_gcc * 1e-3;  // g/mm^3

  double total = 0.0;
  Vec3 com = Vec3::Zero();
  std::vector<double> masses;
  for (const auto& c : capsules) {
    const double len = c.length();
    const double m = len > 0.0 ? rho * area * len : rho * (4.0 / 3.0) * 3.14159265358979 * std::pow(c.radius, 3);
    masses.push_back(m);
    total += m;
    com += m * 0.5 * (c.a + c.b);
  }
  com /= total;

  Mat3 inertia = Mat3::Zero();
  for (std::size_t i = 0; i < capsules.size(); ++i) {
    auto& c = capsules[i];
    c.a -= com;
    c.b -= com;
    const double m = masses[i];
    const double len = c.length();
    const Vec3 mid = 0.5 * (c.a + c.b);
    Mat3 own = Mat3::Identity() * (m * area / 6.0);
    if (len > 0.0) {
      const Vec3 d = (c.b - c.a) / len;
      own += m * len * len / 12.0 * (Mat3::Identity() - d * d.transpose());
    }
    inertia += own + m * (mid.squaredNorm() * Mat3::Identity() - mid * mid.transpose());
  }
  for (auto& r : regions) r.origin -= com;

  Body body;
  body.shape = std::move(capsules);
  body.regions = std::move(regions);
  body.mass = bookkeeping_mass;
  body.inertial_mass = total;
  // Thin rods have almost no inertia about their axis; lift the smallest
  // principal moments so joint and contact torques stay integrable.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  const Vec3 moments = eig.eigenvalues().cwiseMax(kMinInertiaRatio * eig.eigenvalues().maxCoeff());
  body.inertia = eig.eigenvectors() * moments.asDiagonal() * eig.eigenvectors().transpose();
  if (total < min_inertial_mass) {
    const double scale = min_inertial_mass / total;
    body.inertial_mass *= scale;
    body.inertia *= scale;
  }
  double bound = 0.0;
  for (const auto& c : body.shape)
    bound = std::max({bound, c.a.norm() + c.radius, c.b.norm() + c.radius});
  body.bound_radius = bound;
  body.position = com;
  return body;
}

Body make_grain_body(GrainType type, double density_gcc, bool ferromagnetic, double per_segment_mass) {
  const GrainShape shape = build_grain(type);
  CapsuleSet caps = discretize(shape);
  for (auto& c : caps) c.ferromagnetic = ferromagnetic;
  Body b = make_body(std::move(caps), capture_regions(shape), density_gcc, shape.cross_section,
                     grain_mass(shape, per_segment_mass));
  b.kind = BodyKind::Grain;
  b.ferromagnetic = ferromagnetic;
  b.position = Vec3::Zero();
  return b;
}

double stable_angular_stiffness(double dt, double link_inertia) {
  if (!(dt > 0.0)) return std::numeric_limits<double>::infinity();
  // Two equal links: omega^2 = 2k / I; keep omega * dt below 0.5.
  return link_inertia * 0.125 / (dt * dt);
}

ArticulatedTarget make_target_bodies(const TargetShape& shape, int subdivisions, double min_inertial_mass,
                                     double dt) {
  const TargetDiscretization disc = discretize(shape, subdivisions);
  const double stiffness = shape.bending_stiffness / disc.link_length * kNewtonToInternal;
  ArticulatedTarget out;
  const double total_len = shape.lambda + shape.spikes * shape.spike_length;

  auto link_mass = [&](const CapsuleSet& caps) { return shape.mass() * total_length(caps) / total_len; };

  std::vector<Body> links;
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < disc.links.size(); ++k) {
    const double m = link_mass(disc.links[k]);
    Body b = make_body(disc.links[k], disc.regions[k], shape.density_gcc, shape.tau, m, min_inertial_mass);
    b.kind = BodyKind::Target;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(b.inertia, Eigen::EigenvaluesOnly);
    cap = std::min(cap, stable_angular_stiffness(dt, eig.eigenvalues().minCoeff()));
    links.push_back(std::move(b));
  }

  if (links.size() == 1 || stiffness > kRigidMergeFactor * cap) {
    CapsuleSet caps;
    std::vector<CaptureRegion> regions;
    for (std::size_t k = 0; k < disc.links.size(); ++k) {
      caps.insert(caps.end(), disc.links[k].begin(), disc.links[k].end());
      regions.insert(regions.end(), disc.regions[k].begin(), disc.regions[k].end());
    }
    for (auto& c : caps) c.body_id = 0;
    Body b = make_body(std::move(caps), std::move(regions), shape.density_gcc, shape.tau, shape.mass(),
                       min_inertial_mass);
    b.kind = BodyKind::Target;
    out.links.push_back(std::move(b));
    return out;
  }

  out.links = std::move(links);
  for (std::size_t k = 0; k < disc.joints.size(); ++k) {
    Joint j;
    j.body_a = static_cast<int>(k);
    j.body_b = static_cast<int>(k + 1);
    j.anchor_a = disc.joints[k] - out.links[k].position;
    j.anchor_b = disc.joints[k] - out.links[k + 1].position;
    j.angular_stiffness = std::min(stiffness, cap);
    out.joints.push_back(j);
  }
  return out;
}

namespace {

const char* kind_name(ContainerKind k) {
  switch (k) {
    case ContainerKind::Cylinder: return "cylinder";
    case ContainerKind::Bowl: return "bowl";
    case ContainerKind::Plane: return "plane";
  }
  return "plane";
}

ContainerKind parse_kind(const std::string& s) {
  if (s == "cylinder") return ContainerKind::Cylinder;
  if (s == "bowl") return ContainerKind::Bowl;
  if (s == "plane") return ContainerKind::Plane;
  throw SchemaError(0, "unknown container kind '" + s + "'");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put(std::ostream& os, const Vec3& v) { os << ' ' << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()); }

Vec3 get3(std::istream& is) {
  Vec3 v;
  is >> v.x() >> v.y() >> v.z();
  return v;
}

void expect(std::istream& is, const std::string& word) {
  std::string w;
  is >> w;
  if (w != word) throw SchemaError(0, "snapshot: expected '" + word + "', got '" + w + "'");
}

}  // namespace

void write_snapshot(std::ostream& os, const SceneState& s) {
  os << "tangle-scene 1\n";
  os << "seed " << s.rng_seed << '\n';
  os << "time " << num(s.time) << '\n';
  os << "steps " << s.steps << '\n';
  os << "gravity";
  put(os, s.gravity);
  os << '\n';
  const auto& c = s.container;
  os << "container " << kind_name(c.kind) << ' ' << num(c.diameter) << ' ' << num(c.height) << ' '
     << num(c.bottom_diameter) << ' ' << num(c.top_diameter) << ' ' << num(c.depth) << ' '
     << num(c.wall_lift) << ' ' << num(c.wall_lift_rate);
  put(os, c.offset);
  put(os, c.velocity);
  os << '\n';
  os << "bodies " << s.bodies.size() << '\n';
  for (const auto& b : s.bodies) {
    os << "body " << b.group << ' ' << static_cast<int>(b.kind) << ' ' << b.ferromagnetic << ' ' << b.pinned
       << ' ' << num(b.mass) << ' ' << num(b.inertial_mass) << ' ' << num(b.bound_radius);
    put(os, b.position);
    os << ' ' << num(b.orientation.w()) << ' ' << num(b.orientation.x()) << ' ' << num(b.orientation.y())
       << ' ' << num(b.orientation.z());
    put(os, b.velocity);
    put(os, b.angular_velocity);
    os << ' ' << b.shape.size() << ' ' << b.regions.size() << '\n';
    os << "inertia";
    for (int i = 0; i < 9; ++i) os << ' ' << num(b.inertia(i / 3, i % 3));
    os << '\n';
    for (const auto& cap : b.shape) {
      os << "cap";
      put(os, cap.a);
      put(os, cap.b);
      os << ' ' << num(cap.radius) << ' ' << cap.ferromagnetic << '\n';
    }
    for (const auto& r : b.regions) {
      os << "region";
      put(os, r.origin);
      put(os, r.edge_base);
      put(os, r.edge_spike);
      os << ' ' << r.far_base_closed << ' ' << r.tip_closed << '\n';
    }
  }
  os << "joints " << s.joints.size() << '\n';
  for (const auto& j : s.joints) {
    os << "joint " << j.body_a << ' ' << j.body_b;
    put(os, j.anchor_a);
    put(os, j.anchor_b);
    os << ' ' << num(j.rest.w()) << ' ' << num(j.rest.x()) << ' ' << num(j.rest.y()) << ' ' << num(j.rest.z())
       << ' ' << num(j.angular_stiffness) << '\n';
  }
  os << "end\n";
}

SceneState read_snapshot(std::istream& is) {
  SceneState s;
  expect(is, "tangle-scene");
  int version = 0;
  is >> version;
  if (version != 1) throw SchemaError(1, "unsupported snapshot version " + std::to_string(version));
  expect(is, "seed");
  is >> s.rng_seed;
  expect(is, "time");
  is >> s.time;
  expect(is, "steps");
  is >> s.steps;
  expect(is, "gravity");
  s.gravity = get3(is);
  expect(is, "container");
  std::string kind;
  is >> kind;
  s.container.kind = parse_kind(kind);
  auto& c = s.container;
  is >> c.diameter >> c.height >> c.bottom_diameter >> c.top_diameter >> c.depth >> c.wall_lift >> c.wall_lift_rate;
  c.offset = get3(is);
  c.velocity = get3(is);
  expect(is, "bodies");
  std::size_t n = 0;
  is >> n;
  s.bodies.resize(n);
  for (auto& b : s.bodies) {
    expect(is, "body");
    int kind_i = 0;
    std::size_t ncap = 0, nreg = 0;
    double qw, qx, qy, qz;
    is >> b.group >> kind_i >> b.ferromagnetic >> b.pinned >> b.mass >> b.inertial_mass >> b.bound_radius;
    b.kind = static_cast<BodyKind>(kind_i);
    b.position = get3(is);
    is >> qw >> qx >> qy >> qz;
    b.orientation = Quat(qw, qx, qy, qz);
    b.velocity = get3(is);
    b.angular_velocity = get3(is);
    is >> ncap >> nreg;
    expect(is, "inertia");
    for (int i = 0; i < 9; ++i) is >> b.inertia(i / 3, i % 3);
    b.shape.resize(ncap);
    for (auto& cap : b.shape) {
      expect(is, "cap");
      cap.a = get3(is);
      cap.b = get3(is);
      is >> cap.radius >> cap.ferromagnetic;
    }
    b.regions.resize(nreg);
    for (auto& r : b.regions) {
      expect(is, "region");
      r.origin = get3(is);
      r.edge_base = get3(is);
      r.edge_spike = get3(is);
      is >> r.far_base_closed >> r.tip_closed;
    }
  }
  expect(is, "joints");
  is >> n;
  s.joints.resize(n);
  for (auto& j : s.joints) {
    expect(is, "joint");
    double qw, qx, qy, qz;
    is >> j.body_a >> j.body_b;
    j.anchor_a = get3(is);
    j.anchor_b = get3(is);
    is >> qw >> qx >> qy >> qz >> j.angular_stiffness;
    j.rest = Quat(qw, qx, qy, qz);
  }
  expect(is, "end");
  if (!is) throw SchemaError(0, "truncated snapshot");
  return s;
}

void write_trajectory_header(std::ostream& os) { os << "step,body_id,x,y,z,qw,qx,qy,qz\n"; }

void append_trajectory(std::ostream& os, const SceneState& s) {
  char buf[256];
  for (std::size_t i = 0; i < s.bodies.size(); ++i) {
    const auto& b = s.bodies[i];
    std::snprintf(buf, sizeof buf, "%llu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<unsigned long long>(s.steps), i, b.position.x(), b.position.y(), b.position.z(),
                  b.orientation.w(), b.orientation.x(), b.orientation.y(), b.orientation.z());
    os << buf;
  }
}

}  // namespace tangle
