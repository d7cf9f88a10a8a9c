#include "tangle/deposit.hpp"

#include "tangle/distance.hpp"
#include "tangle/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tangle {

namespace {

struct Box2 {
  double x0, y0, x1, y1;
  bool overlaps(const Box2& o, double margin) const {
    return !(o.x0 > x1 + margin || o.x1 < x0 - margin || o.y0 > y1 + margin || o.y1 < y0 - margin);
  }
};

Box2 xy_box(const Capsule& c) {
  return {std::min(c.a.x(), c.b.x()) - c.radius, std::min(c.a.y(), c.b.y()) - c.radius,
          std::max(c.a.x(), c.b.x()) + c.radius, std::max(c.a.y(), c.b.y()) + c.radius};
}

// Clearance to the bowl wall, with the cone continued above the rim so
// bodies released high still land inside.
double cone_gap(const Container& c, const Vec3& p, double r) {
  const double h = p.z() - c.offset.z();
  const double rho = std::hypot(p.x() - c.offset.x(), p.y() - c.offset.y());
  const double slope = 0.5 * (c.top_diameter - c.bottom_diameter) / c.depth;
  const double cos_a = 1.0 / std::sqrt(1.0 + slope * slope);
  return -(rho - 0.5 * c.bottom_diameter - std::max(h, 0.0) * slope) * cos_a - r;
}

double container_gap(const Container& c, const Capsule& cap) {
  double g = std::min(cap.a.z(), cap.b.z()) - cap.radius - c.offset.z();
  if (c.kind == ContainerKind::Bowl) g = std::min({g, cone_gap(c, cap.a, cap.radius), cone_gap(c, cap.b, cap.radius)});
  return g;
}

}  // namespace

LowerResult lower_until_contact(SceneState& state, std::span<const int> ids, double stop_gap, int max_iterations) {
  LowerResult out;
  if (ids.empty()) return out;
  std::vector<char> moving(state.bodies.size(), 0);
  for (int id : ids) moving.at(static_cast<std::size_t>(id)) = 1;

  auto moving_caps = [&] {
    CapsuleSet caps;
    for (int id : ids) {
      const Body& b = state.bodies[id];
      for (std::size_t i = 0; i < b.shape.size(); ++i) caps.push_back(b.world_capsule(i));
    }
    return caps;
  };

  CapsuleSet caps = moving_caps();
  Box2 reach{1e300, 1e300, -1e300, -1e300};
  double top = -1e300;
  for (const auto& c : caps) {
    const Box2 b = xy_box(c);
    reach = {std::min(reach.x0, b.x0), std::min(reach.y0, b.y0), std::max(reach.x1, b.x1), std::max(reach.y1, b.y1)};
    top = std::max({top, c.a.z() + c.radius, c.b.z() + c.radius});
  }
  CapsuleSet obstacles;
  for (std::size_t bi = 0; bi < state.bodies.size(); ++bi) {
    if (moving[bi]) continue;
    const Body& b = state.bodies[bi];
    for (std::size_t i = 0; i < b.shape.size(); ++i) {
      const Capsule c = b.world_capsule(i);
      if (std::min(c.a.z(), c.b.z()) - c.radius > top) continue;
      if (!reach.overlaps(xy_box(c), 0.5)) continue;
      obstacles.push_back(c);
    }
  }

  for (int it = 0; it < max_iterations; ++it) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& m : caps) {
      gap = std::min(gap, container_gap(state.container, m));
      const Box2 mb = xy_box(m);
      for (const auto& o : obstacles) {
        if (!mb.overlaps(xy_box(o), gap)) continue;
        gap = std::min(gap, capsule_closest_distance(m, o).distance);
      }
    }
    out.final_gap = gap;
    if (gap < stop_gap) {
      out.touched = true;
      break;
    }
    const double move = gap - 0.5 * stop_gap;
    for (int id : ids) state.bodies[id].position.z() -= move;
    for (auto& c : caps) {
      c.a.z() -= move;
      c.b.z() -= move;
    }
    out.travel += move;
  }
  return out;
}

double pile_top(const SceneState& state, double x, double y, double reach) {
  double top = state.container.offset.z();
  const Box2 probe{x - reach, y - reach, x + reach, y + reach};
  for (const auto& b : state.bodies)
    for (std::size_t i = 0; i < b.shape.size(); ++i) {
      const Capsule c = b.world_capsule(i);
      if (probe.overlaps(xy_box(c), 0.0)) top = std::max({top, c.a.z() + c.radius, c.b.z() + c.radius});
    }
  return top;
}

int drop_bodies(SceneState& state, std::vector<Body> bodies, const std::vector<Joint>& joints, Rng& rng,
                double spread) {
  if (bodies.empty()) throw InvalidArgument("deposit", "nothing to drop");
  Vec3 centroid = Vec3::Zero();
  double total = 0.0;
  for (const auto& b : bodies) {
    centroid += b.inertial_mass * b.position;
    total += b.inertial_mass;
  }
  centroid /= total;
  double extent = 0.0, below = 0.0;
  for (const auto& b : bodies)
    for (std::size_t i = 0; i < b.shape.size(); ++i) {
      const Capsule c = b.world_capsule(i);
      for (const Vec3& p : {c.a, c.b}) {
        extent = std::max(extent, std::hypot(p.x() - centroid.x(), p.y() - centroid.y()) + c.radius);
        below = std::max(below, centroid.z() - p.z() + c.radius);
      }
    }

  const Container& c = state.container;
  double radius = 50.0;
  if (c.kind == ContainerKind::Cylinder) radius = std::max(0.0, 0.5 * c.diameter - extent - 0.05);
  if (c.kind == ContainerKind::Bowl) radius = 0.4 * c.bottom_diameter;
  if (spread > 0.0) radius = std::min(radius, spread);
  const double r = radius * std::sqrt(uniform01(rng));
  const double a = 2.0 * std::numbers::pi * uniform01(rng);
  const double x = c.offset.x() + r * std::cos(a);
  const double y = c.offset.y() + r * std::sin(a);
  double z = pile_top(state, x, y, extent) + below + 1.0;
  if (c.kind == ContainerKind::Bowl) {
    // Raise the release until every point is inside the (continued) cone.
    const double slope = 0.5 * (c.top_diameter - c.bottom_diameter) / c.depth;
    const double cos_a = 1.0 / std::sqrt(1.0 + slope * slope);
    for (const auto& b : bodies)
      for (std::size_t i = 0; i < b.shape.size(); ++i) {
        const Capsule cap = b.world_capsule(i);
        for (const Vec3& p : {cap.a, cap.b}) {
          const Vec3 q = p - centroid + Vec3(x, y, z);
          const double rho = std::hypot(q.x() - c.offset.x(), q.y() - c.offset.y());
          const double need = (rho + cap.radius / cos_a + 0.05 - 0.5 * c.bottom_diameter) / slope;
          z += std::max(0.0, need - (q.z() - c.offset.z()));
        }
      }
  }
  const Vec3 shift = Vec3(x, y, z) - centroid;

  const int first = static_cast<int>(state.bodies.size());
  std::vector<int> ids;
  for (auto& b : bodies) {
    b.position += shift;
    ids.push_back(static_cast<int>(state.bodies.size()));
    state.bodies.push_back(std::move(b));
  }
  for (Joint j : joints) {
    j.body_a += first;
    j.body_b += first;
    state.joints.push_back(j);
  }
  lower_until_contact(state, ids);
  return first;
}

void erase_bodies(SceneState& state, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) return;
  const int n = static_cast<int>(state.bodies.size());
  if (ids.front() < 0 || ids.back() >= n) throw InvalidArgument("deposit", "body index out of range");
  std::vector<int> remap(n, -1);
  std::vector<Body> kept;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < ids.size() && ids[k] == i) {
      ++k;
      continue;
    }
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(std::move(state.bodies[i]));
  }
  state.bodies = std::move(kept);
  std::vector<Joint> joints;
  for (Joint j : state.joints) {
    if (remap[j.body_a] < 0 || remap[j.body_b] < 0) continue;
    j.body_a = remap[j.body_a];
    j.body_b = remap[j.body_b];
    joints.push_back(j);
  }
  state.joints = std::move(joints);
  state.contacts.clear();
}

RelaxResult relax_bodies(SceneState& state, std::span<const int> ids, const SimParams& params,
                         std::uint64_t max_steps, std::uint64_t chunk) {
  RelaxResult out;
  if (ids.empty()) {
    out.converged = true;
    return out;
  }
  if (chunk == 0) throw InvalidArgument("deposit", "relax chunk must be positive");
  std::vector<int> local_of(state.bodies.size(), -1);
  const double threshold = params.settle_ke_threshold * kJouleToInternal;
  std::uint64_t quiet = 0;

  while (out.steps < max_steps) {
    // Movers' reach: their boxes grown by a margin that covers a chunk of motion.
    Eigen::AlignedBox3d reach;
    double speed = 0.0;
    for (int id : ids) {
      const Body& b = state.bodies.at(static_cast<std::size_t>(id));
      for (std::size_t i = 0; i < b.shape.size(); ++i) {
        const Capsule c = b.world_capsule(i);
        reach.extend(c.a - Vec3::Constant(c.radius)).extend(c.a + Vec3::Constant(c.radius));
        reach.extend(c.b - Vec3::Constant(c.radius)).extend(c.b + Vec3::Constant(c.radius));
      }
      speed = std::max(speed, b.velocity.norm() + b.angular_velocity.norm() * b.bound_radius);
    }
    const double margin = 2.0 + 2.0 * speed * params.dt * static_cast<double>(chunk);
    reach.min().array() -= margin;
    reach.max().array() += margin;

    SceneState sub;
    sub.container = state.container;
    sub.gravity = state.gravity;
    std::vector<int> global;
    std::fill(local_of.begin(), local_of.end(), -1);
    for (int id : ids) {
      local_of[id] = static_cast<int>(global.size());
      global.push_back(id);
      sub.bodies.push_back(state.bodies[id]);
    }
    for (std::size_t bi = 0; bi < state.bodies.size(); ++bi) {
      if (local_of[bi] >= 0) continue;
      const Body& b = state.bodies[bi];
      bool near = false;
      for (std::size_t i = 0; i < b.shape.size() && !near; ++i) {
        const Capsule c = b.world_capsule(i);
        Eigen::AlignedBox3d box(c.a.cwiseMin(c.b) - Vec3::Constant(c.radius), c.a.cwiseMax(c.b) + Vec3::Constant(c.radius));
        near = box.intersects(reach);
      }
      if (!near) continue;
      local_of[bi] = static_cast<int>(global.size());
      global.push_back(static_cast<int>(bi));
      sub.bodies.push_back(b);
      sub.bodies.back().pinned = true;
      sub.bodies.back().velocity.setZero();
      sub.bodies.back().angular_velocity.setZero();
    }
    for (const Joint& j : state.joints) {
      const int a = local_of[j.body_a], b = local_of[j.body_b];
      if (a < 0 || b < 0) continue;
      Joint lj = j;
      lj.body_a = a;
      lj.body_b = b;
      sub.joints.push_back(lj);
    }

    const std::uint64_t n = std::min(chunk, max_steps - out.steps);
    for (std::uint64_t k = 0; k < n; ++k) {
      advance(sub, params);
      ++out.steps;
      if (sub.kinetic_energy() < threshold) {
        if (++quiet >= params.settle_window) {
          out.converged = true;
          break;
        }
      } else {
        quiet = 0;
      }
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Body& dst = state.bodies[ids[k]];
      const Body& src = sub.bodies[k];
      dst.position = src.position;
      dst.orientation = src.orientation;
      dst.velocity = src.velocity;
      dst.angular_velocity = src.angular_velocity;
    }
    if (out.converged) break;
  }
  for (int id : ids) {
    state.bodies[id].velocity.setZero();
    state.bodies[id].angular_velocity.setZero();
  }
  return out;
}

Body posed_grain(GrainType type, double density_gcc, bool ferromagnetic, int group, Rng& rng) {
  Body b = make_grain_body(type, density_gcc, ferromagnetic);
  b.orientation = random_rotation(rng);
  b.group = group;
  return b;
}

ArticulatedTarget posed_target(const TargetShape& shape, int subdivisions, double min_inertial_mass, double dt,
                               int group, Rng& rng, double max_tilt) {
  ArticulatedTarget t = make_target_bodies(shape, subdivisions, min_inertial_mass, dt);
  const double yaw = 2.0 * std::numbers::pi * uniform01(rng);
  const double roll = 2.0 * std::numbers::pi * uniform01(rng);
  const double tilt = uniform(rng, -max_tilt, max_tilt);
  const Quat q = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * Quat(Eigen::AngleAxisd(tilt, Vec3::UnitY())) *
                 Quat(Eigen::AngleAxisd(roll, Vec3::UnitX()));
  const Vec3 centre(0.5 * shape.lambda, 0.0, 0.0);
  for (auto& b : t.links) {
    b.position = q * (b.position - centre);
    b.orientation = q * b.orientation;
    b.group = group;
  }
  return t;
}

SceneState fill_cylinder(GrainType type, int segments, double density_gcc, std::uint64_t seed,
                         double min_inertial_mass, const Container& cylinder) {
  if (segments < 0) throw InvalidArgument("deposit", "segment count must be non-negative");
  SceneState s;
  s.container = cylinder;
  s.rng_seed = seed;
  Rng rng(seed);
  const int per = segment_count(type);
  const int count = (segments + per - 1) / per;
  for (int g = 0; g < count; ++g) {
    Body b = posed_grain(type, density_gcc, false, g, rng);
    if (b.inertial_mass < min_inertial_mass) {
      b.inertia *= min_inertial_mass / b.inertial_mass;
      b.inertial_mass = min_inertial_mass;
    }
    drop_bodies(s, {std::move(b)}, {}, rng);
  }
  return s;
}

SceneState fill_bowl(const TargetShape& target, const BowlFill& fill, const SimParams& params, std::uint64_t seed,
                     const Container& bowl) {
  if (fill.units < 0) throw InvalidArgument("deposit", "unit count must be non-negative");
  SceneState s;
  s.container = bowl;
  s.rng_seed = seed;
  Rng rng(seed);
  const int subdivisions = fill.subdivisions > 0 ? fill.subdivisions : default_target_subdivisions(target.lambda);
  for (int u = 0; u < fill.units; ++u) {
    ArticulatedTarget t = posed_target(target, subdivisions, params.min_inertial_mass, params.dt, u, rng);
    const int n = static_cast<int>(t.links.size());
    const int first = drop_bodies(s, std::move(t.links), t.joints, rng);
    if (fill.relax_steps > 0) {
      std::vector<int> ids(n);
      for (int k = 0; k < n; ++k) ids[k] = first + k;
      relax_bodies(s, ids, params, fill.relax_steps);
    }
  }
  if (fill.settle_steps > 0) {
    std::vector<int> all(s.bodies.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    relax_bodies(s, all, params, fill.settle_steps, 500);
  }
  return s;
}

PackRun pack_run(GrainType type, int segments, double density_gcc, std::uint64_t seed, const SimParams& params,
                 const ShakeSpec* shake) {
  SceneState filled = fill_cylinder(type, segments, density_gcc, seed, params.min_inertial_mass);
  SettleResult r = shake ? tangle::shake(std::move(filled), params, *shake) : settle(std::move(filled), params);
  PackRun out;
  out.h0 = structure_height(r.state);
  out.packing_fraction = out.h0 > 0.0 ? cylinder_packing_fraction(r.state) : 0.0;
  out.converged = r.converged;
  out.state = std::move(r.state);
  return out;
}

IntegrityRun integrity_run(GrainType type, int segments, double density_gcc, std::uint64_t seed,
                           const SimParams& params, const ShakeSpec* shake, const RemovalSpec& removal) {
  PackRun packed = pack_run(type, segments, density_gcc, seed, params, shake);
  if (!(packed.h0 > 0.0)) throw InvalidArgument("deposit", "empty column");
  const SettleResult relaxed = remove_cylinder_and_relax(std::move(packed.state), params, removal);
  IntegrityRun out;
  out.h0 = packed.h0;
  out.h_after = structure_height(relaxed.state);
  out.packing_fraction = packed.packing_fraction;
  out.converged = packed.converged && relaxed.converged;
  out.integrity = integrity(out.h0, std::clamp(out.h0 - out.h_after, 0.0, out.h0));
  return out;
}

}  // namespace tangle
