#include "tangle/pick.hpp"

#include "tangle/deposit.hpp"
#include "tangle/distance.hpp"
#include "tangle/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <numbers>

namespace tangle {

std::string_view to_string(Protocol p) { return p == Protocol::Magnet ? "magnet" : "gripper"; }

Protocol parse_protocol(std::string_view text) {
  if (text == "magnet") return Protocol::Magnet;
  if (text == "gripper") return Protocol::Gripper;
  throw InvalidArgument("pick", "unknown protocol '" + std::string(text) + "'");
}

void MagnetSpec::validate() const {
  if (!(face_diameter > 0.0)) throw InvalidArgument("pick", "magnet face diameter must be positive");
  if (!(capture_gap > 0.0)) throw InvalidArgument("pick", "magnet capture gap must be positive");
}

void GripperSpec::validate() const {
  if (!(jaw_width > 0.0) || !(jaw_depth > 0.0) || !(closing_stroke > 0.0) || !(finger_length > 0.0))
    throw InvalidArgument("pick", "gripper dimensions must be positive");
  if (!(closed_gap() > 0.0)) throw InvalidArgument("pick", "gripper stroke closes past the jaw width");
}

std::vector<TargetConfig> full_grid() {
  std::vector<TargetConfig> grid;
  for (double tau : {0.2, 0.4, 1.0})
    for (double lambda : {12.0, 60.0, 120.0})
      for (int spikes : {0, 1, 2}) grid.push_back({tau, lambda, spikes});
  return grid;
}

int picked_units(double picked_mass, double unit_mass, int available) {
  if (!(unit_mass > 0.0)) throw InvalidArgument("pick", "unit mass must be positive");
  if (!(picked_mass >= 0.0)) throw InvalidArgument("pick", "picked mass must be non-negative");
  const double units = std::round(picked_mass / unit_mass);
  return static_cast<int>(std::clamp(units, 0.0, static_cast<double>(available)));
}

namespace {

double body_top(const Body& b) {
  double top = -1e300;
  for (std::size_t i = 0; i < b.shape.size(); ++i) {
    const Capsule c = b.world_capsule(i);
    top = std::max({top, c.a.z() + c.radius, c.b.z() + c.radius});
  }
  return top;
}

bool under_disc(const Body& b, const Vec3& centre, double radius) {
  for (std::size_t i = 0; i < b.shape.size(); ++i) {
    const Capsule c = b.world_capsule(i);
    for (const Vec3& p : {c.a, c.b})
      if (std::hypot(p.x() - centre.x(), p.y() - centre.y()) <= radius) return true;
  }
  return false;
}

double body_distance(const Body& a, const Body& b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.shape.size(); ++i) {
    const Capsule ca = a.world_capsule(i);
    for (std::size_t j = 0; j < b.shape.size(); ++j)
      best = std::min(best, capsule_closest_distance(ca, b.world_capsule(j)).distance);
  }
  return best;
}

// Liang-Barsky clip of [p, q] against the box; true when any part is inside.
bool segment_hits_box(const Vec3& p, const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0, t1 = 1.0;
  const Vec3 d = q - p;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (p[k] < lo[k] || p[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - p[k]) / d[k], tb = (hi[k] - p[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

void tally(const SceneState& scene, PickResult& r) {
  for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
    const Body& b = scene.bodies[i];
    if (b.ferromagnetic) continue;
    (r.picked.count(static_cast<int>(i)) ? r.picked_mass : r.remaining_mass) += b.mass;
  }
}

}  // namespace

std::vector<int> deploy_grains(SceneState& scene, const MagnetSpec& magnet, int grain_count, const GrainSupply& supply,
                               const SimParams& params, Rng& rng) {
  magnet.validate();
  if (grain_count < 0) throw InvalidArgument("pick", "grain count must be non-negative");
  std::vector<int> ids;
  int group = 0;
  for (const auto& b : scene.bodies) group = std::max(group, b.group + 1);
  for (int g = 0; g < grain_count; ++g) {
    Body b = posed_grain(supply.type, supply.density_gcc, true, group + g, rng);
    if (b.inertial_mass < params.min_inertial_mass) {
      b.inertia *= params.min_inertial_mass / b.inertial_mass;
      b.inertial_mass = params.min_inertial_mass;
    }
    const double spread = std::max(0.0, 0.5 * magnet.face_diameter - b.bound_radius);
    const int id = drop_bodies(scene, {std::move(b)}, {}, rng, spread);
    ids.push_back(id);
    if (supply.relax_steps > 0) relax_bodies(scene, std::span<const int>(&ids.back(), 1), params, supply.relax_steps);
  }
  if (supply.settle_steps > 0 && !ids.empty()) {
    const Vec3 axis = scene.container.offset;
    std::vector<int> movers = ids;
    for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
      const Body& b = scene.bodies[i];
      if (!b.ferromagnetic && std::hypot(b.position.x() - axis.x(), b.position.y() - axis.y()) < supply.settle_reach)
        movers.push_back(static_cast<int>(i));
    }
    relax_bodies(scene, movers, params, supply.settle_steps, 500);
  }
  return ids;
}

std::vector<int> magnet_attach(const SceneState& scene, const MagnetSpec& magnet) {
  magnet.validate();
  const Vec3 axis = scene.container.offset;
  const double radius = 0.5 * magnet.face_diameter;
  std::vector<int> ferro;
  double face = -1e300;
  for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
    const Body& b = scene.bodies[i];
    if (!b.ferromagnetic) continue;
    ferro.push_back(static_cast<int>(i));
    if (under_disc(b, axis, radius)) face = std::max(face, body_top(b));
  }
  std::vector<char> held(scene.bodies.size(), 0);
  std::deque<int> queue;
  for (int i : ferro) {
    const Body& b = scene.bodies[i];
    if (under_disc(b, axis, radius) && body_top(b) >= face - magnet.capture_gap) {
      held[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const Body& a = scene.bodies[i];
    for (int j : ferro) {
      if (held[j]) continue;
      const Body& b = scene.bodies[j];
      if ((a.position - b.position).norm() > a.bound_radius + b.bound_radius + magnet.capture_gap) continue;
      if (body_distance(a, b) <= magnet.capture_gap) {
        held[j] = 1;
        queue.push_back(j);
      }
    }
  }
  std::vector<int> out;
  for (int i : ferro)
    if (held[i]) out.push_back(i);
  return out;
}

PickResult magnet_pick_protocol(SceneState& scene, const MagnetSpec& magnet, int grain_count,
                                const LinkModel& link_model, Rng& rng, const GrainSupply& supply,
                                const SimParams& params) {
  PickResult r;
  r.grains = deploy_grains(scene, magnet, grain_count, supply, params, rng);
  if (grain_count == 0) {
    tally(scene, r);
    return r;
  }
  const EntanglementGraph graph = entanglement_graph(scene);
  r.seeds = magnet_attach(scene, magnet);
  if (r.seeds.empty()) throw NoGrainsAttached();
  r.picked = pick_closure(graph, std::set<int>(r.seeds.begin(), r.seeds.end()), link_model, rng);
  tally(scene, r);
  return r;
}

std::vector<int> gripper_grasp(const SceneState& scene, const GripperSpec& gripper) {
  gripper.validate();
  const Vec3 axis = scene.container.offset;
  const double top = pile_top(scene, axis.x(), axis.y(), 0.5 * gripper.jaw_width);
  const Vec3 lo(axis.x() - 0.5 * gripper.closed_gap(), axis.y() - 0.5 * gripper.jaw_depth, top - gripper.finger_length);
  const Vec3 hi(axis.x() + 0.5 * gripper.closed_gap(), axis.y() + 0.5 * gripper.jaw_depth, top);
  std::vector<int> out;
  for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
    const Body& b = scene.bodies[i];
    for (std::size_t k = 0; k < b.shape.size(); ++k) {
      const Capsule c = b.world_capsule(k);
      const Vec3 grow = Vec3::Constant(c.radius);
      if (segment_hits_box(c.a, c.b, lo - grow, hi + grow)) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

PickResult gripper_pick_protocol(const SceneState& scene, const GripperSpec& gripper, const LinkModel& link_model,
                                 Rng& rng) {
  PickResult r;
  r.seeds = gripper_grasp(scene, gripper);
  if (!r.seeds.empty()) {
    const EntanglementGraph graph = entanglement_graph(scene);
    r.picked = pick_closure(graph, std::set<int>(r.seeds.begin(), r.seeds.end()), link_model, rng);
  }
  tally(scene, r);
  return r;
}

void return_picked(SceneState& scene, const PickResult& result, const SimParams& params, std::uint64_t relax_steps,
                   Rng& rng, std::uint64_t settle_steps) {
  std::set<int> groups;
  for (int i : result.picked)
    if (!scene.bodies.at(static_cast<std::size_t>(i)).ferromagnetic) groups.insert(scene.bodies[i].group);

  struct Unit {
    std::vector<Body> links;
    std::vector<Joint> joints;
  };
  std::vector<Unit> units;
  std::vector<int> gone(result.grains.begin(), result.grains.end());
  for (int g : groups) {
    Unit u;
    std::map<int, int> local;
    for (std::size_t i = 0; i < scene.bodies.size(); ++i) {
      if (scene.bodies[i].group != g || scene.bodies[i].ferromagnetic) continue;
      local[static_cast<int>(i)] = static_cast<int>(u.links.size());
      u.links.push_back(scene.bodies[i]);
      gone.push_back(static_cast<int>(i));
    }
    for (const Joint& j : scene.joints) {
      const auto a = local.find(j.body_a), b = local.find(j.body_b);
      if (a == local.end() || b == local.end()) continue;
      Joint lj = j;
      lj.body_a = a->second;
      lj.body_b = b->second;
      u.joints.push_back(lj);
    }
    units.push_back(std::move(u));
  }
  erase_bodies(scene, gone);

  for (auto& u : units) {
    // Fresh yaw about the unit's centroid so returned units do not restack.
    Vec3 centre = Vec3::Zero();
    for (const auto& b : u.links) centre += b.position;
    centre /= static_cast<double>(u.links.size());
    const Quat yaw(Eigen::AngleAxisd(2.0 * std::numbers::pi * uniform01(rng), Vec3::UnitZ()));
    for (auto& b : u.links) {
      b.position = centre + yaw * (b.position - centre);
      b.orientation = yaw * b.orientation;
      b.velocity.setZero();
      b.angular_velocity.setZero();
    }
    const int n = static_cast<int>(u.links.size());
    const int first = drop_bodies(scene, std::move(u.links), u.joints, rng);
    if (relax_steps > 0) {
      std::vector<int> ids(n);
      for (int k = 0; k < n; ++k) ids[k] = first + k;
      relax_bodies(scene, ids, params, relax_steps);
    }
  }
  if (settle_steps > 0 && !units.empty()) {
    std::vector<int> all(scene.bodies.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    relax_bodies(scene, all, params, settle_steps, 500);
  }
}

namespace {

// Records carry what the CSV can hold, so write/read is lossless.
double nine_digits(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

PickDataset run_parametric_study(const std::vector<TargetConfig>& grid, const StudySpec& spec, std::uint64_t seed,
                                 std::vector<std::string>* failures) {
  if (grid.empty()) throw InvalidArgument("pick", "empty target grid");
  if (spec.iterations < 1) throw InvalidArgument("pick", "iterations must be positive");
  PickDataset data;
  data.iterations = spec.iterations;
  data.available_units = spec.units;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const TargetConfig& cfg = grid[c];
    const std::uint64_t cell_seed = derive_seed(seed, c);
    const TargetShape target = build_target(cfg.tau, cfg.lambda, cfg.spikes);
    const double unit_mass = target.mass();
    SceneState bed;
    try {
      bed = fill_bowl(target, BowlFill{spec.units, 0, spec.bed_relax_steps, spec.bed_settle_steps}, spec.params, cell_seed);
    } catch (const Error& e) {
      if (failures) failures->push_back(std::string(e.module()) + ": " + e.what());
      continue;
    }
    const SceneState settled = bed;
    for (int it = 0; it < spec.iterations; ++it) {
      const std::uint64_t it_seed = derive_seed(cell_seed, static_cast<std::uint64_t>(it) + 1);
      Rng rng(it_seed);
      const std::size_t bodies_before = bed.bodies.size();
      try {
        const PickResult r =
            spec.protocol == Protocol::Magnet
                ? magnet_pick_protocol(bed, spec.magnet, spec.grain_count, spec.link_model, rng, spec.supply, spec.params)
                : gripper_pick_protocol(bed, spec.gripper, spec.link_model, rng);
        PickRecord rec;
        rec.protocol = spec.protocol;
        rec.grain_count = spec.protocol == Protocol::Magnet ? spec.grain_count : 0;
        rec.target = cfg;
        rec.iteration = it;
        rec.seed = it_seed;
        rec.picked_mass = nine_digits(r.picked_mass);
        rec.unit_mass = nine_digits(unit_mass);
        rec.picked_units = picked_units(r.picked_mass, unit_mass, spec.units);
        data.records.push_back(rec);
        if (spec.return_mode == ReturnMode::Restore)
          bed = settled;
        else
          return_picked(bed, r, spec.params, spec.return_relax_steps, rng, spec.return_settle_steps);
      } catch (const Error& e) {
        if (failures) failures->push_back(std::string(e.module()) + ": " + e.what());
        // Drop any grains the failed attempt left behind.
        std::vector<int> extra;
        for (std::size_t i = bodies_before; i < bed.bodies.size(); ++i) extra.push_back(static_cast<int>(i));
        erase_bodies(bed, extra);
        if (spec.return_mode == ReturnMode::Restore) bed = settled;
      }
    }
  }
  const bool one_mass = std::all_of(data.records.begin(), data.records.end(),
                                    [&](const PickRecord& r) { return r.unit_mass == data.records.front().unit_mass; });
  data.unit_mass = (!data.records.empty() && one_mass) ? data.records.front().unit_mass : 0.0;
  return data;
}

double success_rate(const std::vector<PickRecord>& records, const std::function<bool(const PickRecord&)>& success) {
  if (records.empty()) throw InvalidArgument("pick", "success rate of no records");
  const auto n = std::count_if(records.begin(), records.end(), success);
  return static_cast<double>(n) / static_cast<double>(records.size());
}

}  // namespace tangle
