#include "tangle/simulate.hpp"

#include "tangle/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tangle {

namespace {

struct WorldCapsule {
  Vec3 a, b;
  double radius;
  int body;
  Eigen::AlignedBox3d box;
};

constexpr std::uint32_t kContainerCode = 0xFFFFFF00u;
constexpr std::uint64_t kSecondContact = 1ull << 63;
constexpr double kParallelSin2 = 1e-2;  // about 6 degrees
constexpr double kJointStability = 0.25;  // (omega dt)^2 bound for joint springs

std::uint64_t pair_key(std::uint32_t i, std::uint32_t j) { return (std::uint64_t(i) << 32) | j; }

// Moves `v` toward zero by at most `amount` without crossing it.
double shrink(double v, double amount) {
  if (v > 0.0) return std::max(0.0, v - amount);
  return std::min(0.0, v + amount);
}

struct SweepBox {
  double lo, hi, u0, u1, v0, v1;
  int body;
  bool pinned;
};

// Per-thread scratch reused across steps to avoid reallocating.
struct Workspace {
  std::vector<Vec3> force;
  std::vector<Vec3> torque;
  std::vector<Vec3> rolling;
  std::vector<char> touching;
  std::vector<WorldCapsule> caps;
  std::vector<std::uint32_t> first_cap;  // per body, plus one past the end
  std::vector<Eigen::AlignedBox3d> body_boxes;
  std::vector<SweepBox> sweep;
  std::vector<std::uint64_t> joint_keys;
  std::vector<Mat3> inv_inertia;
  std::vector<Mat3> inv_world;
  std::vector<ContactHistory> next_contacts;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

class Integrator {
 public:
  Integrator(SceneState& s, const SimParams& p) : s_(s), p_(p), ws_(workspace()), acc_(ws_) {}

  void run() {
    const std::size_t n = s_.bodies.size();
    acc_.force.assign(n, Vec3::Zero());
    acc_.torque.assign(n, Vec3::Zero());
    acc_.rolling.assign(n, Vec3::Zero());
    acc_.touching.assign(n, 0);
    k_ = p_.contact_stiffness * 1e6;  // N/mm -> g/s^2
    kt_ = k_ * p_.tangential_ratio;

    ws_.next_contacts.clear();
    build_world();
    container_contacts();
    capsule_contacts();
    joints();
    integrate();

    std::sort(ws_.next_contacts.begin(), ws_.next_contacts.end(),
              [](const ContactHistory& a, const ContactHistory& b) { return a.key < b.key; });
    s_.contacts.swap(ws_.next_contacts);
    s_.time += p_.dt;
    ++s_.steps;
    auto& c = s_.container;
    if (c.wall_lift_rate != 0.0) c.wall_lift += c.wall_lift_rate * p_.dt;
  }

 private:
  void build_world() {
    ws_.caps.clear();
    ws_.first_cap.resize(s_.bodies.size() + 1);
    ws_.inv_inertia.resize(s_.bodies.size());
    ws_.inv_world.resize(s_.bodies.size());
    for (std::size_t bi = 0; bi < s_.bodies.size(); ++bi) {
      const Body& b = s_.bodies[bi];
      ws_.first_cap[bi] = static_cast<std::uint32_t>(ws_.caps.size());
      const Mat3 r = b.orientation.toRotationMatrix();
      ws_.inv_inertia[bi] = b.inertia.inverse();
      ws_.inv_world[bi] = b.pinned ? Mat3::Zero() : Mat3(r * ws_.inv_inertia[bi] * r.transpose());
      for (const auto& c : b.shape) {
        WorldCapsule w;
        w.a = b.position + r * c.a;
        w.b = b.position + r * c.b;
        w.radius = c.radius;
        w.body = static_cast<int>(bi);
        const Vec3 pad = Vec3::Constant(c.radius);
        w.box = Eigen::AlignedBox3d(w.a.cwiseMin(w.b) - pad, w.a.cwiseMax(w.b) + pad);
        ws_.caps.push_back(w);
      }
    }
    ws_.first_cap[s_.bodies.size()] = static_cast<std::uint32_t>(ws_.caps.size());
  }

  const Vec3* find_history(std::uint64_t key) const {
    auto it = std::lower_bound(s_.contacts.begin(), s_.contacts.end(), key,
                               [](const ContactHistory& h, std::uint64_t k) { return h.key < k; });
    if (it != s_.contacts.end() && it->key == key) return &it->tangential;
    return nullptr;
  }

  // Inverse of the mass a unit impulse along `n` at offset `r` sees.
  double point_inverse_mass(int body, const Vec3& r, const Vec3& n) const {
    const Body& b = s_.bodies[body];
    if (b.pinned) return 0.0;
    const Vec3 rn = r.cross(n);
    return 1.0 / b.inertial_mass + rn.dot(ws_.inv_world[body] * rn);
  }

  Vec3 point_velocity(int body, const Vec3& r) const {
    const Body& b = s_.bodies[body];
    if (b.pinned) return Vec3::Zero();
    return b.velocity + b.angular_velocity.cross(r);
  }

  // Normal penalty spring with damping plus a Coulomb-capped tangential
  // spring. `b < 0` means the container, moving with `wall_velocity`.
  void resolve(std::uint64_t key, int a, int b, const Vec3& point, const Vec3& normal, double overlap,
               const Vec3& wall_velocity, double radius) {
    const Body& A = s_.bodies[a];
    const Vec3 ra = point - A.position;
    Vec3 rb = Vec3::Zero();
    Vec3 vb = wall_velocity;
    double inv_m = point_inverse_mass(a, ra, normal);
    if (b >= 0) {
      rb = point - s_.bodies[b].position;
      vb = point_velocity(b, rb);
      inv_m += point_inverse_mass(b, rb, normal);
    }
    if (inv_m <= 0.0) return;
    const double m_eff = 1.0 / inv_m;
    const Vec3 v = point_velocity(a, ra) - vb;
    const double vn = v.dot(normal);
    const Vec3 vt = v - vn * normal;

    const double cn = 2.0 * p_.contact_damping * std::sqrt(k_ * m_eff);
    const double fn = std::max(0.0, k_ * overlap - cn * vn);

    Vec3 xi = Vec3::Zero();
    if (const Vec3* h = find_history(key)) xi = *h - h->dot(normal) * normal;
    xi += vt * p_.dt;
    const double ct = 2.0 * p_.contact_damping * std::sqrt(kt_ * m_eff);
    Vec3 ft = -kt_ * xi - ct * vt;
    const double limit = p_.friction * fn;
    const double ft_norm = ft.norm();
    if (ft_norm > limit) {
      ft *= (ft_norm > 0.0 ? limit / ft_norm : 0.0);
      xi = -ft / kt_;
    }
    ws_.next_contacts.push_back({key, xi});

    const Vec3 f = fn * normal + ft;
    acc_.force[a] += f;
    acc_.torque[a] += ra.cross(f);
    acc_.touching[a] = 1;
    if (b >= 0) {
      acc_.force[b] -= f;
      acc_.torque[b] -= rb.cross(f);
      acc_.touching[b] = 1;
    }

    // Rolling resistance: capsules are round but the bars they stand for
    // are square, so rolling costs a torque of order fn * half-width. The
    // per-body sum is clamped at integration so it never reverses a spin.
    if (p_.rolling_friction > 0.0 && fn > 0.0) {
      Vec3 w = A.pinned ? Vec3::Zero() : A.angular_velocity;
      if (b >= 0) w -= point_angular(b);
      const Vec3 roll = w - w.dot(normal) * normal;
      const double rate = roll.norm();
      if (rate > 1e-12) {
        const Vec3 tau = -(p_.rolling_friction * radius * fn / rate) * roll;
        acc_.rolling[a] += tau;
        if (b >= 0) acc_.rolling[b] -= tau;
      }
    }
  }

  Vec3 point_angular(int body) const {
    const Body& b = s_.bodies[body];
    return b.pinned ? Vec3::Zero() : b.angular_velocity;
  }

  void sphere_vs_container(std::uint32_t cap, int body, const Vec3& p, double r, std::uint32_t endpoint) {
    const Container& c = s_.container;
    const double h = p.z() - c.offset.z();
    const Vec3 wall_v = c.velocity;
    // floor
    if (h < r) {
      resolve(pair_key(cap, kContainerCode + endpoint), body, -1, p - Vec3(0, 0, h), Vec3::UnitZ(), r - h, wall_v, r);
    }
    if (c.kind == ContainerKind::Plane) return;
    const Eigen::Vector2d rel(p.x() - c.offset.x(), p.y() - c.offset.y());
    const double rho = rel.norm();
    if (rho < 1e-12) return;
    const Vec3 radial(rel.x() / rho, rel.y() / rho, 0.0);
    if (c.kind == ContainerKind::Cylinder) {
      if (h < c.wall_lift) return;
      const double overlap = rho + r - 0.5 * c.diameter;
      if (overlap > 0.0) {
        Vec3 wv = wall_v;
        wv.z() += c.wall_lift_rate;
        resolve(pair_key(cap, kContainerCode + 2 + endpoint), body, -1, p + (0.5 * c.diameter - rho) * radial,
                -radial, overlap, wv, r);
      }
      return;
    }
    // bowl: frustum wall rho = Rb + h * tan(alpha)
    const double rb = 0.5 * c.bottom_diameter;
    const double slope = (0.5 * (c.top_diameter - c.bottom_diameter)) / c.depth;
    const double cos_a = 1.0 / std::sqrt(1.0 + slope * slope);
    const double sin_a = slope * cos_a;
    const double signed_dist = (rho - rb - std::max(h, 0.0) * slope) * cos_a;
    const double overlap = signed_dist + r;
    if (overlap > 0.0 && h < c.depth) {
      const Vec3 n = -cos_a * radial + sin_a * Vec3::UnitZ();
      resolve(pair_key(cap, kContainerCode + 2 + endpoint), body, -1, p + signed_dist * n, n, overlap, wall_v, r);
    }
  }

  void container_contacts() {
    for (std::uint32_t ci = 0; ci < ws_.caps.size(); ++ci) {
      const auto& w = ws_.caps[ci];
      if (s_.bodies[w.body].pinned) continue;
      // A chord chain shares endpoints; test each shared point once.
      const bool shared = ci > 0 && ws_.caps[ci - 1].body == w.body && (ws_.caps[ci - 1].b - w.a).squaredNorm() < 1e-12;
      if (!shared) sphere_vs_container(ci, w.body, w.a, w.radius, 0);
      if ((w.b - w.a).squaredNorm() > 1e-18) sphere_vs_container(ci, w.body, w.b, w.radius, 1);
    }
  }

  bool jointed(int a, int b) const {
    const auto key = pair_key(static_cast<std::uint32_t>(std::min(a, b)), static_cast<std::uint32_t>(std::max(a, b)));
    return std::binary_search(ws_.joint_keys.begin(), ws_.joint_keys.end(), key);
  }

  void capsule_contacts() {
    auto& keys = ws_.joint_keys;
    keys.clear();
    for (const auto& j : s_.joints)
      keys.push_back(pair_key(static_cast<std::uint32_t>(std::min(j.body_a, j.body_b)),
                              static_cast<std::uint32_t>(std::max(j.body_a, j.body_b))));
    std::sort(keys.begin(), keys.end());

    // Body-level sweep along the axis where the body centres spread the
    // most, then capsule boxes within each overlapping body pair.
    const auto& caps = ws_.caps;
    const std::size_t nb = s_.bodies.size();
    auto& boxes = ws_.body_boxes;
    boxes.assign(nb, Eigen::AlignedBox3d());
    for (const auto& c : caps) boxes[c.body].extend(c.box);
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    for (const auto& bx : boxes) {
      if (bx.isEmpty()) continue;
      lo = lo.cwiseMin(bx.center());
      hi = hi.cwiseMax(bx.center());
    }
    int axis = 0;
    if (!caps.empty()) (hi - lo).maxCoeff(&axis);
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;

    auto& sweep = ws_.sweep;
    sweep.clear();
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const auto& bx = boxes[bi];
      if (bx.isEmpty()) continue;
      sweep.push_back({bx.min()[axis], bx.max()[axis], bx.min()[u], bx.max()[u], bx.min()[v], bx.max()[v],
                       static_cast<int>(bi), s_.bodies[bi].pinned});
    }
    std::sort(sweep.begin(), sweep.end(),
              [](const SweepBox& x, const SweepBox& y) { return x.lo < y.lo || (x.lo == y.lo && x.body < y.body); });

    const std::size_t n = sweep.size();
    for (std::size_t oi = 0; oi < n; ++oi) {
      const SweepBox& bi = sweep[oi];
      for (std::size_t oj = oi + 1; oj < n; ++oj) {
        const SweepBox& bj = sweep[oj];
        if (bj.lo > bi.hi) break;
        if (bj.u0 > bi.u1 || bj.u1 < bi.u0 || bj.v0 > bi.v1 || bj.v1 < bi.v0) continue;
        if (bi.pinned && bj.pinned) continue;
        if (!keys.empty() && jointed(bi.body, bj.body)) continue;
        body_pair(bi.body, bj.body);
      }
    }
  }

  void body_pair(int a, int b) {
    const auto& caps = ws_.caps;
    const Eigen::AlignedBox3d& box_a = ws_.body_boxes[a];
    const Eigen::AlignedBox3d& box_b = ws_.body_boxes[b];
    for (std::uint32_t i = ws_.first_cap[a]; i < ws_.first_cap[a + 1]; ++i) {
      if (!caps[i].box.intersects(box_b)) continue;
      for (std::uint32_t j = ws_.first_cap[b]; j < ws_.first_cap[b + 1]; ++j) {
        if (!caps[j].box.intersects(box_a) || !caps[i].box.intersects(caps[j].box)) continue;
        capsule_pair(std::min(i, j), std::max(i, j));
      }
    }
  }

  void touch(std::uint64_t key, std::uint32_t ia, std::uint32_t ib, const Vec3& pa, const Vec3& pb) {
    const auto& ca = ws_.caps[ia];
    const auto& cb = ws_.caps[ib];
    const double rsum = ca.radius + cb.radius;
    const double dist = (pa - pb).norm();
    if (dist >= rsum) return;
    Vec3 normal;
    if (dist > 1e-9) {
      normal = (pa - pb) / dist;
    } else {
      normal = (ca.b - ca.a).cross(cb.b - cb.a);
      if (normal.squaredNorm() < 1e-18) normal = Vec3::UnitZ();
      normal.normalize();
    }
    const Vec3 point = pb + normal * (cb.radius - 0.5 * (rsum - dist));
    resolve(key, ca.body, cb.body, point, normal, rsum - dist, Vec3::Zero(), ca.radius * cb.radius / rsum);
  }

  // Nearly parallel capsules touch along a line; a single closest point
  // would jump between the ends as they rock, so they get one contact at
  // each end of the overlap instead.
  void capsule_pair(std::uint32_t ia, std::uint32_t ib) {
    const auto& ca = ws_.caps[ia];
    const auto& cb = ws_.caps[ib];
    const Vec3 d1 = ca.b - ca.a;
    const Vec3 d2 = cb.b - cb.a;
    const double l1 = d1.squaredNorm(), l2 = d2.squaredNorm();
    const std::uint64_t key = pair_key(ia, ib);
    if (l1 > 1e-12 && l2 > 1e-12 && d1.cross(d2).squaredNorm() < kParallelSin2 * l1 * l2) {
      const double s0 = (cb.a - ca.a).dot(d1) / l1;
      const double s1 = (cb.b - ca.a).dot(d1) / l1;
      const double lo = std::max(0.0, std::min(s0, s1));
      const double hi = std::min(1.0, std::max(s0, s1));
      if ((hi - lo) * std::sqrt(l1) > 1e-6) {
        const double rsum = ca.radius + cb.radius;
        const auto near_b = [&](const Vec3& p) {
          return Vec3(cb.a + d2 * std::clamp((p - cb.a).dot(d2) / l2, 0.0, 1.0));
        };
        const Vec3 pa0 = ca.a + lo * d1, pa1 = ca.a + hi * d1;
        const Vec3 pb0 = near_b(pa0), pb1 = near_b(pa1);
        if ((pa0 - pb0).squaredNorm() < rsum * rsum) touch(key, ia, ib, pa0, pb0);
        if ((pa1 - pb1).squaredNorm() < rsum * rsum) touch(key | kSecondContact, ia, ib, pa1, pb1);
        return;
      }
    }
    const auto cp = closest_points_segments<double>(ca.a, ca.b, cb.a, cb.b);
    touch(key, ia, ib, cp.point_a, cp.point_b);
  }

  void joints() {
    const double kj = p_.joint_stiffness * 1e6;
    for (const auto& j : s_.joints) {
      Body& A = s_.bodies[j.body_a];
      Body& B = s_.bodies[j.body_b];
      const Vec3 ra = A.orientation * j.anchor_a;
      const Vec3 rb = B.orientation * j.anchor_b;
      const Vec3 gap = (B.position + rb) - (A.position + ra);
      double inv_m = 0.0;
      for (int k = 0; k < 3; ++k) {
        const Vec3 axis = Vec3::Unit(k);
        inv_m = std::max(inv_m, point_inverse_mass(j.body_a, ra, axis) + point_inverse_mass(j.body_b, rb, axis));
      }
      if (inv_m <= 0.0) continue;
      // Light links on a chain go unstable before the nominal stiffness
      // is reached; soften to what the step can carry.
      const double k = std::min(kj, kJointStability / (inv_m * p_.dt * p_.dt));
      const double cj = 2.0 * 0.5 * std::sqrt(k / inv_m);
      const Vec3 dv = point_velocity(j.body_b, rb) - point_velocity(j.body_a, ra);
      const Vec3 f = k * gap + cj * dv;
      acc_.force[j.body_a] += f;
      acc_.torque[j.body_a] += ra.cross(f);
      acc_.force[j.body_b] -= f;
      acc_.torque[j.body_b] -= rb.cross(f);

      if (j.angular_stiffness > 0.0) {
        const Quat err = j.rest.conjugate() * (A.orientation.conjugate() * B.orientation);
        Eigen::AngleAxisd aa(err.w() < 0.0 ? Quat(-err.coeffs()) : err);
        const Vec3 theta = A.orientation * (j.rest * (aa.angle() * aa.axis()));
        const double inertia = std::min(A.inertia.diagonal().minCoeff(), B.inertia.diagonal().minCoeff());
        const double ca = 2.0 * 0.5 * std::sqrt(j.angular_stiffness * inertia);
        const Vec3 tau = j.angular_stiffness * theta + ca * (B.angular_velocity - A.angular_velocity);
        acc_.torque[j.body_a] += tau;
        acc_.torque[j.body_b] -= tau;
      }
    }
  }

  void integrate() {
    const double dt = p_.dt;
    const double alpha = p_.local_damping;
    for (std::size_t bi = 0; bi < s_.bodies.size(); ++bi) {
      Body& b = s_.bodies[bi];
      if (b.pinned) {
        b.velocity.setZero();
        b.angular_velocity.setZero();
        continue;
      }
      const Vec3 f = acc_.force[bi] + b.inertial_mass * s_.gravity;
      const Vec3 tau = acc_.torque[bi];
      const Mat3 r = b.orientation.toRotationMatrix();
      const Mat3& inv_inertia = ws_.inv_inertia[bi];
      const Mat3& inv_world = ws_.inv_world[bi];
      b.velocity += dt * f / b.inertial_mass;
      b.angular_velocity += dt * (inv_world * tau);

      if (acc_.touching[bi]) {
        // Local non-viscous damping, per component, applied as a
        // magnitude reduction that cannot reverse the motion.
        if (alpha > 0.0) {
          for (int k = 0; k < 3; ++k)
            b.velocity[k] = shrink(b.velocity[k], alpha * std::abs(f[k]) * dt / b.inertial_mass);
          Vec3 w_local = r.transpose() * b.angular_velocity;
          const Vec3 tau_local = r.transpose() * tau;
          for (int k = 0; k < 3; ++k)
            w_local[k] = shrink(w_local[k], alpha * std::abs(tau_local[k]) * dt / b.inertia(k, k));
          b.angular_velocity = r * w_local;
        }
        const Vec3 dw = dt * (inv_world * acc_.rolling[bi]);
        const double dw2 = dw.squaredNorm();
        if (dw2 > 0.0) {
          const double stop = -dw.dot(b.angular_velocity) / dw2;
          b.angular_velocity += std::clamp(stop, 0.0, 1.0) * dw;
        }
      }

      const double speed = b.velocity.norm();
      if (!std::isfinite(speed) || speed > p_.max_speed || !b.angular_velocity.allFinite())
        throw InstabilityError("body " + std::to_string(bi) + " reached " + std::to_string(speed) +
                               " mm/s at step " + std::to_string(s_.steps));

      b.position += dt * b.velocity;
      // Carry angular momentum through the rotation so torque-free
      // anisotropic bodies do not gain energy.
      const Vec3 momentum = r * (b.inertia * (r.transpose() * b.angular_velocity));
      const Vec3& w = b.angular_velocity;
      Quat dq(0.0, 0.5 * dt * w.x(), 0.5 * dt * w.y(), 0.5 * dt * w.z());
      dq = dq * b.orientation;
      b.orientation.coeffs() += dq.coeffs();
      b.orientation.normalize();
      const Mat3 r_new = b.orientation.toRotationMatrix();
      b.angular_velocity = r_new * inv_inertia * (r_new.transpose() * momentum);
    }
  }

  SceneState& s_;
  const SimParams& p_;
  Workspace& ws_;
  Workspace& acc_;
  double k_ = 0.0, kt_ = 0.0;
};

}  // namespace

void advance(SceneState& state, const SimParams& params) {
  if (!(params.dt > 0.0)) throw InvalidArgument("simulate", "dt must be positive");
  Integrator(state, params).run();
}

SceneState step(const SceneState& state, const SimParams& params) {
  SceneState next = state;
  advance(next, params);
  return next;
}

SettleResult settle(SceneState state, const SimParams& params) {
  SettleResult out;
  const double threshold = params.settle_ke_threshold * kJouleToInternal;
  if (state.bodies.empty()) {
    out.state = std::move(state);
    out.converged = true;
    return out;
  }
  std::uint64_t quiet = 0;
  std::uint64_t n = 0;
  while (n < params.max_steps) {
    advance(state, params);
    ++n;
    if (state.kinetic_energy() < threshold) {
      if (++quiet >= params.settle_window) {
        out.converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  out.state = std::move(state);
  out.steps = n;
  return out;
}

SceneState settle_or_throw(SceneState state, const SimParams& params) {
  auto r = settle(std::move(state), params);
  if (!r.converged) throw NotConverged(std::move(r.state));
  return std::move(r.state);
}

SettleResult shake(SceneState state, const SimParams& params, const ShakeSpec& spec) {
  if (!(spec.duration > 0.0)) throw InvalidArgument("simulate", "shake duration must be positive");
  if (spec.amplitude > 0.0 && spec.frequency > 0.0) {
    const double cycles = std::max(1.0, std::round(spec.duration * spec.frequency));
    const double total = cycles / spec.frequency;
    const auto n = static_cast<std::uint64_t>(std::llround(total / params.dt));
    const double omega = 2.0 * std::numbers::pi * spec.frequency;
    const Vec3 dir = Vec3(1.0, 0.0, 1.0).normalized();
    const Vec3 base = state.container.offset;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double t = (i + 1) * params.dt;
      state.container.offset = base + spec.amplitude * std::sin(omega * t) * dir;
      state.container.velocity = spec.amplitude * omega * std::cos(omega * t) * dir;
      advance(state, params);
    }
    state.container.offset = base;
    state.container.velocity.setZero();
  }
  return settle(std::move(state), params);
}

double structure_height(const SceneState& state) {
  double top = 0.0;
  bool any = false;
  for (const auto& b : state.bodies) {
    for (std::size_t i = 0; i < b.shape.size(); ++i) {
      const Capsule c = b.world_capsule(i);
      top = std::max(top, std::max(c.a.z(), c.b.z()) + c.radius - state.container.offset.z());
      any = true;
    }
  }
  return any ? std::max(0.0, top) : 0.0;
}

double packing_fraction(double grain_volume, double container_volume) {
  if (!(container_volume > 0.0)) throw InvalidArgument("simulate", "container volume must be positive");
  return grain_volume / container_volume;
}

double grain_volume(const SceneState& state) {
  double v = 0.0;
  for (const auto& b : state.bodies)
    for (const auto& c : b.shape) v += c.length() * 4.0 * c.radius * c.radius;
  return v;
}

double cylinder_packing_fraction(const SceneState& state) {
  const double r = 0.5 * state.container.diameter;
  return packing_fraction(grain_volume(state), std::numbers::pi * r * r * structure_height(state));
}

SettleResult remove_cylinder_and_relax(SceneState state, const SimParams& params, const RemovalSpec& spec) {
  if (state.container.kind == ContainerKind::Cylinder) {
    state.container.wall_lift_rate = spec.lift_speed;
    std::uint64_t guard = 0;
    while (state.container.wall_lift < structure_height(state) + spec.clearance) {
      advance(state, params);
      if (++guard > params.max_steps) break;
    }
    state.container.wall_lift_rate = 0.0;
    state.container.kind = ContainerKind::Plane;
    state.contacts.erase(std::remove_if(state.contacts.begin(), state.contacts.end(),
                                        [](const ContactHistory& h) {
                                          return (h.key & 0xFFFFFFFFu) >= kContainerCode + 2;
                                        }),
                         state.contacts.end());
  }
  return settle(std::move(state), params);
}

double integrity(double h0, double dh) {
  if (!(h0 > 0.0)) throw InvalidArgument("simulate", "integrity needs h0 > 0");
  if (dh < 0.0 || dh > h0) throw InvalidArgument("simulate", "integrity needs 0 <= dh <= h0");
  return (h0 - dh) / h0;
}

double max_container_penetration(const SceneState& state) {
  const Container& c = state.container;
  double worst = 0.0;
  for (const auto& b : state.bodies) {
    for (std::size_t i = 0; i < b.shape.size(); ++i) {
      const Capsule cap = b.world_capsule(i);
      for (const Vec3& p : {cap.a, cap.b}) {
        const double h = p.z() - c.offset.z();
        worst = std::max(worst, cap.radius - h);
        const double rho = Eigen::Vector2d(p.x() - c.offset.x(), p.y() - c.offset.y()).norm();
        if (c.kind == ContainerKind::Cylinder && h >= c.wall_lift)
          worst = std::max(worst, rho + cap.radius - 0.5 * c.diameter);
        if (c.kind == ContainerKind::Bowl && h < c.depth) {
          const double slope = 0.5 * (c.top_diameter - c.bottom_diameter) / c.depth;
          const double cos_a = 1.0 / std::sqrt(1.0 + slope * slope);
          worst = std::max(worst, (rho - 0.5 * c.bottom_diameter - std::max(h, 0.0) * slope) * cos_a + cap.radius);
        }
      }
    }
  }
  return worst;
}

}  // namespace tangle
