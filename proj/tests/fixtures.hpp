#pragma once

// Hand-built body pairs for the interlock tests and the agreement check
// against the escape oracle.

#include "tangle/scene.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace tangle::fixtures {

inline Body rod(double length, double radius = 0.5) {
  Capsule c{Vec3(-0.5 * length, 0, 0), Vec3(0.5 * length, 0, 0), radius};
  Body b = make_body({c}, {}, 1.2, 2.0 * radius, 0.01);
  b.kind = BodyKind::Fixture;
  return b;
}

/// Closed square loop in the local xy plane, centred on the origin.
inline Body frame(double side, double radius = 0.5) {
  const double h = 0.5 * side;
  const Vec3 p[4] = {Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0), Vec3(-h, h, 0)};
  CapsuleSet caps;
  for (int k = 0; k < 4; ++k) caps.push_back({p[k], p[(k + 1) % 4], radius});
  CaptureRegion r;
  r.origin = p[0];
  r.edge_base = p[1] - p[0];
  r.edge_spike = p[3] - p[0];
  r.far_base_closed = true;
  r.tip_closed = true;
  Body b = make_body(caps, {r}, 1.2, 2.0 * radius, 0.04);
  b.kind = BodyKind::Fixture;
  return b;
}

/// Rod along local z with cross bars at both ends (cannot pass a frame).
inline Body dumbbell(double length, double bar, double radius = 0.5) {
  const double h = 0.5 * length;
  CapsuleSet caps = {{Vec3(0, 0, -h), Vec3(0, 0, h), radius},
                     {Vec3(-0.5 * bar, 0, -h), Vec3(0.5 * bar, 0, -h), radius},
                     {Vec3(-0.5 * bar, 0, h), Vec3(0.5 * bar, 0, h), radius}};
  Body b = make_body(caps, {}, 1.2, 2.0 * radius, 0.04);
  b.kind = BodyKind::Fixture;
  return b;
}

inline Body grain(GrainType type) { return make_grain_body(type, 7.9, true); }

/// Rigid target cell, body frame at the centre of mass.
inline Body target(double tau, double lambda, int spikes) {
  const auto t = make_target_bodies(build_target(tau, lambda, spikes), 1, 0.0, 0.0);
  return t.links.front();
}

/// Places `b` (body frame at its centre of mass) so that the body-frame
/// point `anchor_local` lands at `at` under rotation `q`.
inline Body placed(Body b, const Quat& q, const Vec3& anchor_local, const Vec3& at) {
  b.orientation = q;
  b.position = at - q * anchor_local;
  return b;
}

struct Pose {
  std::string name;
  Body a;
  Body b;
};

/// Applies one rigid motion to both bodies of a pose.
inline Pose turned(Pose p, const Quat& q) {
  for (Body* b : {&p.a, &p.b}) {
    b->position = q * b->position;
    b->orientation = q * b->orientation;
  }
  return p;
}

inline Quat about(double angle, const Vec3& axis) { return Quat(Eigen::AngleAxisd(angle, axis.normalized())); }

/// U of a type-V grain (base along x at y = -4, tips at y = 8) hooked by a
/// second U in the x = `x0` plane whose base sits at height `yb` and whose
/// span along z is centred on `zc`.
inline Pose hooked_pair(const std::string& name, double x0, double yb, double zc) {
  const Body v = grain(GrainType::V);
  const Quat q = Quat(Mat3((Mat3() << 0, 0, 1, 0, -1, 0, 1, 0, 0).finished()));
  return {name, v, placed(v, q, Vec3(0, -4, 0), Vec3(x0, yb, zc))};
}

/// Short two-spike strip threaded along z through a type-V grain at
/// (x, y), spikes lying along x.
inline Pose threaded_spiky(const std::string& name, double x, double y) {
  const Body v = grain(GrainType::V);
  const Body t = target(1.0, 12.0, 2);
  return {name, v, placed(t, about(-M_PI / 2, Vec3::UnitY()) * about(M_PI / 2, Vec3::UnitX()), Vec3::Zero(), Vec3(x, y, 0))};
}

/// Two square loops, each threaded through the other.
inline Pose linked_frames(const std::string& name) {
  return {name, frame(12.0), placed(frame(12.0), about(M_PI / 2, Vec3::UnitX()), Vec3::Zero(), Vec3(6, 0, 0))};
}

inline Quat unit(double w, double x, double y, double z) { return Quat(w, x, y, z).normalized(); }

/// Twenty poses: twelve with an obvious translational escape (two of them
/// threaded but loose) and eight locked ones.
inline std::vector<Pose> corpus() {
  const Quat I = Quat::Identity();
  const Body v = grain(GrainType::V);
  std::vector<Pose> out;
  out.push_back({"rods_parallel", rod(12), placed(rod(12), I, Vec3::Zero(), Vec3(0, 2, 0))});
  out.push_back({"rods_crossed_touching", rod(12), placed(rod(12), about(M_PI / 2, Vec3::UnitZ()), Vec3::Zero(), Vec3(0, 0, 1))});
  out.push_back({"v_and_rod_apart", v, placed(rod(12), I, Vec3::Zero(), Vec3(0, 0, 10))});
  out.push_back({"v_stacked", v, placed(v, I, Vec3::Zero(), Vec3(0, 0, 1))});
  out.push_back({"rod_across_tips", v, placed(rod(16), I, Vec3::Zero(), Vec3(0, 8, 1))});
  out.push_back({"rod_beside_spike", v, placed(rod(12), about(M_PI / 2, Vec3::UnitY()), Vec3::Zero(), Vec3(7.5, 2, 0))});
  out.push_back({"targets_crossed", target(1, 24, 2),
                 placed(target(1, 24, 2), about(M_PI / 2, Vec3::UnitZ()), Vec3::Zero(), Vec3(0, 0, 1))});
  out.push_back({"v_over_strip", target(0.4, 60, 0), placed(v, I, Vec3::Zero(), Vec3(0, 0, 0.7))});
  out.push_back({"frame_beside_rod", frame(12), placed(rod(12), about(M_PI / 2, Vec3::UnitY()), Vec3::Zero(), Vec3(9, 0, 0))});
  out.push_back({"l_next_to_v", v, placed(grain(GrainType::II), I, Vec3::Zero(), Vec3(0, 20, 0))});
  out.push_back({"strip_threaded_loose", v,
                 placed(target(0.4, 60, 0), about(-M_PI / 2, Vec3::UnitY()), Vec3::Zero(), Vec3(0, 2, 0))});
  out.push_back(hooked_pair("hook_loose", 0.0, 2.0, 0.0));

  out.push_back(linked_frames("frames_linked"));
  out.push_back(turned(linked_frames("frames_linked_turned"), unit(0.676063, 0.306137, 0.479946, 0.467836)));
  out.push_back({"frame_on_dumbbell", frame(12), dumbbell(24, 16)});
  out.push_back(turned(hooked_pair("hook_tight_a", 4.9, -3.0, 4.9), unit(-0.512912, 0.668524, 0.503044, 0.192209)));
  out.push_back(turned(hooked_pair("hook_tight_b", 4.9, -3.0, 4.9), unit(-0.265302, 0.202571, 0.684729, -0.647862)));
  out.push_back(turned(hooked_pair("hook_tight_c", 4.9, -3.0, 4.9), unit(0.541253, 0.255127, 0.217857, 0.771034)));
  out.push_back(turned(threaded_spiky("spiky_threaded_a", 4.9, -3.0), unit(0.126870, 0.136952, 0.555139, 0.810536)));
  out.push_back(turned(threaded_spiky("spiky_threaded_b", 4.9, -3.0), unit(0.676063, 0.306137, 0.479946, 0.467836)));
  return out;
}

}  // namespace tangle::fixtures
