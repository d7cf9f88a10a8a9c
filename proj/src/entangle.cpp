#include "tangle/entangle.hpp"

#include "tangle/distance.hpp"
#include "tangle/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <tuple>

namespace tangle {

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::GrainGrain: return "grain-grain";
    case EdgeKind::GrainTarget: return "grain-target";
    case EdgeKind::TargetTarget: return "target-target";
  }
  return "grain-grain";
}

void EntanglementGraph::normalize() {
  for (auto& e : edges) {
    if (e.body_a == e.body_b) throw InvalidArgument("entangle", "self loop");
    if (e.body_a > e.body_b) std::swap(e.body_a, e.body_b);
    if (!(e.depth >= 0.0)) throw InvalidArgument("entangle", "negative interlock depth");
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.body_a, x.body_b) < std::tie(y.body_a, y.body_b); });
  const auto dup = std::adjacent_find(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return x.body_a == y.body_a && x.body_b == y.body_b;
  });
  if (dup != edges.end()) throw InvalidArgument("entangle", "duplicate edge");
}

namespace {

double material_radius(const Body& b) {
  double r = 0.0;
  for (const auto& c : b.shape) r = std::max(r, c.radius);
  return r;
}

// Depth of the crossing of segment [p, q] through region r, or a negative
// value when it does not cross inside the clear part of the region.
double crossing_depth(const CaptureRegion& r, const Vec3& p, const Vec3& q, double clearance) {
  const Vec3 n = r.edge_base.cross(r.edge_spike);
  const double area = n.norm();
  if (area < 1e-12) return -1.0;
  const Vec3 unit = n / area;
  const double sp = unit.dot(p - r.origin);
  const double sq = unit.dot(q - r.origin);
  if ((sp > 0.0) == (sq > 0.0) || sp == sq) return -1.0;
  const Vec3 x = p + (sp / (sp - sq)) * (q - p);

  // x - origin = u * edge_base + v * edge_spike
  const Vec3 rel = x - r.origin;
  const double g11 = r.edge_base.squaredNorm(), g22 = r.edge_spike.squaredNorm();
  const double g12 = r.edge_base.dot(r.edge_spike);
  const double det = g11 * g22 - g12 * g12;
  const double b1 = rel.dot(r.edge_base), b2 = rel.dot(r.edge_spike);
  const double u = (g22 * b1 - g12 * b2) / det;
  const double v = (g11 * b2 - g12 * b1) / det;

  // Distances to the four sides of the parallelogram.
  const double h_u = area / std::sqrt(g22);  // spacing between the u = 0 and u = 1 sides
  const double h_v = area / std::sqrt(g11);
  const double d_spike = u * h_u, d_far = (1.0 - u) * h_u;
  const double d_base = v * h_v, d_tip = (1.0 - v) * h_v;
  if (d_spike < clearance || d_base < clearance) return -1.0;
  if (d_far < (r.far_base_closed ? clearance : 0.0) || d_tip < (r.tip_closed ? clearance : 0.0)) return -1.0;

  double open = std::numeric_limits<double>::infinity();
  if (!r.far_base_closed) open = std::min(open, d_far);
  if (!r.tip_closed) open = std::min(open, d_tip);
  if (std::isinf(open)) open = std::min({d_spike, d_base, d_far, d_tip});
  return open;
}

double min_distance(const CapsuleSet& a, const CapsuleSet& b, const Vec3& shift) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ca : a)
    for (Capsule cb : b) {
      cb.a += shift;
      cb.b += shift;
      best = std::min(best, capsule_closest_distance(ca, cb).distance);
    }
  return best;
}

EdgeKind edge_kind(const Body& a, const Body& b) {
  const bool ta = a.kind == BodyKind::Target, tb = b.kind == BodyKind::Target;
  if (ta && tb) return EdgeKind::TargetTarget;
  if (ta || tb) return EdgeKind::GrainTarget;
  return EdgeKind::GrainGrain;
}

}  // namespace

Interlock interlock_test(const Body& a, const Body& b) {
  Interlock out;
  if (a.regions.empty()) return out;
  const double clearance = material_radius(a);
  double best = -1.0;
  for (std::size_t ri = 0; ri < a.regions.size(); ++ri) {
    const CaptureRegion r = a.world_region(ri);
    for (std::size_t ci = 0; ci < b.shape.size(); ++ci) {
      const Capsule c = b.world_capsule(ci);
      best = std::max(best, crossing_depth(r, c.a, c.b, clearance));
    }
  }
  if (best >= 0.0) {
    out.entangled = true;
    out.depth = best;
  }
  return out;
}

Interlock interlock_test(int a, int b, const SceneState& state) {
  return interlock_test(state.bodies.at(static_cast<std::size_t>(a)), state.bodies.at(static_cast<std::size_t>(b)));
}

std::vector<Vec3> escape_directions(int count) {
  if (count < 1) throw InvalidArgument("entangle", "need at least one escape direction");
  std::vector<Vec3> dirs;
  for (int k = 0; k < 3; ++k) {
    dirs.push_back(Vec3::Unit(k));
    dirs.push_back(-Vec3::Unit(k));
  }
  for (int k = 0; k < 3; ++k) {
    const int i = k, j = (k + 1) % 3;
    for (int si : {1, -1})
      for (int sj : {1, -1}) {
        Vec3 d = Vec3::Zero();
        d[i] = si;
        d[j] = sj;
        dirs.push_back(d.normalized());
      }
  }
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      for (int sz : {1, -1}) dirs.push_back(Vec3(sx, sy, sz).normalized());
  const int extra = std::max(0, count - 26);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < extra; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / extra;
    const double r = std::sqrt(1.0 - z * z);
    dirs.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  dirs.resize(static_cast<std::size_t>(count));
  return dirs;
}

bool escape_oracle(const Body& a, const Body& b, const EscapeSpec& spec) {
  if (!(spec.step > 0.0) || !(spec.distance > 0.0)) throw InvalidArgument("entangle", "escape step and distance must be positive");
  const CapsuleSet ca = a.world_shape();
  const CapsuleSet cb = b.world_shape();
  const double start = min_distance(ca, cb, Vec3::Zero());
  const double hit = std::min(start, 0.0) - spec.tolerance;
  const int steps = static_cast<int>(std::ceil(spec.distance / spec.step - 1e-9));
  for (const Vec3& d : escape_directions(spec.directions)) {
    bool blocked = false;
    for (int k = 1; k <= steps && !blocked; ++k)
      blocked = min_distance(ca, cb, std::min(k * spec.step, spec.distance) * d) < hit;
    if (!blocked) return false;
  }
  return true;
}

bool escape_oracle(int a, int b, const SceneState& state, const EscapeSpec& spec) {
  return escape_oracle(state.bodies.at(static_cast<std::size_t>(a)), state.bodies.at(static_cast<std::size_t>(b)), spec);
}

EntanglementGraph entanglement_graph(const SceneState& state) {
  EntanglementGraph g;
  const int n = static_cast<int>(state.bodies.size());
  g.node_count = n;

  std::vector<int> order(n);
  double r_max = 0.0;
  for (int i = 0; i < n; ++i) {
    order[i] = i;
    r_max = std::max(r_max, state.bodies[i].bound_radius);
  }
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const double ax = state.bodies[x].position.x(), ay = state.bodies[y].position.x();
    return ax < ay || (ax == ay && x < y);
  });

  std::vector<std::pair<int, int>> jointed;
  for (const auto& j : state.joints) jointed.emplace_back(std::min(j.body_a, j.body_b), std::max(j.body_a, j.body_b));
  std::sort(jointed.begin(), jointed.end());

  for (int oi = 0; oi < n; ++oi) {
    const int i = order[oi];
    const Body& bi = state.bodies[i];
    for (int oj = oi + 1; oj < n; ++oj) {
      const int j = order[oj];
      const Body& bj = state.bodies[j];
      if (bj.position.x() - bi.position.x() > 2.0 * (bi.bound_radius + r_max)) break;
      const int a = std::min(i, j), b = std::max(i, j);
      if (std::binary_search(jointed.begin(), jointed.end(), std::make_pair(a, b))) {
        g.edges.push_back({a, b, 0.0, edge_kind(bi, bj), true});
        continue;
      }
      if ((bj.position - bi.position).norm() > 2.0 * (bi.bound_radius + bj.bound_radius)) continue;
      const Interlock ab = interlock_test(state.bodies[a], state.bodies[b]);
      const Interlock ba = interlock_test(state.bodies[b], state.bodies[a]);
      if (!ab.entangled && !ba.entangled) continue;
      g.edges.push_back({a, b, std::max(ab.entangled ? ab.depth : 0.0, ba.entangled ? ba.depth : 0.0),
                         edge_kind(bi, bj), false});
    }
  }
  // Joints between bodies too far apart for the sweep (stretched links).
  for (const auto& [a, b] : jointed) {
    const bool have = std::any_of(g.edges.begin(), g.edges.end(),
                                  [&](const Edge& e) { return e.body_a == a && e.body_b == b; });
    if (!have) g.edges.push_back({a, b, 0.0, edge_kind(state.bodies[a], state.bodies[b]), true});
  }
  g.normalize();
  return g;
}

double LinkModel::p_hold(double depth) const {
  if (constant) return std::clamp(*constant, 0.0, 1.0);
  if (!(d0 > 0.0)) throw InvalidArgument("entangle", "d0 must be positive");
  return 1.0 - std::exp(-std::max(depth, 0.0) / d0);
}

std::set<int> pick_closure(const EntanglementGraph& graph, const std::set<int>& seeds, const LinkModel& model,
                           Rng& rng) {
  for (int s : seeds)
    if (s < 0 || s >= graph.node_count) throw InvalidArgument("entangle", "seed outside the graph");
  std::vector<std::vector<int>> adj(graph.node_count);
  for (const auto& e : graph.edges) {
    const double u = uniform01(rng);
    if (e.structural || u < model.p_hold(e.depth)) {
      adj[e.body_a].push_back(e.body_b);
      adj[e.body_b].push_back(e.body_a);
    }
  }
  std::set<int> picked(seeds.begin(), seeds.end());
  std::deque<int> queue(seeds.begin(), seeds.end());
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj[v])
      if (picked.insert(w).second) queue.push_back(w);
  }
  return picked;
}

void write_edge_csv(std::ostream& os, const EntanglementGraph& graph) {
  os << "body_a,body_b,depth_mm,kind\n";
  char buf[64];
  for (const auto& e : graph.edges) {
    std::snprintf(buf, sizeof buf, "%.9g", e.depth);
    os << e.body_a << ',' << e.body_b << ',' << buf << ',' << (e.structural ? "structural" : to_string(e.kind))
       << '\n';
  }
}

}  // namespace tangle
