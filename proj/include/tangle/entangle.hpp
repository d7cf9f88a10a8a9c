#pragma once

// Interlock detection between bodies, the entanglement graph built from
// it, and probabilistic pick closures over that graph.

#include "tangle/random.hpp"
#include "tangle/scene.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

namespace tangle {

enum class EdgeKind { GrainGrain, GrainTarget, TargetTarget };

std::string_view to_string(EdgeKind kind);

struct Edge {
  int body_a = 0;  // body_a < body_b
  int body_b = 0;
  double depth = 0.0;  // mm
  EdgeKind kind = EdgeKind::GrainGrain;
  bool structural = false;  // links of one target; always holds
};

struct EntanglementGraph {
  int node_count = 0;
  std::vector<Edge> edges;  // sorted by (body_a, body_b), no duplicates

  /// Edges sorted and checked: no self loops, no duplicates, depth >= 0.
  void normalize();
};

struct Interlock {
  bool entangled = false;
  double depth = 0.0;
};

/// Directional test: does a capsule axis of `b` pass through a capture
/// region of `a` away from a's material? Depth is the distance from the
/// crossing point to the nearest open side of the region.
Interlock interlock_test(int a, int b, const SceneState& state);
Interlock interlock_test(const Body& a, const Body& b);

/// First `count` directions of a fixed nested sequence: the 6 axes, the
/// 12 face diagonals, the 8 cube corners, then a Fibonacci sphere.
std::vector<Vec3> escape_directions(int count);

struct EscapeSpec {
  int directions = 26;
  double distance = 30.0;    // mm
  double step = 0.5;         // mm
  double tolerance = 0.05;   // mm of extra overlap that counts as a hit
};

/// Ground truth for interlocking under straight-line translation: true
/// when every sampled direction runs `b` into `a` within the distance.
bool escape_oracle(const Body& a, const Body& b, const EscapeSpec& spec = {});
bool escape_oracle(int a, int b, const SceneState& state, const EscapeSpec& spec = {});

/// Edges for every body pair whose interlock test passes either way;
/// depth is the larger of the two directions. Pairs whose bounding
/// spheres are further apart than twice the radius sum are skipped.
/// Links of one articulated target get structural edges.
EntanglementGraph entanglement_graph(const SceneState& state);

struct LinkModel {
  double d0 = 2.0;                  // mm
  std::optional<double> constant;   // fixed hold probability, ignoring depth

  double p_hold(double depth) const;
};

/// One uniform draw per edge in edge order decides whether it holds, then
/// a breadth-first search from the seeds over holding edges. Seeds
/// outside the node range throw InvalidArgument.
std::set<int> pick_closure(const EntanglementGraph& graph, const std::set<int>& seeds, const LinkModel& model,
                           Rng& rng);

/// CSV: body_a,body_b,depth_mm,kind
void write_edge_csv(std::ostream& os, const EntanglementGraph& graph);

}  // namespace tangle
