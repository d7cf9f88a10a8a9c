#pragma once

// Closest-point queries between segments and capsules. Header-only and
// templated on the scalar so the same kernel serves the simulator (double)
// and tests that probe it at other precisions.

#include "tangle/geometry.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <tuple>

namespace tangle {

template <typename Scalar>
struct SegmentClosest {
  Scalar distance_sq;
  Scalar s;  // parameter on the first segment
  Scalar t;  // parameter on the second segment
  Eigen::Matrix<Scalar, 3, 1> point_a;
  Eigen::Matrix<Scalar, 3, 1> point_b;
};

/// Closest points between segments [p1, q1] and [p2, q2]; handles
/// degenerate (point) segments and parallel pairs.
template <typename Scalar>
SegmentClosest<Scalar> closest_points_segments(const Eigen::Matrix<Scalar, 3, 1>& p1,
                                               const Eigen::Matrix<Scalar, 3, 1>& q1,
                                               const Eigen::Matrix<Scalar, 3, 1>& p2,
                                               const Eigen::Matrix<Scalar, 3, 1>& q2) {
  using V = Eigen::Matrix<Scalar, 3, 1>;
  const Scalar eps = Scalar(1e-12);
  const V d1 = q1 - p1;
  const V d2 = q2 - p2;
  const V r = p1 - p2;
  const Scalar a = d1.squaredNorm();
  const Scalar e = d2.squaredNorm();
  const Scalar f = d2.dot(r);
  Scalar s(0), t(0);

  if (a <= eps && e <= eps) {
    s = t = Scalar(0);
  } else if (a <= eps) {
    s = Scalar(0);
    t = std::clamp(f / e, Scalar(0), Scalar(1));
  } else {
    const Scalar c = d1.dot(r);
    if (e <= eps) {
      t = Scalar(0);
      s = std::clamp(-c / a, Scalar(0), Scalar(1));
    } else {
      const Scalar b = d1.dot(d2);
      const Scalar denom = a * e - b * b;
      // Parallel segments: any s works, pick the midpoint of the overlap.
      if (denom > eps * a * e) {
        s = std::clamp((b * f - c * e) / denom, Scalar(0), Scalar(1));
      } else {
        const Scalar s0 = std::clamp(-c / a, Scalar(0), Scalar(1));
        const Scalar s1 = std::clamp((b - c) / a, Scalar(0), Scalar(1));
        s = Scalar(0.5) * (s0 + s1);
      }
      t = (b * s + f) / e;
      if (t < Scalar(0)) {
        t = Scalar(0);
        s = std::clamp(-c / a, Scalar(0), Scalar(1));
      } else if (t > Scalar(1)) {
        t = Scalar(1);
        s = std::clamp((b - c) / a, Scalar(0), Scalar(1));
      }
    }
  }
  const V ca = p1 + d1 * s;
  const V cb = p2 + d2 * t;
  return {(ca - cb).squaredNorm(), s, t, ca, cb};
}

template <typename Scalar>
struct CapsuleDistance {
  Scalar distance;  // surface distance, negative when overlapping
  Eigen::Matrix<Scalar, 3, 1> witness_a;
  Eigen::Matrix<Scalar, 3, 1> witness_b;
};

namespace detail {
template <typename Scalar>
bool lexicographic_less(const CapsuleT<Scalar>& x, const CapsuleT<Scalar>& y) {
  const auto kx = std::make_tuple(x.a.x(), x.a.y(), x.a.z(), x.b.x(), x.b.y(), x.b.z(), x.radius);
  const auto ky = std::make_tuple(y.a.x(), y.a.y(), y.a.z(), y.b.x(), y.b.y(), y.b.z(), y.radius);
  return kx < ky;
}
}  // namespace detail

/// Surface distance between two capsules with the axis points realizing
/// it. Arguments are put in a canonical order before evaluation, so
/// swapping them returns exactly the same distance.
template <typename Scalar>
CapsuleDistance<Scalar> capsule_closest_distance(const CapsuleT<Scalar>& a, const CapsuleT<Scalar>& b) {
  const bool swapped = detail::lexicographic_less(b, a);
  const CapsuleT<Scalar>& first = swapped ? b : a;
  const CapsuleT<Scalar>& second = swapped ? a : b;
  const auto cp = closest_points_segments<Scalar>(first.a, first.b, second.a, second.b);
  using std::sqrt;
  const Scalar d = sqrt(cp.distance_sq) - first.radius - second.radius;
  if (swapped) return {d, cp.point_b, cp.point_a};
  return {d, cp.point_a, cp.point_b};
}

}  // namespace tangle
