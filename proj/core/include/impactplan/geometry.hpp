#pragma once

// Closed cubic-spline cross-sections with signed distance and closest-point
// queries.

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <vector>

#include "impactplan/nlp/dual.hpp"

namespace impactplan::geometry {

using Vec2 = Eigen::Vector2d;

struct ClosestPoint {
  Vec2 point;
  double parameter = 0.0;  // in [0, number of control points)
  double distance = 0.0;   // unsigned
};

/// Periodic C2 cubic through an ordered list of control points. Segment i runs
/// from control point i to i+1 (wrapping) over parameter [i, i+1).
class SurfaceSpline {
 public:
  SurfaceSpline() = default;

  /// Throws std::invalid_argument for fewer than 4 points, coincident points
  /// (within 1e-9 m), or a self-intersecting curve.
  static SurfaceSpline from_points(std::span<const Vec2> points, int samples = 256);

  bool empty() const { return points_.empty(); }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Vec2>& control_points() const { return points_; }
  double period() const { return static_cast<double>(points_.size()); }

  Vec2 position(double s) const;
  Vec2 derivative(double s) const;
  Vec2 second_derivative(double s) const;

  const std::vector<Vec2>& samples() const { return sample_points_; }
  const std::vector<double>& sample_parameters() const { return sample_params_; }
  /// Cumulative arc length at each dense sample (first entry 0).
  const std::vector<double>& arc_length_table() const { return arc_length_; }
  double length() const { return total_length_; }

  /// Winding-number test against the dense sample polygon.
  bool contains(const Vec2& p) const;

  ClosestPoint closest_point(const Vec2& p) const;

  /// Positive outside, negative inside, zero on the curve.
  double signed_distance(const Vec2& p) const;

  /// Signed distance for a generic scalar query point. The closest parameter
  /// and the sign are found on the value part; the distance is then evaluated
  /// with T at that parameter, which gives the exact first derivative of the
  /// distance wherever the closest point is unique.
  template <typename T>
  T signed_distance(const T& px, const T& py) const {
    using std::sqrt;
    const Vec2 q(nlp::value_of(px), nlp::value_of(py));
    const ClosestPoint cp = closest_point(q);
    const double sign = contains(q) ? -1.0 : 1.0;
    const T dx = px - cp.point.x();
    const T dy = py - cp.point.y();
    return sign * sqrt(dx * dx + dy * dy);
  }

 private:
  void segment(double s, int& i, double& t) const;

  std::vector<Vec2> points_;
  std::vector<Vec2> second_;  // second derivatives at the control points
  std::vector<Vec2> sample_points_;
  std::vector<double> sample_params_;
  std::vector<double> arc_length_;
  double total_length_ = 0.0;
};

inline SurfaceSpline spline_from_points(std::span<const Vec2> points) {
  return SurfaceSpline::from_points(points);
}

inline double signed_distance(const SurfaceSpline& surface, const Vec2& p) {
  return surface.signed_distance(p);
}

inline ClosestPoint closest_point(const SurfaceSpline& surface, const Vec2& p) {
  return surface.closest_point(p);
}

}  // namespace impactplan::geometry
