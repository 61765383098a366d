#include "impactplan/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace impactplan::geometry {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

SurfaceSpline SurfaceSpline::from_points(std::span<const Vec2> points, int samples) {
  const int n = static_cast<int>(points.size());
  if (n < 4) throw std::invalid_argument("too few points: a closed spline needs at least 4");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((points[i] - points[j]).norm() <= 1e-9)
        throw std::invalid_argument("duplicate points at indices " + std::to_string(i) + " and " +
                                    std::to_string(j));

  SurfaceSpline s;
  s.points_.assign(points.begin(), points.end());

  // Uniform periodic cubic: M[i-1] + 4 M[i] + M[i+1] = 6 (P[i+1] - 2 P[i] + P[i-1]).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs(n, 2);
  for (int i = 0; i < n; ++i) {
    const int im = (i + n - 1) % n;
    const int ip = (i + 1) % n;
    A(i, im) += 1.0;
    A(i, i) += 4.0;
    A(i, ip) += 1.0;
    const Vec2 r = 6.0 * (points[ip] - 2.0 * points[i] + points[im]);
    rhs(i, 0) = r.x();
    rhs(i, 1) = r.y();
  }
  const Eigen::MatrixXd m = A.partialPivLu().solve(rhs);
  s.second_.resize(n);
  for (int i = 0; i < n; ++i) s.second_[i] = Vec2(m(i, 0), m(i, 1));

  const int count = std::max(samples, 4 * n);
  s.sample_points_.resize(count);
  s.sample_params_.resize(count);
  s.arc_length_.assign(count, 0.0);
  for (int k = 0; k < count; ++k) {
    s.sample_params_[k] = static_cast<double>(k) * n / count;
    s.sample_points_[k] = s.position(s.sample_params_[k]);
    if (k > 0)
      s.arc_length_[k] = s.arc_length_[k - 1] + (s.sample_points_[k] - s.sample_points_[k - 1]).norm();
  }
  s.total_length_ = s.arc_length_.back() + (s.sample_points_.front() - s.sample_points_.back()).norm();

  for (int a = 0; a < count; ++a) {
    for (int b = a + 2; b < count; ++b) {
      if (a == 0 && b == count - 1) continue;  // adjacent across the seam
      if (segments_cross(s.sample_points_[a], s.sample_points_[(a + 1) % count], s.sample_points_[b],
                         s.sample_points_[(b + 1) % count]))
        throw std::invalid_argument("self-intersection detected in closed spline");
    }
  }
  return s;
}

void SurfaceSpline::segment(double s, int& i, double& t) const {
  const double n = period();
  s = std::fmod(s, n);
  if (s < 0.0) s += n;
  double fl = std::floor(s);
  i = static_cast<int>(fl);
  t = s - fl;
  if (i >= size()) {
    i = 0;
    t = 0.0;
  }
}

Vec2 SurfaceSpline::position(double s) const {
  int i;
  double t;
  segment(s, i, t);
  const int j = (i + 1) % size();
  const double u = 1.0 - t;
  return u * points_[i] + t * points_[j] + ((u * u * u - u) * second_[i] + (t * t * t - t) * second_[j]) / 6.0;
}

Vec2 SurfaceSpline::derivative(double s) const {
  int i;
  double t;
  segment(s, i, t);
  const int j = (i + 1) % size();
  const double u = 1.0 - t;
  return points_[j] - points_[i] + ((1.0 - 3.0 * u * u) * second_[i] + (3.0 * t * t - 1.0) * second_[j]) / 6.0;
}

Vec2 SurfaceSpline::second_derivative(double s) const {
  int i;
  double t;
  segment(s, i, t);
  const int j = (i + 1) % size();
  return (1.0 - t) * second_[i] + t * second_[j];
}

bool SurfaceSpline::contains(const Vec2& p) const {
  int winding = 0;
  const int count = static_cast<int>(sample_points_.size());
  for (int k = 0; k < count; ++k) {
    const Vec2& a = sample_points_[k];
    const Vec2& b = sample_points_[(k + 1) % count];
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross(b - a, p - a) > 0.0) ++winding;
    } else if (b.y() <= p.y() && cross(b - a, p - a) < 0.0) {
      --winding;
    }
  }
  return winding != 0;
}

ClosestPoint SurfaceSpline::closest_point(const Vec2& p) const {
  const int count = static_cast<int>(sample_points_.size());
  std::vector<double> dist(count);
  for (int k = 0; k < count; ++k) dist[k] = (sample_points_[k] - p).norm();
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  // Near-equal distances are ordered by parameter so ties resolve the same way
  // regardless of rounding.
  const double best = *std::min_element(dist.begin(), dist.end());
  const double band = 1e-9 * (1.0 + best);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool ta = dist[a] <= best + band;
    const bool tb = dist[b] <= best + band;
    if (ta != tb) return ta;
    if (ta) return a < b;
    return dist[a] < dist[b];
  });

  const double h = period() / count;
  ClosestPoint result;
  result.distance = std::numeric_limits<double>::infinity();
  auto consider = [&](double s) {
    s = std::fmod(s, period());
    if (s < 0.0) s += period();
    const Vec2 q = position(s);
    const double d = (q - p).norm();
    const double tie = 1e-12 * (1.0 + d);
    if (d < result.distance - tie || (std::abs(d - result.distance) <= tie && s < result.parameter)) {
      result.point = q;
      result.parameter = s;
      result.distance = d;
    }
  };

  for (int seed = 0; seed < std::min(3, count); ++seed) {
    double s = sample_params_[order[seed]];
    consider(s);
    for (int it = 0; it < 20; ++it) {
      const Vec2 r = position(s) - p;
      const Vec2 d1 = derivative(s);
      const Vec2 d2 = second_derivative(s);
      const double g = r.dot(d1);
      const double H = d1.dot(d1) + r.dot(d2);
      double step = H > 0.0 ? -g / H : (g > 0.0 ? -h : h);
      step = std::clamp(step, -h, h);
      s += step;
      if (std::abs(step) < 1e-14) break;
    }
    consider(s);
  }
  return result;
}

double SurfaceSpline::signed_distance(const Vec2& p) const {
  const ClosestPoint cp = closest_point(p);
  return contains(p) ? -cp.distance : cp.distance;
}

}  // namespace impactplan::geometry
