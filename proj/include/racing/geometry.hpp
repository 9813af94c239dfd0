#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace racing {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }

  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }

  // 90 degree counter-clockwise rotation (left normal of a tangent).
  Vec2 perp() const { return {-y, x}; }

  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Wraps an angle into (-pi, pi] using exact 2*pi steps.
inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct Pose2 {
  Vec2 pos;
  double yaw = 0.0;

  Vec2 to_world(const Vec2& local) const { return pos + local.rotated(yaw); }
  Vec2 to_local(const Vec2& world) const { return (world - pos).rotated(-yaw); }
};

/// First intersection of the ray o + t*d (t > 0) with segment [a, b].
/// Returns true and the ray parameter t on hit.
inline bool ray_segment_hit(const Vec2& o, const Vec2& d, const Vec2& a, const Vec2& b,
                            double& t_out) {
  const Vec2 e = b - a;
  const double denom = d.cross(e);
  if (std::abs(denom) < 1e-15) return false;  // parallel
  const Vec2 ao = a - o;
  const double t = ao.cross(e) / denom;
  const double u = ao.cross(d) / denom;
  if (t <= 1e-9 || u < 0.0 || u > 1.0) return false;
  t_out = t;
  return true;
}

/// Oriented rectangle, pose at the geometric center.
struct OrientedBox {
  Pose2 pose;
  double length = 5.0;  // along heading
  double width = 1.9;

  std::array<Vec2, 4> corners() const {
    const double hl = 0.5 * length, hw = 0.5 * width;
    return {pose.to_world({+hl, +hw}), pose.to_world({-hl, +hw}),
            pose.to_world({-hl, -hw}), pose.to_world({+hl, -hw})};
  }
};

namespace detail {
inline void project_onto_axis(const std::array<Vec2, 4>& pts, const Vec2& axis,
                              double& lo, double& hi) {
  lo = hi = pts[0].dot(axis);
  for (int i = 1; i < 4; ++i) {
    const double p = pts[i].dot(axis);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
}
}  // namespace detail

/// Separating-axis overlap test for two oriented rectangles.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.pose.yaw), std::sin(a.pose.yaw)},
      Vec2{-std::sin(a.pose.yaw), std::cos(a.pose.yaw)},
      Vec2{std::cos(b.pose.yaw), std::sin(b.pose.yaw)},
      Vec2{-std::sin(b.pose.yaw), std::cos(b.pose.yaw)}};
  for (const Vec2& axis : axes) {
    double alo, ahi, blo, bhi;
    detail::project_onto_axis(ca, axis, alo, ahi);
    detail::project_onto_axis(cb, axis, blo, bhi);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

/// Squared distance from a point to segment [a, b].
inline double point_segment_dist2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double len2 = e.squared_norm();
  if (len2 <= 0.0) return (p - a).squared_norm();
  const double u = std::clamp((p - a).dot(e) / len2, 0.0, 1.0);
  return (p - (a + e * u)).squared_norm();
}

}  // namespace racing
