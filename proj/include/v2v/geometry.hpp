#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace v2v {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

inline double distance(Vec3 a, Vec3 b) { return norm(b - a); }

inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  return n > 0.0 ? (1.0 / n) * a : Vec3{};
}

/// Mirror direction `d` about a surface with unit normal `n`.
constexpr Vec3 reflect(Vec3 d, Vec3 n) { return d - 2.0 * dot(d, n) * n; }

/// Angle between two unit vectors, in radians, robust near 0 and pi.
inline double angle_between(Vec3 a, Vec3 b) {
  return std::atan2(norm(cross(a, b)), dot(a, b));
}

constexpr double kPi = 3.14159265358979323846;

constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }
constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }

/// Axis-aligned box. Vehicles are modeled as boxes aligned with the street axes.
struct Box {
  Vec3 lo;
  Vec3 hi;

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }

  /// True when the interiors of the two boxes overlap. Touching faces do not count.
  bool overlaps(const Box& o) const {
    for (int a = 0; a < 3; ++a) {
      if (hi[a] <= o.lo[a] || o.hi[a] <= lo[a]) return false;
    }
    return true;
  }
};

/// True when the segment [p, q] passes through the open interior of `box` over a
/// length greater than `tolerance`. Segments that end on a face, or graze a face or
/// edge, are not considered blocked.
inline bool segment_penetrates(const Box& box, Vec3 p, Vec3 q, double tolerance = 1e-9) {
  const Vec3 d = q - p;
  double t0 = 0.0;
  double t1 = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double da = d[a];
    if (std::abs(da) < 1e-15) {
      if (p[a] <= box.lo[a] || p[a] >= box.hi[a]) return false;
      continue;
    }
    double ta = (box.lo[a] - p[a]) / da;
    double tb = (box.hi[a] - p[a]) / da;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return (t1 - t0) * norm(d) > tolerance;
}

}  // namespace v2v
