#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <optional>
#include <span>

namespace tubeskel {

using Vec3 = Eigen::Vector3d;

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool empty() const { return (max.array() < min.array()).any(); }
  Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(max - min); }
  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  static Aabb of(std::span<const Vec3> points) {
    Aabb box;
    for (const Vec3& p : points) box.extend(p);
    return box;
  }
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

/// Signed volume; positive when (b-a, c-a, d-a) is right-handed.
double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Circumcenter of a tetrahedron, or nullopt when the cell is flat.
std::optional<Vec3> tet_circumcenter(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace tubeskel
