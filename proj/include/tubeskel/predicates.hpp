#pragma once

#include "tubeskel/geometry.hpp"

namespace tubeskel::predicates {

// Exact-sign geometric predicates. Each evaluates in floating point first and
// falls back to exact integer arithmetic when the result is within the
// rounding error bound, so the returned sign is always the true sign.

/// Sign of (b-a) x (c-a) in the plane: +1 for a counter-clockwise triangle.
int orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c);

/// Sign of (b-a) x (c-a) . (d-a): +1 when abcd is a positively oriented tetrahedron.
int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// +1 if e lies strictly inside the circumsphere of the positively oriented
/// tetrahedron abcd, -1 if strictly outside, 0 if cospherical.
int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e);

/// A point together with a global rank used for symbolic perturbation.
struct RankedPoint {
  const Vec3* p;
  long rank;
};

/// insphere() with cospherical ties resolved by symbolic perturbation of the
/// lifted coordinate: each point's lift is raised by an infinitesimal whose
/// magnitude grows with its rank. Never returns 0 when abcd is non-flat.
int insphere_sos(RankedPoint a, RankedPoint b, RankedPoint c, RankedPoint d, RankedPoint e);

}  // namespace tubeskel::predicates
