#pragma once

#include "tubeskel/mesh.hpp"

#include <vector>

namespace tubeskel {

/// Delaunay tetrahedralization of a point set by incremental Bowyer-Watson
/// insertion inside a finite bounding super-tetrahedron. Cospherical ties are
/// resolved by symbolic perturbation ranked on the point index, so the result
/// is unique for a given input order. Returned cells are positively oriented
/// and use only input points; cells touching the super-tetrahedron are
/// dropped, which can lose a few slivers on the convex hull.
///
/// Throws ValidationError for fewer than four points, duplicates or an
/// all-coplanar set, NumericError if an insertion produces a flat cell.
std::vector<Cell> delaunay_tetrahedralize(const std::vector<Vec3>& points);

}  // namespace tubeskel
