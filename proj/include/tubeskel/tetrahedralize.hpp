#pragma once

#include "tubeskel/bucket_grid.hpp"
#include "tubeskel/mesh.hpp"

#include <cstdint>

namespace tubeskel {

struct TetrahedralizeOptions {
  /// Extra surface samples per face on average, distributed in proportion to
  /// face area. Zero inserts the mesh vertices only.
  double supersample = 0.0;
  std::uint64_t seed = 0;
};

/// Extra points placed strictly inside surface triangles.
std::vector<Vec3> surface_samples(const TriangleMesh& mesh, double per_face, std::uint64_t seed);

/// Delaunay cells of the (supersampled) mesh vertices whose centroids pass
/// the parity test. Vertex i of the result is mesh vertex i for every mesh
/// vertex; samples follow.
TetComplex delaunay_interior(const TriangleMesh& mesh, const TetrahedralizeOptions& options = {});
TetComplex delaunay_interior(const TriangleMesh& mesh, const BucketGrid& grid,
                             const TetrahedralizeOptions& options = {});

/// Drops cells whose centroid lies outside the surface; vertices are kept.
TetComplex restrict_to_interior(const TetComplex& complex, const BucketGrid& grid, std::uint64_t seed = 0);

}  // namespace tubeskel
