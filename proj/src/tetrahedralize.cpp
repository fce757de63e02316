#include "tubeskel/tetrahedralize.hpp"

#include "tubeskel/delaunay.hpp"

#include <cmath>
#include <random>

namespace tubeskel {

std::vector<Vec3> surface_samples(const TriangleMesh& mesh, double per_face, std::uint64_t seed) {
  std::vector<Vec3> out;
  if (!(per_face > 0.0) || mesh.faces.empty()) return out;
  const double mean_area = mesh.surface_area() / static_cast<double>(mesh.faces.size());
  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1p-53; };
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const int count = static_cast<int>(std::floor(per_face * triangle_area(a, b, c) / mean_area + unit()));
    for (int i = 0; i < count; ++i) {
      // Barycentric coordinates bounded away from the edges.
      double u = unit(), v = unit();
      if (u + v > 1.0) u = 1.0 - u, v = 1.0 - v;
      const double s = 0.1 + 0.7 * u, t = 0.1 + 0.7 * v;
      out.push_back(a + s * (b - a) + t * (c - a));
    }
  }
  return out;
}

TetComplex restrict_to_interior(const TetComplex& complex, const BucketGrid& grid, std::uint64_t seed) {
  std::vector<Cell> kept;
  for (int c = 0; c < static_cast<int>(complex.cells.size()); ++c) {
    if (grid.contains(complex.centroid(c), seed)) kept.push_back(complex.cells[c]);
  }
  return TetComplex::from_cells(complex.vertices, std::move(kept));
}

TetComplex delaunay_interior(const TriangleMesh& mesh, const BucketGrid& grid, const TetrahedralizeOptions& options) {
  std::vector<Vec3> points = mesh.vertices;
  const auto samples = surface_samples(mesh, options.supersample, options.seed);
  points.insert(points.end(), samples.begin(), samples.end());
  std::vector<Cell> kept;
  for (const Cell& cell : delaunay_tetrahedralize(points)) {
    const Vec3 centroid = 0.25 * (points[cell[0]] + points[cell[1]] + points[cell[2]] + points[cell[3]]);
    if (grid.contains(centroid, options.seed)) kept.push_back(cell);
  }
  return TetComplex::from_cells(std::move(points), std::move(kept));
}

TetComplex delaunay_interior(const TriangleMesh& mesh, const TetrahedralizeOptions& options) {
  const BucketGrid grid(mesh);
  return delaunay_interior(mesh, grid, options);
}

}  // namespace tubeskel
