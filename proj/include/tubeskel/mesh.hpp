#pragma once

#include "tubeskel/geometry.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace tubeskel {

using Face = std::array<int, 3>;
using Cell = std::array<int, 4>;

/// Indexed triangle surface. A validated mesh is a closed, consistently and
/// outward oriented 2-manifold of genus 0 (see validate()).
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string label;

  Aabb bounds() const { return Aabb::of(vertices); }
  std::size_t edge_count() const;
  long euler_characteristic() const;
  double signed_volume() const;
  double surface_area() const;
};

struct ValidationOptions {
  bool allow_multiple_shells = false;
  /// Faces with area at or below this fraction of the squared bounding-box
  /// diagonal are rejected as degenerate.
  double degenerate_area = 1e-14;
};

/// Throws ValidationError naming the offending simplex.
void validate(const TriangleMesh& mesh, const ValidationOptions& options = {});

/// Merges vertices closer than relative_tolerance * bbox diagonal and drops
/// vertices no face references. Vertex order follows first occurrence.
TriangleMesh weld(const TriangleMesh& raw, double relative_tolerance = 1e-6);

/// Counts per connected shell, used for diagnostics.
struct ShellTopology {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  long euler() const { return static_cast<long>(vertices) - static_cast<long>(edges) + static_cast<long>(faces); }
};
std::vector<ShellTopology> shell_topology(const TriangleMesh& mesh);

/// Canonical form for equality up to vertex reindexing: vertices sorted
/// lexicographically, each face rotated to start at its smallest index, faces
/// sorted. Orientation is preserved.
TriangleMesh canonicalize(const TriangleMesh& mesh);

enum class InvertedCellPolicy { kReject, kRepair };

struct BoundaryFace {
  int cell = -1;
  int local = -1;  ///< the face is opposite this local vertex of the cell
  Face vertices{};  ///< oriented with the normal pointing out of the cell
};

/// Tetrahedral complex with face adjacency between cells.
struct TetComplex {
  std::vector<Vec3> vertices;
  std::vector<Cell> cells;
  /// adjacency[c][k] is the cell sharing the face opposite local vertex k, or -1.
  std::vector<std::array<int, 4>> adjacency;
  std::vector<BoundaryFace> boundary_faces;

  /// Local vertex triples of the four faces, outward for a positive cell.
  static constexpr std::array<std::array<int, 3>, 4> kFaceLocal{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

  /// Builds adjacency by matching sorted face triples. Cells must reference
  /// valid vertices and have nonzero volume; negatively oriented cells are
  /// rejected or repaired by swapping two vertices according to policy.
  static TetComplex from_cells(std::vector<Vec3> vertices, std::vector<Cell> cells,
                               InvertedCellPolicy policy = InvertedCellPolicy::kReject);

  std::size_t interior_face_count() const;
  Vec3 centroid(int cell) const;
  double volume(int cell) const;
  double total_volume() const;
  Face face(int cell, int local) const;
};

}  // namespace tubeskel
