#pragma once

#include "tubeskel/mesh.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace tubeskel {

enum class SegmentHit {
  kNone,
  kCross,       ///< proper crossing through the triangle interior
  kDegenerate,  ///< touches an edge or vertex, or lies in the triangle plane
};

/// Exact classification of segment pq against triangle abc.
SegmentHit segment_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

/// True if p lies in the closed triangle abc (exact).
bool point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Uniform grid of triangle buckets over a padded mesh bounding box. Cells are
/// cubes sized so that the cell count is close to the face count, which gives
/// O(1) expected candidates per visited cell. The mesh must outlive the grid.
class BucketGrid {
 public:
  explicit BucketGrid(const TriangleMesh& mesh, double cells_per_face = 1.0);

  const TriangleMesh& mesh() const { return *mesh_; }
  const Aabb& bounds() const { return bounds_; }
  const std::array<int, 3>& resolution() const { return res_; }
  double cell_size() const { return h_; }
  const std::vector<int>& bucket(int i, int j, int k) const { return buckets_[index(i, j, k)]; }

  /// Triangles whose padded bounding box overlaps a cell the segment visits.
  /// Sorted and deduplicated.
  std::vector<int> candidates_along(const Vec3& p, const Vec3& q) const;

  /// Number of proper crossings of pq with the surface, or nullopt when the
  /// segment touches an edge, a vertex or a triangle plane degenerately.
  std::optional<int> crossings(const Vec3& p, const Vec3& q) const;

  /// Parity test with a seeded ray. Points on the surface count as inside.
  /// Throws NumericError("unresolvable parity") when every ray re-draw is
  /// degenerate.
  bool contains(const Vec3& p, std::uint64_t seed = 0) const;

  /// Unsigned distance to the closest surface point, answered by a bounding
  /// volume hierarchy over the faces rather than the buckets, since interior
  /// query points sit many cells away from the surface.
  double distance_to_surface(const Vec3& p) const;

  static constexpr int kMaxRayAttempts = 16;

 private:
  int index(int i, int j, int k) const { return (k * res_[1] + j) * res_[0] + i; }
  std::array<int, 3> cell_of(const Vec3& p) const;

  const TriangleMesh* mesh_;
  Aabb bounds_;
  double h_ = 1.0;
  std::array<int, 3> res_{1, 1, 1};
  std::vector<std::vector<int>> buckets_;
  std::vector<Aabb> face_boxes_;

  struct BvhNode {
    Aabb box;
    int left = -1;  ///< -1 for leaves
    int right = -1;
    int first = 0;  ///< leaf range in bvh_faces_
    int count = 0;
  };
  int build_bvh(int begin, int end);
  std::vector<BvhNode> bvh_;
  std::vector<int> bvh_faces_;
};

/// Convenience wrapper building a throwaway grid.
bool point_in_mesh(const Vec3& p, const TriangleMesh& mesh, std::uint64_t seed = 0);
bool point_in_mesh(const Vec3& p, const BucketGrid& grid, std::uint64_t seed = 0);

}  // namespace tubeskel
