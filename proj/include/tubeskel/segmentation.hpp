#pragma once

#include "tubeskel/bucket_grid.hpp"
#include "tubeskel/mesh.hpp"
#include "tubeskel/skeleton_tree.hpp"

#include <string>
#include <vector>

namespace tubeskel {

/// Maximal chain of axis links whose interior nodes have degree two.
struct Branch {
  int id = -1;
  int parent = -1;
  int component = 0;
  /// Proximal end first. A root of degree two lies inside its branch.
  std::vector<int> nodes;
  /// Euclidean polyline length.
  double length = 0.0;
};

/// Refined axis of every graph component with its branch decomposition.
/// Node ids are global: all trees index the same node table.
struct MedialAxis {
  std::vector<SkeletonTree> trees;
  std::vector<Branch> branches;
  /// Owning branch per node id, -1 for non-axis nodes. An endpoint shared by
  /// several branches belongs to the one arriving from the root side.
  std::vector<int> node_branch;

  int capacity() const { return trees.empty() ? 0 : trees.front().capacity(); }
  /// All axis nodes, ascending.
  std::vector<int> nodes() const;
  /// Tree containing node n, or -1.
  int tree_of(int n) const;
};

/// Splits each tree at nodes of degree other than two. Branch ids follow a
/// depth-first pre-order from the roots, children by ascending first node.
/// A tree with k such nodes yields k - 1 branches (one for a lone root).
MedialAxis decompose_branches(std::vector<SkeletonTree> trees);

/// kd-tree over a fixed node set. nearest() returns the node minimizing
/// (squared distance, id) and agrees exactly with an exhaustive scan.
class NearestNodeIndex {
 public:
  NearestNodeIndex(const std::vector<Vec3>& positions, std::vector<int> ids);
  int nearest(const Vec3& p) const;

 private:
  struct KdNode {
    int point;  ///< index into ids_
    int axis;
    int left = -1;
    int right = -1;
    /// Bounds of the whole subtree. Queries far from a thin axis rely on
    /// them, since the splitting planes alone prune little there.
    Aabb box;
  };
  int build(std::vector<int>& items, int lo, int hi, int depth);
  void search(int node, const Vec3& p, double& best2, int& best) const;

  std::vector<Vec3> points_;
  std::vector<int> ids_;
  std::vector<KdNode> nodes_;
  int root_ = -1;
};

/// Exhaustive (squared distance, id) argmin over the listed nodes.
int nearest_exhaustive(const std::vector<Vec3>& positions, const std::vector<int>& ids, const Vec3& p);

struct NodeAggregate {
  int cells = 0;
  double volume = 0.0;
  double surface_area = 0.0;
};

/// Assignment of every cell of one tet complex to its nearest axis node.
struct SegmentationMap {
  std::string label;
  std::vector<int> assignment;
  std::vector<double> cell_volume;
  /// Area of the cell's boundary faces that lie on the segmented surface.
  std::vector<double> cell_surface_area;
  /// Indexed by node id.
  std::vector<NodeAggregate> node;
  double total_volume = 0.0;
  double total_surface_area = 0.0;
};

/// Assigns by cell mass center. `surface` indexes the mesh the complex fills
/// and decides which boundary faces count toward surface area. Throws
/// ValidationError for an empty axis.
SegmentationMap segment(const TetComplex& complex, const MedialAxis& axis, const BucketGrid& surface,
                        std::string label = {});

/// Totals over the subtree below each node, indexed by node id.
std::vector<NodeAggregate> subtree_aggregates(const SegmentationMap& map, const MedialAxis& axis);

struct BranchProperties {
  int branch = -1;
  int cells = 0;
  double volume = 0.0;
  double surface_area = 0.0;
  double length = 0.0;
  /// Mean distance from the branch's nodes to the artery surface.
  double thickness = 0.0;
};

/// Per-branch totals; a node's cells count toward its owning branch.
/// Thickness is filled in when an artery grid is given.
std::vector<BranchProperties> mass_properties(const SegmentationMap& map, const MedialAxis& axis,
                                              const BucketGrid* artery = nullptr);

struct ObstructionResult {
  int picked = -1;
  std::vector<int> downstream;
  std::vector<int> artery_cells;
  std::vector<int> territory_cells;
  double artery_volume = 0.0;
  double territory_volume = 0.0;
  double territory_surface_area = 0.0;
};

/// Everything at or below the picked node. Throws ValidationError for a node
/// that is not on the axis.
ObstructionResult obstruction_query(const MedialAxis& axis, const SegmentationMap& artery,
                                    const SegmentationMap& territory, int picked);

struct ClippedCells {
  std::vector<int> cells;
  /// Node id of each kept cell.
  std::vector<int> labels;
  /// (cell, local face) of kept cells whose neighbor was dropped.
  std::vector<std::pair<int, int>> cut_faces;
  double volume = 0.0;
};

/// Keeps cells whose mass center lies on the side the normal points to or on
/// the plane.
ClippedCells section_clip(const TetComplex& complex, const SegmentationMap& map, const Vec3& point,
                          const Vec3& normal);

}  // namespace tubeskel
