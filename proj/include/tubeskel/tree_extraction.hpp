#pragma once

#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/skeleton_tree.hpp"

#include <iosfwd>
#include <vector>

namespace tubeskel {

/// Shortest-path tree of the root's component. Dijkstra ties resolve to the
/// smaller node id, so the tree is a pure function of the graph and root.
SkeletonTree forward_spt(const SkeletonGraph& graph, int root);

/// Leaves of a tree with their root path lengths, longest first, ties by
/// smaller leaf id.
struct LeafPath {
  int leaf;
  double length;
};
std::vector<LeafPath> leaf_queue(const SkeletonTree& tree);

/// One concatenation of the growing tree: T_i = T_{i-1} + path of `leaf`.
struct ConcatenationStep {
  int iteration = 0;
  int leaf = -1;
  double path_length = 0.0;  ///< length of the concatenated path
  double delta = 0.0;        ///< distance of T_i to the final tree
  double reduction = 0.0;    ///< T_{i-1} distance minus T_i distance
};

struct ExtractionTrace {
  std::vector<ConcatenationStep> steps;
  /// Leaves whose backward path had zero length because an earlier path
  /// already covered them.
  std::vector<int> skipped_leaves;
  /// Distance of the root-only tree T_0 to the final tree.
  double initial_delta = 0.0;
};

/// Forward SPT, then the longest forward path as T_1, then for each further
/// leaf in queue order the backward shortest path from the leaf to the
/// current tree. Distances of the intermediate trees to the final one are
/// recorded when a trace is requested.
SkeletonTree extract_tree(const SkeletonGraph& graph, int root, ExtractionTrace* trace = nullptr);

/// Sum over nodes of `full` of the distance within `full` to the nearest node
/// of `sub`. Throws ValidationError if `sub` is not a subtree of `full`.
double tree_distance(const SkeletonTree& sub, const SkeletonTree& full);

/// Tracks the distance of a growing rooted subtree to a fixed tree. Starts at
/// the root alone. Nodes must be added parent first, which makes each
/// addition constant time.
class SubtreeDistanceTracker {
 public:
  explicit SubtreeDistanceTracker(const SkeletonTree& full);

  bool contains(int n) const { return in_[n] != 0; }
  /// Current distance of the subtree to the full tree.
  double distance() const { return distance_; }
  /// Adds n and returns the distance reduction.
  double add(int n);
  /// Adds the nodes of a root path not yet present; returns the total reduction.
  double add_path(const std::vector<int>& root_path);

 private:
  const SkeletonTree& full_;
  std::vector<double> size_;  ///< full-tree subtree node counts
  std::vector<char> in_;
  double distance_ = 0.0;
};

/// CSV with columns iteration,leaf,path_length,delta,reduction.
void write_trace_csv(const ExtractionTrace& trace, std::ostream& out);

}  // namespace tubeskel
