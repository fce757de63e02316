#pragma once

#include "tubeskel/bucket_grid.hpp"
#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/skeleton_tree.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tubeskel {

struct RefinementReport {
  int initial_nodes = 0;
  int after_outrageous = 0;
  int after_shave = 0;
  int final_nodes = 0;
  int removed_outrageous = 0;
  int removed_hair = 0;
  int removed_bumpy = 0;
  /// Links whose crossing count was degenerate, settled by a direct parity test.
  int parity_fallbacks = 0;
  /// Threshold used for shaving and whether it was the mean reduction.
  double epsilon = 0.0;
  bool epsilon_auto = true;
  /// Reduction of every path in queue order, kept or not.
  std::vector<double> deltas;
  /// Nodes still outside the surface after straightening; reported only.
  std::vector<int> still_outside;
};

/// Inside/outside status of every member, propagated from the root by the
/// parity of link crossings. Throws ValidationError if the root is outside.
std::vector<char> classify_nodes(const SkeletonTree& tree, const BucketGrid& grid, std::uint64_t seed = 0,
                                 int* fallbacks = nullptr);

/// Removes outside nodes. Outside leaves are peeled repeatedly, so an
/// outside subtree goes up to where its branch re-enters the surface; the
/// remaining outside nodes sit between inside nodes and are spliced out.
SkeletonTree remove_outrageous(const SkeletonTree& tree, const BucketGrid& grid, RefinementReport* report = nullptr,
                               std::uint64_t seed = 0);

/// Rebuilds the tree from its root paths, longest first, keeping a path when
/// its distance reduction is at least epsilon. Without epsilon the mean of
/// all reductions is used. The longest path is always kept.
SkeletonTree shave_hairs(const SkeletonTree& tree, std::optional<double> epsilon = std::nullopt,
                         RefinementReport* report = nullptr);

/// ||u23 - u12|| for unit directions of p1->p2 and p2->p3. Throws
/// ValidationError for coincident consecutive points.
double discrete_curvature(const Vec3& p1, const Vec3& p2, const Vec3& p3);

/// Slides a four-node window along every root-to-leaf path and splices out
/// n2 when ||d123|| > alpha1 and | ||d234|| - ||d123|| | > alpha2. After a
/// removal the window is re-tested in place. The root and branch nodes stay.
/// New links are weighted by the graph's metric.
SkeletonTree straighten_bumpy(const SkeletonTree& tree, const SkeletonGraph& graph, double alpha1 = 0.5,
                              double alpha2 = 0.5, RefinementReport* report = nullptr);

/// Members whose position fails the parity test.
std::vector<int> outside_nodes(const SkeletonTree& tree, const BucketGrid& grid, std::uint64_t seed = 0);

}  // namespace tubeskel
