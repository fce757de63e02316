#pragma once

#include "tubeskel/mesh.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tubeskel {

enum class LinkWeight { kEuclidean, kHops };

struct GraphNode {
  int cell = -1;
  /// Circumcenter, or the centroid for a clamped cell.
  Vec3 position = Vec3::Zero();
  double circumradius = 0.0;
  double largest_face_area = 0.0;
  /// The circumcenter was replaced by the centroid.
  bool clamped = false;
};

struct GraphLink {
  int a = -1;
  int b = -1;
  double weight = 0.0;
};

struct GraphOptions {
  LinkWeight weight = LinkWeight::kEuclidean;
  /// Circumradii beyond clamp_factor * (bounding-box diagonal) are clamped.
  double clamp_factor = 10.0;
};

/// Dual adjacency graph of a tet complex: one node per cell, one link per
/// shared face. Immutable after construction.
class SkeletonGraph {
 public:
  struct Incidence {
    int node;
    int link;
  };

  SkeletonGraph() = default;
  /// min_weight floors the weights weight_between() hands out.
  SkeletonGraph(std::vector<GraphNode> nodes, std::vector<GraphLink> links,
                LinkWeight metric = LinkWeight::kEuclidean, double min_weight = 0.0);

  /// Hand-built graphs for tests and diagnostics; node cell ids are the node ids.
  static SkeletonGraph from_links(std::vector<Vec3> positions, const std::vector<std::pair<int, int>>& links,
                                  LinkWeight weight = LinkWeight::kEuclidean);
  static SkeletonGraph from_weighted_links(std::vector<Vec3> positions, std::vector<GraphLink> links);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphLink>& links() const { return links_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const Vec3& position(int n) const { return nodes_[n].position; }
  std::span<const Incidence> neighbors(int n) const {
    return {incidence_.data() + offsets_[n], incidence_.data() + offsets_[n + 1]};
  }
  int component(int n) const { return component_[n]; }
  int component_count() const { return component_count_; }
  /// Nodes of each component, ascending; components numbered by smallest node.
  std::vector<std::vector<int>> components() const;
  LinkWeight metric() const { return metric_; }
  /// Weight the metric gives a link between two positions that is not a
  /// graph link, as created when the axis is straightened.
  double weight_between(const Vec3& a, const Vec3& b) const;

 private:
  void index();

  std::vector<GraphNode> nodes_;
  std::vector<GraphLink> links_;
  std::vector<int> offsets_{0};
  std::vector<Incidence> incidence_;
  std::vector<int> component_;
  int component_count_ = 0;
  LinkWeight metric_ = LinkWeight::kEuclidean;
  double min_weight_ = 0.0;
};

/// Runs in time linear in the number of cells. Link weights are floored at
/// 1e-9 of the bounding-box diagonal so coincident circumcenters of
/// cospherical cells still give strictly positive weights.
SkeletonGraph build_graph(const TetComplex& complex, const GraphOptions& options = {});

enum class RootMode { kAutomatic, kManual };

struct RootSelection {
  RootMode mode = RootMode::kAutomatic;
  /// roots[c] is the root of component c.
  std::vector<int> roots;
};

/// Automatic mode picks, per component, the node whose cell has the largest
/// face (ties to the lowest cell id). In manual mode the pick replaces the
/// automatic root of its own component. Throws ValidationError for a pick
/// outside the graph or a missing pick.
RootSelection select_root(const SkeletonGraph& graph, RootMode mode = RootMode::kAutomatic,
                          std::optional<int> manual_pick = std::nullopt);

/// "a b weight" per line after a "nodes links" header.
void write_edge_list(const SkeletonGraph& graph, std::ostream& out);

}  // namespace tubeskel
