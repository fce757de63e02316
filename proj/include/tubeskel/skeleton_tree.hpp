#pragma once

#include "tubeskel/geometry.hpp"

#include <vector>

namespace tubeskel {

/// Rooted tree over a subset of graph node ids. Node ids index a fixed
/// position table shared with the graph, so trees from the same graph can be
/// compared node by node. Children are kept in ascending id order.
class SkeletonTree {
 public:
  SkeletonTree() = default;
  /// A tree holding only the root.
  SkeletonTree(std::vector<Vec3> positions, int root);

  int root() const { return root_; }
  int capacity() const { return static_cast<int>(positions_.size()); }
  int size() const { return size_; }
  bool contains(int n) const { return n >= 0 && n < capacity() && member_[n]; }
  int parent(int n) const { return parent_[n]; }
  const std::vector<int>& children(int n) const { return children_[n]; }
  int degree(int n) const { return static_cast<int>(children_[n].size()) + (parent_[n] >= 0 ? 1 : 0); }
  /// Weight of the link from n to its parent.
  double weight(int n) const { return weight_[n]; }
  const Vec3& position(int n) const { return positions_[n]; }
  const std::vector<Vec3>& positions() const { return positions_; }

  /// Attaches a new node below a member.
  void attach(int n, int parent, double weight);
  /// Removes a leaf other than the root.
  void remove_leaf(int n);
  /// Removes a non-root node and hangs its children on its parent. The new
  /// links get the given per-child weights.
  void splice_out(int n, const std::vector<double>& child_weights);

  /// Members in depth-first pre-order, children ascending.
  std::vector<int> preorder() const;
  /// Leaves other than the root, ascending.
  std::vector<int> leaves() const;
  /// Weighted distance from the root, indexed by node id; unset for non-members.
  std::vector<double> depths() const;
  /// Nodes from the root down to n.
  std::vector<int> path_from_root(int n) const;
  /// Sum of all link weights.
  double total_length() const;

  /// Throws std::logic_error if the parent/children tables disagree, a cycle
  /// exists or a member is unreachable from the root.
  void check_invariants() const;

 private:
  std::vector<Vec3> positions_;
  std::vector<char> member_;
  std::vector<int> parent_;
  std::vector<double> weight_;
  std::vector<std::vector<int>> children_;
  int root_ = -1;
  int size_ = 0;
};

}  // namespace tubeskel
