#include "tubeskel/skeleton_tree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tubeskel {

SkeletonTree::SkeletonTree(std::vector<Vec3> positions, int root)
    : positions_(std::move(positions)),
      member_(positions_.size(), 0),
      parent_(positions_.size(), -1),
      weight_(positions_.size(), 0.0),
      children_(positions_.size()),
      root_(root) {
  if (root < 0 || root >= capacity()) throw std::out_of_range("root " + std::to_string(root) + " out of range");
  member_[root] = 1;
  size_ = 1;
}

void SkeletonTree::attach(int n, int parent, double weight) {
  if (!contains(parent)) throw std::logic_error("parent " + std::to_string(parent) + " is not in the tree");
  if (n < 0 || n >= capacity() || member_[n]) throw std::logic_error("node " + std::to_string(n) + " cannot be attached");
  member_[n] = 1;
  parent_[n] = parent;
  weight_[n] = weight;
  auto& ch = children_[parent];
  ch.insert(std::lower_bound(ch.begin(), ch.end(), n), n);
  ++size_;
}

void SkeletonTree::remove_leaf(int n) {
  if (!contains(n) || n == root_ || !children_[n].empty()) {
    throw std::logic_error("node " + std::to_string(n) + " is not a removable leaf");
  }
  auto& ch = children_[parent_[n]];
  ch.erase(std::lower_bound(ch.begin(), ch.end(), n));
  member_[n] = 0;
  parent_[n] = -1;
  weight_[n] = 0.0;
  --size_;
}

void SkeletonTree::splice_out(int n, const std::vector<double>& child_weights) {
  if (!contains(n) || n == root_) throw std::logic_error("node " + std::to_string(n) + " cannot be spliced out");
  if (child_weights.size() != children_[n].size()) throw std::logic_error("one weight per child required");
  const int p = parent_[n];
  auto& pc = children_[p];
  pc.erase(std::lower_bound(pc.begin(), pc.end(), n));
  for (std::size_t i = 0; i < children_[n].size(); ++i) {
    const int c = children_[n][i];
    parent_[c] = p;
    weight_[c] = child_weights[i];
    pc.insert(std::lower_bound(pc.begin(), pc.end(), c), c);
  }
  children_[n].clear();
  member_[n] = 0;
  parent_[n] = -1;
  weight_[n] = 0.0;
  --size_;
}

std::vector<int> SkeletonTree::preorder() const {
  std::vector<int> out;
  if (root_ < 0) return out;
  out.reserve(size_);
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<int> SkeletonTree::leaves() const {
  std::vector<int> out;
  for (int v = 0; v < capacity(); ++v) {
    if (member_[v] && v != root_ && children_[v].empty()) out.push_back(v);
  }
  return out;
}

std::vector<double> SkeletonTree::depths() const {
  std::vector<double> d(positions_.size(), 0.0);
  for (int v : preorder()) {
    if (v != root_) d[v] = d[parent_[v]] + weight_[v];
  }
  return d;
}

std::vector<int> SkeletonTree::path_from_root(int n) const {
  std::vector<int> path;
  for (int v = n; v >= 0; v = parent_[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

double SkeletonTree::total_length() const {
  double sum = 0.0;
  for (int v : preorder()) sum += weight_[v];
  return sum;
}

void SkeletonTree::check_invariants() const {
  int members = 0;
  for (int v = 0; v < capacity(); ++v) {
    if (!member_[v]) {
      if (parent_[v] >= 0 || !children_[v].empty()) throw std::logic_error("non-member " + std::to_string(v) + " linked");
      continue;
    }
    ++members;
    if (v == root_) {
      if (parent_[v] >= 0) throw std::logic_error("root has a parent");
    } else {
      const int p = parent_[v];
      if (p < 0 || !member_[p]) throw std::logic_error("node " + std::to_string(v) + " has no member parent");
      if (!std::binary_search(children_[p].begin(), children_[p].end(), v)) {
        throw std::logic_error("node " + std::to_string(v) + " missing from its parent's children");
      }
    }
    for (int c : children_[v]) {
      if (parent_[c] != v) throw std::logic_error("child " + std::to_string(c) + " disowns " + std::to_string(v));
    }
  }
  if (members != size_) throw std::logic_error("size mismatch");
  if (static_cast<int>(preorder().size()) != size_) throw std::logic_error("members unreachable from the root");
}

}  // namespace tubeskel
