#include "tubeskel/segmentation.hpp"

#include "tubeskel/errors.hpp"

#include <algorithm>
#include <limits>

namespace tubeskel {
namespace {

double polyline_length(const SkeletonTree& t, const std::vector<int>& nodes) {
  double len = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) len += (t.position(nodes[i]) - t.position(nodes[i - 1])).norm();
  return len;
}

// Follows single-child links from `first` until a node of degree other than two.
std::vector<int> walk_chain(const SkeletonTree& t, int from, int first) {
  std::vector<int> chain{from, first};
  int v = first;
  while (t.degree(v) == 2) {
    v = t.children(v).front();
    chain.push_back(v);
  }
  return chain;
}

}  // namespace

std::vector<int> MedialAxis::nodes() const {
  std::vector<int> out;
  for (const SkeletonTree& t : trees) {
    const auto pre = t.preorder();
    out.insert(out.end(), pre.begin(), pre.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int MedialAxis::tree_of(int n) const {
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (trees[i].contains(n)) return static_cast<int>(i);
  }
  return -1;
}

MedialAxis decompose_branches(std::vector<SkeletonTree> trees) {
  MedialAxis axis;
  axis.trees = std::move(trees);
  const int cap = axis.capacity();
  for (const SkeletonTree& t : axis.trees) {
    if (t.capacity() != cap) throw ValidationError("axis trees index different node tables");
  }
  axis.node_branch.assign(cap, -1);

  const auto add_branch = [&axis](int parent, int component, std::vector<int> nodes, const SkeletonTree& t) {
    Branch b;
    b.id = static_cast<int>(axis.branches.size());
    b.parent = parent;
    b.component = component;
    b.length = polyline_length(t, nodes);
    for (std::size_t i = 1; i < nodes.size(); ++i) axis.node_branch[nodes[i]] = b.id;
    b.nodes = std::move(nodes);
    axis.branches.push_back(std::move(b));
    return axis.branches.back().id;
  };

  for (int comp = 0; comp < static_cast<int>(axis.trees.size()); ++comp) {
    const SkeletonTree& t = axis.trees[comp];
    const int root = t.root();
    // Pending (parent branch, key node) pairs; the stack gives pre-order.
    std::vector<std::pair<int, int>> stack;
    const auto push_children = [&stack, &t](int branch, int key) {
      const auto& ch = t.children(key);
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({branch, *it});
    };

    if (t.children(root).empty()) {
      const int id = add_branch(-1, comp, {root}, t);
      axis.node_branch[root] = id;
      continue;
    }
    if (t.degree(root) == 2) {
      auto left = walk_chain(t, root, t.children(root)[0]);
      const auto right = walk_chain(t, root, t.children(root)[1]);
      std::reverse(left.begin(), left.end());
      left.insert(left.end(), right.begin() + 1, right.end());
      const int id = add_branch(-1, comp, left, t);
      axis.node_branch[left.front()] = id;
      // The far end's subtrees go on the stack first so the near end's pop first.
      push_children(id, right.back());
      push_children(id, left.front());
    } else {
      push_children(-1, root);
    }
    bool root_owned = axis.node_branch[root] >= 0;
    while (!stack.empty()) {
      const auto [parent, first] = stack.back();
      stack.pop_back();
      const int from = t.parent(first);
      auto chain = walk_chain(t, from, first);
      const int key = chain.back();
      const int id = add_branch(parent, comp, std::move(chain), t);
      if (!root_owned && from == root) {
        axis.node_branch[root] = id;
        root_owned = true;
      }
      push_children(id, key);
    }
  }
  return axis;
}

NearestNodeIndex::NearestNodeIndex(const std::vector<Vec3>& positions, std::vector<int> ids) : ids_(std::move(ids)) {
  points_.reserve(ids_.size());
  for (int id : ids_) points_.push_back(positions.at(id));
  std::vector<int> items(ids_.size());
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = static_cast<int>(i);
  nodes_.reserve(items.size());
  root_ = build(items, 0, static_cast<int>(items.size()), 0);
}

int NearestNodeIndex::build(std::vector<int>& items, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  Aabb box;
  for (int i = lo; i < hi; ++i) box.extend(points_[items[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);
  const int mid = (lo + hi) / 2;
  std::nth_element(items.begin() + lo, items.begin() + mid, items.begin() + hi,
                   [this, axis](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({items[mid], axis, -1, -1, box});
  const int left = build(items, lo, mid, depth + 1);
  const int right = build(items, mid + 1, hi, depth + 1);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void NearestNodeIndex::search(int node, const Vec3& p, double& best2, int& best) const {
  if (node < 0) return;
  const KdNode& k = nodes_[node];
  // Strict comparison: a subtree at exactly the best distance may hold a
  // smaller id.
  const Vec3 gap = (k.box.min - p).cwiseMax(p - k.box.max).cwiseMax(0.0);
  if (gap.squaredNorm() > best2) return;
  const Vec3& q = points_[k.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best2 || (d2 == best2 && ids_[k.point] < best)) {
    best2 = d2;
    best = ids_[k.point];
  }
  const double diff = p[k.axis] - q[k.axis];
  const int near = diff < 0 ? k.left : k.right;
  const int far = diff < 0 ? k.right : k.left;
  search(near, p, best2, best);
  search(far, p, best2, best);
}

int NearestNodeIndex::nearest(const Vec3& p) const {
  double best2 = std::numeric_limits<double>::infinity();
  int best = -1;
  search(root_, p, best2, best);
  return best;
}

int nearest_exhaustive(const std::vector<Vec3>& positions, const std::vector<int>& ids, const Vec3& p) {
  double best2 = std::numeric_limits<double>::infinity();
  int best = -1;
  for (int id : ids) {
    const double d2 = (p - positions[id]).squaredNorm();
    if (d2 < best2 || (d2 == best2 && id < best)) {
      best2 = d2;
      best = id;
    }
  }
  return best;
}

SegmentationMap segment(const TetComplex& complex, const MedialAxis& axis, const BucketGrid& surface,
                        std::string label) {
  const auto ids = axis.nodes();
  if (ids.empty()) throw ValidationError("cannot segment against an empty axis");
  const NearestNodeIndex index(axis.trees.front().positions(), ids);

  SegmentationMap map;
  map.label = std::move(label);
  const int n = static_cast<int>(complex.cells.size());
  map.assignment.resize(n);
  map.cell_volume.resize(n);
  map.cell_surface_area.assign(n, 0.0);
  map.node.assign(axis.capacity(), {});

  const double tolerance = 1e-7 * surface.bounds().diagonal();
  for (const BoundaryFace& f : complex.boundary_faces) {
    const Vec3 &a = complex.vertices[f.vertices[0]], &b = complex.vertices[f.vertices[1]],
               &c = complex.vertices[f.vertices[2]];
    if (surface.distance_to_surface((a + b + c) / 3.0) <= tolerance) {
      map.cell_surface_area[f.cell] += triangle_area(a, b, c);
    }
  }
  for (int c = 0; c < n; ++c) {
    const int node = index.nearest(complex.centroid(c));
    map.assignment[c] = node;
    map.cell_volume[c] = complex.volume(c);
    NodeAggregate& agg = map.node[node];
    ++agg.cells;
    agg.volume += map.cell_volume[c];
    agg.surface_area += map.cell_surface_area[c];
    map.total_volume += map.cell_volume[c];
    map.total_surface_area += map.cell_surface_area[c];
  }
  return map;
}

std::vector<NodeAggregate> subtree_aggregates(const SegmentationMap& map, const MedialAxis& axis) {
  std::vector<NodeAggregate> out = map.node;
  for (const SkeletonTree& t : axis.trees) {
    auto order = t.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (*it == t.root()) continue;
      NodeAggregate& p = out[t.parent(*it)];
      p.cells += out[*it].cells;
      p.volume += out[*it].volume;
      p.surface_area += out[*it].surface_area;
    }
  }
  return out;
}

std::vector<BranchProperties> mass_properties(const SegmentationMap& map, const MedialAxis& axis,
                                              const BucketGrid* artery) {
  std::vector<BranchProperties> out(axis.branches.size());
  for (const Branch& b : axis.branches) {
    BranchProperties& p = out[b.id];
    p.branch = b.id;
    p.length = b.length;
    if (artery) {
      double sum = 0.0;
      for (int v : b.nodes) sum += artery->distance_to_surface(axis.trees[b.component].position(v));
      p.thickness = sum / static_cast<double>(b.nodes.size());
    }
  }
  for (std::size_t c = 0; c < map.assignment.size(); ++c) {
    BranchProperties& p = out[axis.node_branch[map.assignment[c]]];
    ++p.cells;
    p.volume += map.cell_volume[c];
    p.surface_area += map.cell_surface_area[c];
  }
  return out;
}

ObstructionResult obstruction_query(const MedialAxis& axis, const SegmentationMap& artery,
                                    const SegmentationMap& territory, int picked) {
  const int tree = axis.tree_of(picked);
  if (tree < 0) throw ValidationError("node " + std::to_string(picked) + " is not on the medial axis");
  const SkeletonTree& t = axis.trees[tree];
  ObstructionResult r;
  r.picked = picked;
  std::vector<char> below(axis.capacity(), 0);
  std::vector<int> stack{picked};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    below[v] = 1;
    r.downstream.push_back(v);
    for (int c : t.children(v)) stack.push_back(c);
  }
  std::sort(r.downstream.begin(), r.downstream.end());
  for (std::size_t c = 0; c < artery.assignment.size(); ++c) {
    if (below[artery.assignment[c]]) {
      r.artery_cells.push_back(static_cast<int>(c));
      r.artery_volume += artery.cell_volume[c];
    }
  }
  for (std::size_t c = 0; c < territory.assignment.size(); ++c) {
    if (below[territory.assignment[c]]) {
      r.territory_cells.push_back(static_cast<int>(c));
      r.territory_volume += territory.cell_volume[c];
      r.territory_surface_area += territory.cell_surface_area[c];
    }
  }
  return r;
}

ClippedCells section_clip(const TetComplex& complex, const SegmentationMap& map, const Vec3& point,
                          const Vec3& normal) {
  const int n = static_cast<int>(complex.cells.size());
  std::vector<char> keep(n, 0);
  for (int c = 0; c < n; ++c) keep[c] = (complex.centroid(c) - point).dot(normal) >= 0.0;
  ClippedCells out;
  for (int c = 0; c < n; ++c) {
    if (!keep[c]) continue;
    out.cells.push_back(c);
    out.labels.push_back(map.assignment[c]);
    out.volume += complex.volume(c);
    for (int k = 0; k < 4; ++k) {
      const int d = complex.adjacency[c][k];
      if (d >= 0 && !keep[d]) out.cut_faces.push_back({c, k});
    }
  }
  return out;
}

}  // namespace tubeskel
