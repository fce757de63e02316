#include "tubeskel/axis_refinement.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/tree_extraction.hpp"

#include <algorithm>
#include <numeric>

namespace tubeskel {

std::vector<char> classify_nodes(const SkeletonTree& tree, const BucketGrid& grid, std::uint64_t seed,
                                 int* fallbacks) {
  std::vector<char> inside(tree.capacity(), 0);
  if (!grid.contains(tree.position(tree.root()), seed)) {
    throw ValidationError("root node " + std::to_string(tree.root()) + " lies outside the surface");
  }
  int fallback_count = 0;
  for (int v : tree.preorder()) {
    if (v == tree.root()) {
      inside[v] = 1;
      continue;
    }
    const int p = tree.parent(v);
    const auto crossings = grid.crossings(tree.position(p), tree.position(v));
    if (crossings) {
      inside[v] = static_cast<char>(inside[p] ^ (*crossings & 1));
    } else {
      inside[v] = grid.contains(tree.position(v), seed);
      ++fallback_count;
    }
  }
  if (fallbacks) *fallbacks += fallback_count;
  return inside;
}

SkeletonTree remove_outrageous(const SkeletonTree& tree, const BucketGrid& grid, RefinementReport* report,
                               std::uint64_t seed) {
  int fallbacks = 0;
  const auto inside = classify_nodes(tree, grid, seed, &fallbacks);
  SkeletonTree out = tree;
  int removed = 0;

  std::vector<int> frontier;
  for (int leaf : out.leaves()) {
    if (!inside[leaf]) frontier.push_back(leaf);
  }
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    const int p = out.parent(v);
    out.remove_leaf(v);
    ++removed;
    if (!inside[p] && p != out.root() && out.children(p).empty()) frontier.push_back(p);
  }
  // Outside nodes left now have inside descendants.
  for (int v : tree.preorder()) {
    if (inside[v] || !out.contains(v)) continue;
    const int p = out.parent(v);
    std::vector<double> weights;
    for (int c : out.children(v)) weights.push_back((out.position(p) - out.position(c)).norm());
    out.splice_out(v, weights);
    ++removed;
  }

  if (report) {
    report->initial_nodes = tree.size();
    report->removed_outrageous = removed;
    report->after_outrageous = out.size();
    report->parity_fallbacks += fallbacks;
  }
  return out;
}

SkeletonTree shave_hairs(const SkeletonTree& tree, std::optional<double> epsilon, RefinementReport* report) {
  const auto queue = leaf_queue(tree);
  std::vector<double> deltas;
  deltas.reserve(queue.size());
  SubtreeDistanceTracker tracker(tree);
  std::vector<int> segment;
  // Walks up from v to the first node for which `present` holds and returns
  // the nodes below it, top first.
  const auto new_segment = [&tree, &segment](int v, const auto& present) {
    segment.clear();
    for (; !present(v); v = tree.parent(v)) segment.push_back(v);
    std::reverse(segment.begin(), segment.end());
  };
  for (const LeafPath& lp : queue) {
    new_segment(lp.leaf, [&tracker](int v) { return tracker.contains(v); });
    double delta = 0.0;
    for (int v : segment) delta += tracker.add(v);
    deltas.push_back(delta);
  }
  const double eps = epsilon ? *epsilon
                     : deltas.empty()
                         ? 0.0
                         : std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());

  SkeletonTree out(tree.positions(), tree.root());
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (i > 0 && !(deltas[i] >= eps)) continue;
    new_segment(queue[i].leaf, [&out](int v) { return out.contains(v); });
    for (int v : segment) out.attach(v, tree.parent(v), tree.weight(v));
  }

  if (report) {
    report->epsilon = eps;
    report->epsilon_auto = !epsilon.has_value();
    report->deltas = deltas;
    report->removed_hair = tree.size() - out.size();
    report->after_shave = out.size();
  }
  return out;
}

double discrete_curvature(const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Vec3 a = p2 - p1, b = p3 - p2;
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("discrete curvature needs distinct consecutive points");
  return (b / nb - a / na).norm();
}

namespace {

bool distinct(const Vec3& a, const Vec3& b) { return a != b; }

// Window test on n1..n4; windows with coincident neighbors never fire.
bool bumpy(const SkeletonTree& t, int n1, int n2, int n3, int n4, double alpha1, double alpha2) {
  const Vec3 &p1 = t.position(n1), &p2 = t.position(n2), &p3 = t.position(n3), &p4 = t.position(n4);
  if (!distinct(p1, p2) || !distinct(p2, p3) || !distinct(p3, p4)) return false;
  const double d123 = discrete_curvature(p1, p2, p3);
  const double d234 = discrete_curvature(p2, p3, p4);
  return d123 > alpha1 && std::abs(d234 - d123) > alpha2;
}

}  // namespace

SkeletonTree straighten_bumpy(const SkeletonTree& tree, const SkeletonGraph& graph, double alpha1, double alpha2,
                              RefinementReport* report) {
  SkeletonTree out = tree;
  int removed = 0;
  for (int leaf : tree.leaves()) {
    std::vector<int> path = out.path_from_root(leaf);
    std::size_t i = 0;
    while (i + 3 < path.size()) {
      const int n1 = path[i], n2 = path[i + 1], n3 = path[i + 2], n4 = path[i + 3];
      if (out.children(n2).size() == 1 && bumpy(out, n1, n2, n3, n4, alpha1, alpha2)) {
        out.splice_out(n2, {graph.weight_between(out.position(n1), out.position(n3))});
        path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        ++removed;
        continue;
      }
      ++i;
    }
  }
  if (report) {
    report->removed_bumpy = removed;
    report->final_nodes = out.size();
  }
  return out;
}

std::vector<int> outside_nodes(const SkeletonTree& tree, const BucketGrid& grid, std::uint64_t seed) {
  std::vector<int> out;
  for (int v : tree.preorder()) {
    if (!grid.contains(tree.position(v), seed)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tubeskel
