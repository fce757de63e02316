#include "tubeskel/tree_extraction.hpp"

#include "tubeskel/errors.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>

namespace tubeskel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using HeapEntry = std::pair<double, int>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

// Single-source Dijkstra from a leaf, stopping at the first settled tree node.
// Scratch arrays are stamped so repeated queries cost only the explored ball.
class BackwardSearch {
 public:
  explicit BackwardSearch(const SkeletonGraph& graph)
      : graph_(graph), dist_(graph.size(), kInf), prev_(graph.size(), -1), seen_(graph.size(), 0) {}

  // Returns the path from `source` to the nearest tree node (inclusive) and
  // its length.
  std::pair<std::vector<int>, double> run(int source, const SkeletonTree& tree) {
    ++stamp_;
    MinHeap heap;
    touch(source);
    dist_[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (d > dist_[v]) continue;
      if (tree.contains(v)) {
        std::vector<int> path;
        for (int u = v; u >= 0; u = prev_[u]) path.push_back(u);
        std::reverse(path.begin(), path.end());  // source first
        return {path, d};
      }
      for (const auto& inc : graph_.neighbors(v)) {
        touch(inc.node);
        const double nd = d + graph_.links()[inc.link].weight;
        if (nd < dist_[inc.node]) {
          dist_[inc.node] = nd;
          prev_[inc.node] = v;
          heap.push({nd, inc.node});
        }
      }
    }
    throw NumericError("leaf " + std::to_string(source) + " cannot reach the tree");
  }

 private:
  void touch(int v) {
    if (seen_[v] != stamp_) {
      seen_[v] = stamp_;
      dist_[v] = kInf;
      prev_[v] = -1;
    }
  }

  const SkeletonGraph& graph_;
  std::vector<double> dist_;
  std::vector<int> prev_;
  std::vector<int> seen_;
  int stamp_ = 0;
};

double link_weight(const SkeletonGraph& graph, int a, int b) {
  for (const auto& inc : graph.neighbors(a)) {
    if (inc.node == b) return graph.links()[inc.link].weight;
  }
  throw std::logic_error("nodes " + std::to_string(a) + " and " + std::to_string(b) + " are not linked");
}

std::vector<Vec3> positions_of(const SkeletonGraph& graph) {
  std::vector<Vec3> p(graph.size());
  for (int v = 0; v < graph.size(); ++v) p[v] = graph.position(v);
  return p;
}

}  // namespace

SkeletonTree forward_spt(const SkeletonGraph& graph, int root) {
  if (root < 0 || root >= graph.size()) throw ValidationError("root " + std::to_string(root) + " is not a graph node");
  std::vector<double> dist(graph.size(), kInf);
  std::vector<int> prev(graph.size(), -1);
  std::vector<double> via(graph.size(), 0.0);
  std::vector<int> order;
  MinHeap heap;
  dist[root] = 0.0;
  heap.push({0.0, root});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    order.push_back(v);
    for (const auto& inc : graph.neighbors(v)) {
      const double w = graph.links()[inc.link].weight;
      const double nd = d + w;
      // Equal distances keep the earlier settled parent, which has the
      // smaller (distance, id) key.
      if (nd < dist[inc.node]) {
        dist[inc.node] = nd;
        prev[inc.node] = v;
        via[inc.node] = w;
        heap.push({nd, inc.node});
      }
    }
  }
  SkeletonTree tree(positions_of(graph), root);
  for (int v : order) {
    if (v != root) tree.attach(v, prev[v], via[v]);
  }
  return tree;
}

std::vector<LeafPath> leaf_queue(const SkeletonTree& tree) {
  const auto depth = tree.depths();
  std::vector<LeafPath> q;
  for (int leaf : tree.leaves()) q.push_back({leaf, depth[leaf]});
  std::sort(q.begin(), q.end(), [](const LeafPath& a, const LeafPath& b) {
    return a.length != b.length ? a.length > b.length : a.leaf < b.leaf;
  });
  return q;
}

SkeletonTree extract_tree(const SkeletonGraph& graph, int root, ExtractionTrace* trace) {
  const SkeletonTree spt = forward_spt(graph, root);
  const auto queue = leaf_queue(spt);
  SkeletonTree tree(spt.positions(), root);
  // Each concatenated path, listed from its attachment point outward.
  std::vector<std::pair<int, std::vector<int>>> concatenations;
  std::vector<int> skipped;

  if (!queue.empty()) {
    const auto first = spt.path_from_root(queue.front().leaf);
    for (std::size_t i = 1; i < first.size(); ++i) tree.attach(first[i], first[i - 1], spt.weight(first[i]));
    concatenations.push_back({queue.front().leaf, first});
  }
  BackwardSearch search(graph);
  for (std::size_t q = 1; q < queue.size(); ++q) {
    const int leaf = queue[q].leaf;
    if (tree.contains(leaf)) {
      skipped.push_back(leaf);
      continue;
    }
    auto [path, length] = search.run(leaf, tree);
    std::reverse(path.begin(), path.end());  // tree node first
    for (std::size_t i = 1; i < path.size(); ++i) {
      tree.attach(path[i], path[i - 1], link_weight(graph, path[i - 1], path[i]));
    }
    concatenations.push_back({leaf, std::move(path)});
  }

  if (trace) {
    *trace = {};
    trace->skipped_leaves = std::move(skipped);
    SubtreeDistanceTracker tracker(tree);
    trace->initial_delta = tracker.distance();
    const auto depth = tree.depths();
    for (std::size_t i = 0; i < concatenations.size(); ++i) {
      const auto& [leaf, nodes] = concatenations[i];
      ConcatenationStep step;
      step.iteration = static_cast<int>(i) + 1;
      step.leaf = leaf;
      step.path_length = depth[nodes.back()] - depth[nodes.front()];
      for (int v : nodes) {
        if (!tracker.contains(v)) step.reduction += tracker.add(v);
      }
      step.delta = tracker.distance();
      trace->steps.push_back(step);
    }
  }
  return tree;
}

SubtreeDistanceTracker::SubtreeDistanceTracker(const SkeletonTree& full)
    : full_(full), size_(full.capacity(), 0), in_(full.capacity(), 0) {
  in_[full.root()] = 1;
  const auto depth = full.depths();
  const auto order = full.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    distance_ += depth[*it];
    size_[*it] += 1;
    if (*it != full.root()) size_[full.parent(*it)] += size_[*it];
  }
}

double SubtreeDistanceTracker::add(int n) {
  if (!full_.contains(n)) throw std::logic_error("node " + std::to_string(n) + " is not in the full tree");
  if (in_[n]) return 0.0;
  if (!in_[full_.parent(n)]) throw std::logic_error("node " + std::to_string(n) + " added before its parent");
  // Parent-first insertion means no descendant of n is in the subtree yet, so
  // each of them now measures its distance to n instead of n's parent.
  in_[n] = 1;
  const double reduction = full_.weight(n) * static_cast<double>(size_[n]);
  distance_ -= reduction;
  return reduction;
}

double SubtreeDistanceTracker::add_path(const std::vector<int>& root_path) {
  double reduction = 0.0;
  for (int v : root_path) reduction += add(v);
  return reduction;
}

double tree_distance(const SkeletonTree& sub, const SkeletonTree& full) {
  if (sub.capacity() != full.capacity()) throw ValidationError("trees index different node tables");
  for (int v : sub.preorder()) {
    if (!full.contains(v)) throw ValidationError("node " + std::to_string(v) + " of the subtree is not in the tree");
    if (v == sub.root()) continue;
    const int p = sub.parent(v);
    if (full.parent(v) != p && full.parent(p) != v) {
      throw ValidationError("link " + std::to_string(p) + "-" + std::to_string(v) + " is not a link of the tree");
    }
  }
  // Multi-source Dijkstra over the full tree seeded with the subtree.
  std::vector<double> dist(full.capacity(), kInf);
  MinHeap heap;
  for (int v : sub.preorder()) {
    dist[v] = 0.0;
    heap.push({0.0, v});
  }
  double total = 0.0;
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    total += d;
    const auto relax = [&, d = d](int u, double w) {
      if (d + w < dist[u]) {
        dist[u] = d + w;
        heap.push({d + w, u});
      }
    };
    if (v != full.root()) relax(full.parent(v), full.weight(v));
    for (int c : full.children(v)) relax(c, full.weight(c));
  }
  return total;
}

void write_trace_csv(const ExtractionTrace& trace, std::ostream& out) {
  out << "iteration,leaf,path_length,delta,reduction\n";
  out.precision(17);
  for (const auto& s : trace.steps) {
    out << s.iteration << ',' << s.leaf << ',' << s.path_length << ',' << s.delta << ',' << s.reduction << '\n';
  }
}

}  // namespace tubeskel
