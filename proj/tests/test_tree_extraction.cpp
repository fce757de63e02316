#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/tetrahedralize.hpp"
#include "tubeskel/tree_extraction.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace tubeskel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec3> dummy_positions(int n) {
  std::vector<Vec3> p;
  for (int i = 0; i < n; ++i) p.emplace_back(i, 0, 0);
  return p;
}

// Trunk R=0 - T1..T8 with unit links; E = T8 is the far end. At each trunk
// node T_h, h = 2..5, a wall motif: X_h one unit off T_h, Y_h one unit off
// X_h, and a shortcut R - W_h - Y_h of length h + 1.5. The forward tree
// reaches Y_h through the shortcut and so branches at the root; the backward
// path of Y_h goes through X_h instead, which makes X_h's own turn empty.
struct MotifGraph {
  SkeletonGraph graph;
  static int trunk(int h) { return h; }
  static int x(int h) { return 9 + 3 * (h - 2); }
  static int y(int h) { return x(h) + 1; }
  static int w(int h) { return x(h) + 2; }
};

MotifGraph motif_graph() {
  std::vector<GraphLink> links;
  for (int h = 1; h <= 8; ++h) links.push_back({h - 1, h, 1.0});
  for (int h = 2; h <= 5; ++h) {
    links.push_back({MotifGraph::trunk(h), MotifGraph::x(h), 1.0});
    links.push_back({MotifGraph::x(h), MotifGraph::y(h), 1.0});
    links.push_back({0, MotifGraph::w(h), 1.0});
    links.push_back({MotifGraph::w(h), MotifGraph::y(h), h + 0.5});
  }
  return {SkeletonGraph::from_weighted_links(dummy_positions(21), links)};
}

SkeletonGraph path_graph(const std::vector<double>& weights) {
  std::vector<GraphLink> links;
  for (int i = 0; i < static_cast<int>(weights.size()); ++i) links.push_back({i, i + 1, weights[i]});
  return SkeletonGraph::from_weighted_links(dummy_positions(static_cast<int>(weights.size()) + 1), links);
}

// Minimum over all simple paths from source, by exhaustive DFS.
std::vector<double> brute_force_distances(const SkeletonGraph& g, int source) {
  std::vector<double> best(g.size(), kInf);
  std::vector<char> on_path(g.size(), 0);
  std::function<void(int, double)> walk = [&](int v, double d) {
    best[v] = std::min(best[v], d);
    on_path[v] = 1;
    for (const auto& inc : g.neighbors(v)) {
      if (!on_path[inc.node]) walk(inc.node, d + g.links()[inc.link].weight);
    }
    on_path[v] = 0;
  };
  walk(source, 0.0);
  return best;
}

// All-pairs shortest paths over the tree's links.
std::vector<std::vector<double>> floyd_warshall(const SkeletonTree& t) {
  const int n = t.capacity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (int v : t.preorder()) {
    d[v][v] = 0.0;
    if (v != t.root()) d[v][t.parent(v)] = d[t.parent(v)][v] = t.weight(v);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

SkeletonTree random_tree(int n, std::mt19937_64& rng) {
  SkeletonTree t(dummy_positions(n), 0);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  for (int v = 1; v < n; ++v) t.attach(v, static_cast<int>(rng() % v), weight(rng));
  return t;
}

// The subtree of `full` spanned by the root paths of the given nodes.
SkeletonTree spanned_subtree(const SkeletonTree& full, const std::vector<int>& tips) {
  SkeletonTree sub(full.positions(), full.root());
  for (int tip : tips) {
    for (int v : full.path_from_root(tip)) {
      if (!sub.contains(v)) sub.attach(v, full.parent(v), full.weight(v));
    }
  }
  return sub;
}

SkeletonGraph cylinder_graph() {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {});
  return build_graph(delaunay_interior(fx.mesh));
}

TEST(ForwardSpt, PathGraph) {
  const SkeletonGraph g = path_graph({1.5, 2.0});
  const SkeletonTree t = forward_spt(g, 0);
  EXPECT_EQ(t.parent(1), 0);
  EXPECT_EQ(t.parent(2), 1);
  const auto d = t.depths();
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 1.5);
  EXPECT_EQ(d[2], 3.5);
}

TEST(ForwardSpt, DiamondMatchesPathEnumeration) {
  //      1 --- 3
  //    /  \  /   \
  //  0     X      5
  //    \  /  \   /
  //      2 --- 4
  std::vector<GraphLink> links{{0, 1, 1.0}, {0, 2, 2.5}, {1, 3, 4.0}, {1, 4, 1.5}, {2, 3, 0.5},
                               {2, 4, 3.0}, {3, 5, 1.0}, {4, 5, 2.75}, {1, 2, 0.75}};
  const SkeletonGraph g = SkeletonGraph::from_weighted_links(dummy_positions(6), links);
  const auto expected = brute_force_distances(g, 0);
  const auto depth = forward_spt(g, 0).depths();
  for (int v = 0; v < 6; ++v) EXPECT_DOUBLE_EQ(depth[v], expected[v]) << "node " << v;
}

TEST(ForwardSpt, OptimalityOnYTube) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {});
  const SkeletonGraph g = build_graph(delaunay_interior(fx.mesh));
  const int root = select_root(g).roots[0];
  const SkeletonTree t = forward_spt(g, root);
  const auto depth = t.depths();
  double total = 0.0;
  for (const GraphLink& l : g.links()) total += l.weight;
  EXPECT_EQ(t.size(), g.size());
  for (int v : t.preorder()) {
    EXPECT_LE(depth[v], total);
    if (v != root) EXPECT_DOUBLE_EQ(depth[v], depth[t.parent(v)] + t.weight(v));
  }
  // No link offers a shortcut.
  for (const GraphLink& l : g.links()) {
    EXPECT_LE(depth[l.b], depth[l.a] + l.weight + 1e-12);
    EXPECT_LE(depth[l.a], depth[l.b] + l.weight + 1e-12);
  }
}

TEST(LeafQueue, LongestFirstTiesBySmallerId) {
  SkeletonTree t(dummy_positions(5), 0);
  t.attach(3, 0, 2.0);
  t.attach(1, 0, 2.0);
  t.attach(2, 0, 5.0);
  t.attach(4, 2, 0.5);
  const auto q = leaf_queue(t);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0].leaf, 4);
  EXPECT_EQ(q[0].length, 5.5);
  EXPECT_EQ(q[1].leaf, 1);
  EXPECT_EQ(q[2].leaf, 3);
}

TEST(ExtractTree, PathGraphEqualsForwardTree) {
  const SkeletonGraph g = path_graph({1.0, 0.5, 2.0, 0.25});
  const SkeletonTree spt = forward_spt(g, 0);
  const SkeletonTree t = extract_tree(g, 0);
  EXPECT_EQ(t.size(), spt.size());
  for (int v = 1; v < g.size(); ++v) EXPECT_EQ(t.parent(v), spt.parent(v));
}

TEST(ExtractTree, MotifGraphFixesPrematureBranching) {
  const MotifGraph m = motif_graph();
  const SkeletonTree spt = forward_spt(m.graph, 0);
  const auto spt_leaves = spt.leaves();
  ASSERT_EQ(spt_leaves.size(), 9u);
  for (int h = 2; h <= 5; ++h) EXPECT_EQ(spt.parent(MotifGraph::y(h)), MotifGraph::w(h));

  ExtractionTrace trace;
  const SkeletonTree t = extract_tree(m.graph, 0, &trace);
  t.check_invariants();
  for (int h = 1; h <= 8; ++h) EXPECT_EQ(t.parent(h), h - 1);
  for (int h = 2; h <= 5; ++h) {
    EXPECT_EQ(t.parent(MotifGraph::x(h)), MotifGraph::trunk(h));
    EXPECT_EQ(t.parent(MotifGraph::y(h)), MotifGraph::x(h));
    EXPECT_FALSE(t.contains(MotifGraph::w(h)));
  }
  EXPECT_EQ(t.size(), 9 + 8);

  // Queue order E, Y5, X5, Y4, X4, ...; every X_h was already covered.
  std::vector<int> skipped = trace.skipped_leaves;
  std::sort(skipped.begin(), skipped.end());
  EXPECT_EQ(skipped, (std::vector<int>{MotifGraph::x(2), MotifGraph::x(3), MotifGraph::x(4), MotifGraph::x(5)}));
  // Iteration 1 is T_1 itself.
  ASSERT_EQ(trace.steps.size(), 5u);
  EXPECT_EQ(trace.steps[0].leaf, 8);
  EXPECT_DOUBLE_EQ(trace.steps[0].path_length, 8.0);
  for (int h = 5; h >= 2; --h) {
    const ConcatenationStep& s = trace.steps[6 - h];
    EXPECT_EQ(s.leaf, MotifGraph::y(h));
    EXPECT_DOUBLE_EQ(s.path_length, 2.0);
  }
}

TEST(ExtractTree, TraceMatchesTreeDistanceOracle) {
  const SkeletonGraph g = cylinder_graph();
  const int root = select_root(g).roots[0];
  ExtractionTrace trace;
  const SkeletonTree t = extract_tree(g, root, &trace);
  t.check_invariants();
  ASSERT_FALSE(trace.steps.empty());

  // T_1 is the longest forward path, then one backward path per step.
  const int first_leaf = leaf_queue(forward_spt(g, root)).front().leaf;
  std::vector<int> tips{first_leaf};
  double previous = trace.initial_delta;
  EXPECT_NEAR(trace.initial_delta, tree_distance(SkeletonTree(t.positions(), root), t), 1e-9 * previous);
  for (const ConcatenationStep& s : trace.steps) {
    tips.push_back(s.leaf);
    const double oracle = tree_distance(spanned_subtree(t, tips), t);
    EXPECT_NEAR(s.delta, oracle, 1e-9 * trace.initial_delta) << "iteration " << s.iteration;
    EXPECT_GT(s.reduction, 0.0);
    EXPECT_LT(s.delta, previous);
    EXPECT_NEAR(s.reduction, previous - s.delta, 1e-9 * trace.initial_delta);
    previous = s.delta;
  }
  EXPECT_NEAR(trace.steps.back().delta, 0.0, 1e-9 * trace.initial_delta);
}

TEST(ExtractTree, Deterministic) {
  const SkeletonGraph g = cylinder_graph();
  const int root = select_root(g).roots[0];
  const SkeletonTree a = extract_tree(g, root);
  const SkeletonTree b = extract_tree(g, root);
  ASSERT_EQ(a.size(), b.size());
  for (int v : a.preorder()) {
    EXPECT_EQ(a.parent(v), b.parent(v));
    EXPECT_EQ(a.weight(v), b.weight(v));
  }
}

TEST(TreeDistance, HandCases) {
  SkeletonTree full(dummy_positions(3), 0);
  full.attach(1, 0, 1.0);
  full.attach(2, 1, 1.0);
  EXPECT_EQ(tree_distance(full, full), 0.0);
  EXPECT_EQ(tree_distance(SkeletonTree(full.positions(), 0), full), 3.0);
}

TEST(TreeDistance, RandomSubtreesMatchFloydWarshall) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const SkeletonTree full = random_tree(50, rng);
    const auto d = floyd_warshall(full);
    std::vector<int> tips;
    for (int k = 0; k < 4; ++k) tips.push_back(static_cast<int>(rng() % 50));
    const SkeletonTree sub = spanned_subtree(full, tips);
    double expected = 0.0;
    for (int v = 0; v < 50; ++v) {
      double nearest = kInf;
      for (int s : sub.preorder()) nearest = std::min(nearest, d[v][s]);
      expected += nearest;
    }
    EXPECT_NEAR(tree_distance(sub, full), expected, 1e-9 * expected);

    SubtreeDistanceTracker tracker(full);
    for (int tip : tips) tracker.add_path(full.path_from_root(tip));
    EXPECT_NEAR(tracker.distance(), expected, 1e-9 * expected);
  }
}

TEST(TreeDistance, RejectsForeignSubtree) {
  SkeletonTree full(dummy_positions(3), 0);
  full.attach(1, 0, 1.0);
  full.attach(2, 1, 1.0);
  SkeletonTree other(full.positions(), 0);
  other.attach(2, 0, 1.0);  // 0-2 is not a link of full
  EXPECT_THROW(tree_distance(other, full), ValidationError);
}

TEST(SubtreeDistanceTracker, RequiresParentFirst) {
  SkeletonTree full(dummy_positions(3), 0);
  full.attach(1, 0, 1.0);
  full.attach(2, 1, 1.0);
  SubtreeDistanceTracker tracker(full);
  EXPECT_THROW(tracker.add(2), std::logic_error);
  EXPECT_DOUBLE_EQ(tracker.add(1), 2.0);
  EXPECT_DOUBLE_EQ(tracker.add(1), 0.0);
  EXPECT_DOUBLE_EQ(tracker.distance(), 1.0);
}

TEST(TraceCsv, HeaderAndRows) {
  ExtractionTrace trace;
  extract_tree(motif_graph().graph, 0, &trace);
  std::ostringstream out;
  write_trace_csv(trace, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,leaf,path_length,delta,reduction");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(trace.steps.size()));
}

}  // namespace
}  // namespace tubeskel
