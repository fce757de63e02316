#include "test_support.hpp"

#include "tubeskel/axis_refinement.hpp"
#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/tetrahedralize.hpp"
#include "tubeskel/tree_extraction.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace tubeskel {
namespace {

// Builds a tree from (position, parent) pairs; node 0 is the root and link
// weights are Euclidean.
SkeletonTree tree_of(const std::vector<Vec3>& pos, const std::vector<int>& parent) {
  SkeletonTree t(pos, 0);
  for (int v = 1; v < static_cast<int>(pos.size()); ++v) t.attach(v, parent[v], (pos[v] - pos[parent[v]]).norm());
  return t;
}

std::vector<int> members(const SkeletonTree& t) {
  auto m = t.preorder();
  std::sort(m.begin(), m.end());
  return m;
}

bool same_tree(const SkeletonTree& a, const SkeletonTree& b) {
  if (members(a) != members(b) || a.root() != b.root()) return false;
  for (int v : a.preorder()) {
    if (v != a.root() && (a.parent(v) != b.parent(v) || a.weight(v) != b.weight(v))) return false;
  }
  return true;
}

SkeletonTree random_tree(int n, std::mt19937_64& rng) {
  SkeletonTree t(std::vector<Vec3>(n, Vec3::Zero()), 0);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  for (int v = 1; v < n; ++v) t.attach(v, static_cast<int>(rng() % v), weight(rng));
  return t;
}

// Axis of the default cylinder, root at z=0.5, plus a short side branch.
struct CylinderCase {
  Fixture fx = generate_fixture(FixtureKind::kCylinder, {});
  std::vector<Vec3> pos;
  std::vector<int> parent;
  CylinderCase() {
    for (int k = 0; k < 10; ++k) {
      pos.emplace_back(0, 0, 0.5 + k);
      parent.push_back(k - 1);
    }
    pos.emplace_back(0.5, 0, 5.5);
    parent.push_back(5);
  }
};

TEST(RemoveOutrageous, TreeInsideIsUnchanged) {
  const CylinderCase c;
  const BucketGrid grid(c.fx.mesh);
  const SkeletonTree t = tree_of(c.pos, c.parent);
  RefinementReport report;
  const SkeletonTree out = remove_outrageous(t, grid, &report);
  EXPECT_TRUE(same_tree(out, t));
  EXPECT_EQ(report.removed_outrageous, 0);
  EXPECT_EQ(report.initial_nodes, 11);
  EXPECT_EQ(report.after_outrageous, 11);
}

TEST(RemoveOutrageous, DisplacedLeafIsTheOnlyRemoval) {
  CylinderCase c;
  c.pos.back() = Vec3(3, 0, 5.5);
  const BucketGrid grid(c.fx.mesh);
  const SkeletonTree t = tree_of(c.pos, c.parent);
  const SkeletonTree out = remove_outrageous(t, grid);
  EXPECT_EQ(out.size(), 10);
  EXPECT_FALSE(out.contains(10));
}

TEST(RemoveOutrageous, OutsideChainIsPeeledBackToTheSurface) {
  CylinderCase c;
  c.pos.back() = Vec3(2, 0, 5.5);
  c.pos.emplace_back(3, 0, 5.5);
  c.parent.push_back(10);
  const BucketGrid grid(c.fx.mesh);
  const SkeletonTree out = remove_outrageous(tree_of(c.pos, c.parent), grid);
  EXPECT_EQ(members(out), (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(RemoveOutrageous, InteriorOutsideNodeIsSplicedOut) {
  CylinderCase c;
  c.pos[5] = Vec3(2, 0, 5.5);
  const BucketGrid grid(c.fx.mesh);
  const SkeletonTree out = remove_outrageous(tree_of(c.pos, c.parent), grid);
  out.check_invariants();
  EXPECT_FALSE(out.contains(5));
  EXPECT_EQ(out.parent(6), 4);
  EXPECT_EQ(out.parent(10), 4);
  EXPECT_DOUBLE_EQ(out.weight(6), 2.0);
}

TEST(RemoveOutrageous, RootOutsideIsRejected) {
  CylinderCase c;
  c.pos[0] = Vec3(0, 0, -1);
  const BucketGrid grid(c.fx.mesh);
  EXPECT_THROW(remove_outrageous(tree_of(c.pos, c.parent), grid), ValidationError);
}

TEST(RemoveOutrageous, NoisyYTubeEndsFullyInside) {
  FixtureParams p;
  p.noise = 0.1;
  const Fixture fx = generate_fixture(FixtureKind::kYTube, p, 7);
  const SkeletonGraph g = build_graph(delaunay_interior(fx.mesh));
  const SkeletonTree tree = extract_tree(g, select_root(g).roots.at(0));
  const BucketGrid grid(fx.mesh);
  RefinementReport report;
  const SkeletonTree out = remove_outrageous(tree, grid, &report);
  out.check_invariants();
  EXPECT_EQ(report.initial_nodes - report.removed_outrageous, out.size());
  // Independent parity oracle: a differently sized grid and another ray seed.
  const BucketGrid oracle(fx.mesh, 0.3);
  for (int v : out.preorder()) EXPECT_TRUE(point_in_mesh(out.position(v), oracle, 99)) << "node " << v;
}

// Root R, a 50 + 50 trunk through M and a one-unit stub at M. The stub
// reduces the distance by 1 against a trunk reduction of 150 + 50.
SkeletonTree star_tree() {
  SkeletonTree t(std::vector<Vec3>(4, Vec3::Zero()), 0);
  t.attach(1, 0, 50.0);
  t.attach(2, 1, 50.0);
  t.attach(3, 1, 1.0);
  return t;
}

TEST(ShaveHairs, StubBelowMeanIsRemoved) {
  RefinementReport report;
  const SkeletonTree out = shave_hairs(star_tree(), std::nullopt, &report);
  EXPECT_EQ(members(out), (std::vector<int>{0, 1, 2}));
  ASSERT_EQ(report.deltas.size(), 2u);
  EXPECT_DOUBLE_EQ(report.deltas[0], 200.0);
  EXPECT_DOUBLE_EQ(report.deltas[1], 1.0);
  EXPECT_DOUBLE_EQ(report.epsilon, 100.5);
  EXPECT_TRUE(report.epsilon_auto);
  EXPECT_EQ(report.removed_hair, 1);
}

TEST(ShaveHairs, ThresholdIsInclusive) {
  EXPECT_EQ(shave_hairs(star_tree(), 1.0).size(), 4);
  EXPECT_EQ(shave_hairs(star_tree(), std::nextafter(1.0, 2.0)).size(), 3);
}

TEST(ShaveHairs, ZeroEpsilonKeepsEverything) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SkeletonTree t = random_tree(60, rng);
    EXPECT_TRUE(same_tree(shave_hairs(t, 0.0), t));
  }
}

TEST(ShaveHairs, PathIsKeptAtAnyEpsilon) {
  SkeletonTree t(std::vector<Vec3>(6, Vec3::Zero()), 0);
  for (int v = 1; v < 6; ++v) t.attach(v, v - 1, 0.5);
  EXPECT_TRUE(same_tree(shave_hairs(t), t));
  EXPECT_TRUE(same_tree(shave_hairs(t, 1e9), t));
}

TEST(ShaveHairs, HugeEpsilonKeepsOnlyTheLongestPath) {
  std::mt19937_64 rng(8);
  const SkeletonTree t = random_tree(80, rng);
  const auto depth = t.depths();
  int deepest = t.root();
  for (int v : t.preorder()) {
    if (depth[v] > depth[deepest]) deepest = v;
  }
  auto expected = t.path_from_root(deepest);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(members(shave_hairs(t, 1e9)), expected);
}

TEST(ShaveHairs, ReductionsArePositiveAndSumToTheRootDistance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const SkeletonTree t = random_tree(70, rng);
    RefinementReport report;
    shave_hairs(t, std::nullopt, &report);
    EXPECT_EQ(report.deltas.size(), t.leaves().size());
    double sum = 0.0;
    for (double d : report.deltas) {
      EXPECT_GT(d, 0.0);
      sum += d;
    }
    // With only the root present every node is as far as its depth.
    double depth_sum = 0.0;
    const auto depth = t.depths();
    for (int v : t.preorder()) depth_sum += depth[v];
    EXPECT_NEAR(sum, depth_sum, 1e-9 * depth_sum);
  }
}

TEST(ShaveHairs, InjectedHairsAreRemovedExactly) {
  const auto hairy = testing::hairy_centerline_tree(three_level_tree_segments(), 0.05, 100, 3);
  const SkeletonTree out = shave_hairs(hairy.tree);
  std::vector<int> removed;
  for (int v : hairy.tree.preorder()) {
    if (!out.contains(v)) removed.push_back(v);
  }
  std::sort(removed.begin(), removed.end());
  EXPECT_EQ(removed, hairy.hairs);
}

TEST(DiscreteCurvature, HandValues) {
  EXPECT_DOUBLE_EQ(discrete_curvature(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(discrete_curvature(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 2, 0)), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(discrete_curvature(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 0)), 2.0);
  EXPECT_THROW(discrete_curvature(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)), ValidationError);
  EXPECT_THROW(discrete_curvature(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)), ValidationError);
}

// Samples with chord length l on a circle of radius r.
std::vector<Vec3> circle_samples(double r, double l, int count) {
  const double step = 2.0 * std::asin(l / (2.0 * r));
  std::vector<Vec3> p;
  for (int k = 0; k < count; ++k) p.emplace_back(r * std::cos(k * step), r * std::sin(k * step), 1.0);
  return p;
}

TEST(DiscreteCurvature, CircleSamplesGiveChordOverRadius) {
  const auto p = circle_samples(5.0, 0.25, 3);
  EXPECT_NEAR(discrete_curvature(p[0], p[1], p[2]), 0.05, 0.01 * 0.05);
  for (double ratio : {0.01, 0.05, 0.1}) {
    const auto q = circle_samples(2.0, 2.0 * ratio, 3);
    EXPECT_NEAR(discrete_curvature(q[0], q[1], q[2]), ratio, 0.01 * ratio);
  }
}

SkeletonGraph graph_over(const std::vector<Vec3>& pos) { return SkeletonGraph::from_links(pos, {}); }

TEST(StraightenBumpy, CollinearPathIsUnchanged) {
  std::vector<Vec3> pos;
  std::vector<int> parent;
  for (int k = 0; k < 8; ++k) pos.emplace_back(k, 0, 0), parent.push_back(k - 1);
  const SkeletonTree t = tree_of(pos, parent);
  RefinementReport report;
  EXPECT_TRUE(same_tree(straighten_bumpy(t, graph_over(pos), 0.5, 0.5, &report), t));
  EXPECT_EQ(report.removed_bumpy, 0);
}

TEST(StraightenBumpy, PerpendicularOffsetIsRemoved) {
  const std::vector<Vec3> pos{Vec3(0, 0, 0), Vec3(1, 2, 0), Vec3(2, 0, 0), Vec3(3, 0, 0), Vec3(4, 0, 0)};
  const SkeletonTree t = tree_of(pos, {-1, 0, 1, 2, 3});
  // u12 = (1,2)/sqrt5, u23 = (1,-2)/sqrt5, u34 = (1,0).
  const double s5 = std::sqrt(5.0);
  const double d123 = 4.0 / s5;
  const double d234 = std::hypot(1.0 - 1.0 / s5, 2.0 / s5);
  ASSERT_NEAR(discrete_curvature(pos[0], pos[1], pos[2]), d123, 1e-12);
  ASSERT_NEAR(discrete_curvature(pos[1], pos[2], pos[3]), d234, 1e-12);
  ASSERT_GT(d123, 0.5);
  ASSERT_GT(std::abs(d234 - d123), 0.5);

  RefinementReport report;
  const SkeletonTree out = straighten_bumpy(t, graph_over(pos), 0.5, 0.5, &report);
  out.check_invariants();
  EXPECT_EQ(members(out), (std::vector<int>{0, 2, 3, 4}));
  EXPECT_EQ(out.parent(2), 0);
  EXPECT_DOUBLE_EQ(out.weight(2), 2.0);
  EXPECT_EQ(report.removed_bumpy, 1);
  EXPECT_EQ(report.final_nodes, 4);
}

TEST(StraightenBumpy, BranchNodeStays) {
  const std::vector<Vec3> pos{Vec3(0, 0, 0), Vec3(1, 2, 0), Vec3(2, 0, 0), Vec3(3, 0, 0), Vec3(1, 3, 0)};
  const SkeletonTree t = tree_of(pos, {-1, 0, 1, 2, 1});
  EXPECT_TRUE(same_tree(straighten_bumpy(t, graph_over(pos)), t));
}

TEST(StraightenBumpy, CircleSamplesAreKept) {
  for (double ratio : {0.01, 0.05, 0.1}) {
    const auto pos = circle_samples(3.0, 3.0 * ratio, 40);
    std::vector<int> parent;
    for (int k = 0; k < 40; ++k) parent.push_back(k - 1);
    const SkeletonTree t = tree_of(pos, parent);
    EXPECT_TRUE(same_tree(straighten_bumpy(t, graph_over(pos)), t)) << ratio;
  }
}

TEST(StraightenBumpy, NewLinkUsesTheGraphMetric) {
  const std::vector<Vec3> pos{Vec3(0, 0, 0), Vec3(1, 2, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  const SkeletonTree t = tree_of(pos, {-1, 0, 1, 2});
  const SkeletonGraph hops = SkeletonGraph::from_links(pos, {}, LinkWeight::kHops);
  EXPECT_DOUBLE_EQ(straighten_bumpy(t, hops).weight(2), 1.0);
}

}  // namespace
}  // namespace tubeskel
