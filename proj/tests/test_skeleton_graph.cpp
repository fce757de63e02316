#include "test_support.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/tetrahedralize.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace tubeskel {
namespace {

// Two tets sharing the right triangle (0,0,0),(2,0,0),(0,2,0), apexes
// mirrored through its plane so every face area is exact and equal.
TetComplex mirrored_pair() {
  std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0), Vec3(0.25, 0.25, 0.5), Vec3(0.25, 0.25, -0.5)};
  return TetComplex::from_cells(v, {Cell{0, 1, 2, 3}, Cell{0, 2, 1, 4}}, InvertedCellPolicy::kRepair);
}

// Union-find over cells glued by identical sorted face triples, computed
// without the complex's adjacency table.
int count_components_by_faces(const TetComplex& cx) {
  std::vector<int> parent(cx.cells.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::array<int, 3>, int> first_owner;
  for (int c = 0; c < static_cast<int>(cx.cells.size()); ++c) {
    for (int skip = 0; skip < 4; ++skip) {
      std::array<int, 3> f{};
      int m = 0;
      for (int k = 0; k < 4; ++k) {
        if (k != skip) f[m++] = cx.cells[c][k];
      }
      std::sort(f.begin(), f.end());
      const auto [it, fresh] = first_owner.emplace(f, c);
      if (!fresh) parent[find(c)] = find(it->second);
    }
  }
  int count = 0;
  for (int c = 0; c < static_cast<int>(cx.cells.size()); ++c) count += find(c) == c;
  return count;
}

TEST(BuildGraph, TwoGluedTets) {
  const TetComplex cx = mirrored_pair();
  const SkeletonGraph g = build_graph(cx);
  ASSERT_EQ(g.size(), 2);
  ASSERT_EQ(g.links().size(), 1u);
  const GraphLink& l = g.links()[0];
  EXPECT_EQ(std::min(l.a, l.b), 0);
  EXPECT_EQ(std::max(l.a, l.b), 1);
  EXPECT_DOUBLE_EQ(l.weight, (g.position(0) - g.position(1)).norm());
  EXPECT_EQ(g.component_count(), 1);
}

TEST(BuildGraph, LinksMatchInteriorFacesAndShareThreeVertices) {
  const TetComplex cx = delaunay_interior(testing::unit_cube());
  const SkeletonGraph g = build_graph(cx);
  EXPECT_EQ(g.size(), static_cast<int>(cx.cells.size()));
  EXPECT_EQ(g.links().size(), cx.interior_face_count());
  for (const GraphLink& l : g.links()) {
    int shared = 0;
    for (int v : cx.cells[g.nodes()[l.a].cell]) {
      const auto& other = cx.cells[g.nodes()[l.b].cell];
      shared += std::count(other.begin(), other.end(), v) > 0;
    }
    EXPECT_EQ(shared, 3);
    EXPECT_GT(l.weight, 0.0);
  }
}

TEST(BuildGraph, NeighborsAreSymmetric) {
  const SkeletonGraph g = build_graph(delaunay_interior(testing::unit_cube()));
  for (int n = 0; n < g.size(); ++n) {
    for (const auto& inc : g.neighbors(n)) {
      const auto back = g.neighbors(inc.node);
      EXPECT_TRUE(std::any_of(back.begin(), back.end(), [&](const auto& b) { return b.node == n && b.link == inc.link; }));
    }
  }
}

TEST(BuildGraph, CylinderGraphIsConnected) {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {});
  const TetComplex cx = delaunay_interior(fx.mesh);
  const SkeletonGraph g = build_graph(cx);
  EXPECT_EQ(count_components_by_faces(cx), 1);
  EXPECT_EQ(g.component_count(), 1);
}

TEST(BuildGraph, CircumcentersAreEquidistant) {
  FixtureParams p;
  p.noise = 0.1;
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, p, 3);
  const TetComplex cx = delaunay_interior(fx.mesh);
  const SkeletonGraph g = build_graph(cx);
  int checked = 0;
  for (const GraphNode& n : g.nodes()) {
    if (n.clamped) continue;
    for (int v : cx.cells[n.cell]) {
      const double d = (cx.vertices[v] - n.position).norm();
      EXPECT_NEAR(d, n.circumradius, 1e-9 * n.circumradius);
    }
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(BuildGraph, NearFlatCellIsClampedToCentroid) {
  // The fourth point sits inside the circumcircle of the base, barely above
  // it, so the circumsphere is enormous.
  std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, 0.3, 1e-9)};
  const TetComplex cx = TetComplex::from_cells(v, {Cell{0, 1, 2, 3}}, InvertedCellPolicy::kRepair);
  const SkeletonGraph g = build_graph(cx);
  ASSERT_EQ(g.size(), 1);
  EXPECT_TRUE(g.nodes()[0].clamped);
  EXPECT_TRUE(g.position(0).isApprox(cx.centroid(0)));

  GraphOptions loose;
  loose.clamp_factor = 1e12;
  EXPECT_FALSE(build_graph(cx, loose).nodes()[0].clamped);
}

TEST(BuildGraph, HopMetricGivesUnitWeights) {
  GraphOptions opts;
  opts.weight = LinkWeight::kHops;
  const SkeletonGraph g = build_graph(delaunay_interior(testing::unit_cube()), opts);
  for (const GraphLink& l : g.links()) EXPECT_EQ(l.weight, 1.0);
  EXPECT_EQ(g.weight_between(Vec3(0, 0, 0), Vec3(5, 0, 0)), 1.0);
}

TEST(BuildGraph, EdgeListDump) {
  const SkeletonGraph g = build_graph(mirrored_pair());
  std::ostringstream out;
  write_edge_list(g, out);
  std::istringstream in(out.str());
  int nodes = 0, links = 0, a = -1, b = -1;
  double w = 0.0;
  in >> nodes >> links >> a >> b >> w;
  EXPECT_EQ(nodes, 2);
  EXPECT_EQ(links, 1);
  EXPECT_EQ(std::min(a, b), 0);
  EXPECT_EQ(std::max(a, b), 1);
  EXPECT_NEAR(w, g.links()[0].weight, 1e-12);
}

TEST(SelectRoot, TieGoesToLowestCellId) {
  const SkeletonGraph g = build_graph(mirrored_pair());
  ASSERT_EQ(g.nodes()[0].largest_face_area, g.nodes()[1].largest_face_area);
  EXPECT_DOUBLE_EQ(g.nodes()[0].largest_face_area, 2.0);
  const RootSelection sel = select_root(g);
  ASSERT_EQ(sel.roots.size(), 1u);
  EXPECT_EQ(g.nodes()[sel.roots[0]].cell, 0);
}

TEST(SelectRoot, YTubeRootLiesInTrunk) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {});
  const TetComplex cx = delaunay_interior(fx.mesh);
  const SkeletonGraph g = build_graph(cx);

  // Oracle: scan every face of every cell for the largest area.
  int best_cell = -1;
  double best_area = -1.0;
  for (int c = 0; c < static_cast<int>(cx.cells.size()); ++c) {
    for (int k = 0; k < 4; ++k) {
      const Face f = cx.face(c, k);
      const double a =
          0.5 * (cx.vertices[f[1]] - cx.vertices[f[0]]).cross(cx.vertices[f[2]] - cx.vertices[f[0]]).norm();
      if (a > best_area) best_area = a, best_cell = c;
    }
  }
  const RootSelection sel = select_root(g);
  ASSERT_EQ(sel.roots.size(), 1u);
  const GraphNode& root = g.nodes()[sel.roots[0]];
  EXPECT_NEAR(root.largest_face_area, best_area, 1e-12 * best_area);
  EXPECT_EQ(root.cell, best_cell);

  const TubeSegment& trunk = fx.segments[0];
  const Vec3 axis = (trunk.b - trunk.a).normalized();
  const Vec3 rel = root.position - trunk.a;
  const double along = rel.dot(axis);
  EXPECT_GE(along, -trunk.radius);
  EXPECT_LE(along, (trunk.b - trunk.a).norm());
  EXPECT_LT((rel - along * axis).norm(), trunk.radius);
}

TEST(SelectRoot, OneRootPerComponent) {
  TriangleMesh two = testing::unit_cube();
  const TriangleMesh shifted = testing::unit_cube();
  const int offset = static_cast<int>(two.vertices.size());
  for (const Vec3& v : shifted.vertices) two.vertices.push_back(v + Vec3(3, 0, 0));
  for (Face f : shifted.faces) two.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  const SkeletonGraph g = build_graph(delaunay_interior(two));
  ASSERT_EQ(g.component_count(), 2);
  const RootSelection sel = select_root(g);
  ASSERT_EQ(sel.roots.size(), 2u);
  EXPECT_EQ(g.component(sel.roots[0]), 0);
  EXPECT_EQ(g.component(sel.roots[1]), 1);
}

TEST(SelectRoot, ManualPickValidated) {
  const SkeletonGraph g = build_graph(mirrored_pair());
  const RootSelection sel = select_root(g, RootMode::kManual, 1);
  EXPECT_EQ(sel.mode, RootMode::kManual);
  EXPECT_EQ(sel.roots, std::vector<int>{1});
  EXPECT_THROW(select_root(g, RootMode::kManual, 2), ValidationError);
  EXPECT_THROW(select_root(g, RootMode::kManual, -1), ValidationError);
  EXPECT_THROW(select_root(g, RootMode::kManual), ValidationError);
}

TEST(SkeletonGraph, RejectsBadLinks) {
  std::vector<GraphNode> nodes(2);
  EXPECT_THROW(SkeletonGraph(nodes, {GraphLink{0, 2, 1.0}}), ValidationError);
  EXPECT_THROW(SkeletonGraph(nodes, {GraphLink{0, 1, 0.0}}), ValidationError);
}

}  // namespace
}  // namespace tubeskel
