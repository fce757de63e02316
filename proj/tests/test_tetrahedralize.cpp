#include "test_support.hpp"
#include "tubeskel/bucket_grid.hpp"
#include "tubeskel/delaunay.hpp"
#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/predicates.hpp"
#include "tubeskel/tetrahedralize.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

namespace tubeskel {
namespace {

using testing::unit_cube;

// Analytic membership for the noiseless cylinder fixture: the lateral
// surface is an exact s-gon prism between z=0 and z=L.
struct PrismOracle {
  int sides = 0;
  double radius = 1.0;
  double length = 10.0;

  explicit PrismOracle(const Fixture& fx) : radius(fx.segments[0].radius), length(fx.segments[0].b.z()) {
    for (const Vec3& v : fx.mesh.vertices) {
      if (v.z() == 0.0 && std::abs(v.head<2>().norm() - radius) < 1e-12) ++sides;
    }
  }
  Eigen::Vector2d corner(int i) const {
    const double t = 2 * std::numbers::pi * i / sides;
    return {radius * std::cos(t), radius * std::sin(t)};
  }
  // Signed distance, negative inside.
  double signed_distance(const Vec3& p) const {
    double d = std::max(-p.z(), p.z() - length);
    for (int i = 0; i < sides; ++i) {
      const Eigen::Vector2d a = corner(i), b = corner(i + 1);
      const Eigen::Vector2d n = Eigen::Vector2d(b.y() - a.y(), a.x() - b.x()).normalized();
      d = std::max(d, n.dot(p.head<2>() - a));
    }
    return d;
  }
};

TEST(SegmentTriangle, Classification) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  EXPECT_EQ(segment_triangle(Vec3(0.2, 0.2, -1), Vec3(0.2, 0.2, 1), a, b, c), SegmentHit::kCross);
  EXPECT_EQ(segment_triangle(Vec3(2, 2, -1), Vec3(2, 2, 1), a, b, c), SegmentHit::kNone);
  EXPECT_EQ(segment_triangle(Vec3(0.5, 0, -1), Vec3(0.5, 0, 1), a, b, c), SegmentHit::kDegenerate);
  EXPECT_EQ(segment_triangle(Vec3(0, 0, -1), Vec3(0, 0, 1), a, b, c), SegmentHit::kDegenerate);
  EXPECT_EQ(segment_triangle(Vec3(0.2, 0.2, 0), Vec3(0.2, 0.2, 1), a, b, c), SegmentHit::kDegenerate);
  EXPECT_EQ(segment_triangle(Vec3(3, 3, 0), Vec3(0.2, 0.2, 1), a, b, c), SegmentHit::kNone);
  EXPECT_EQ(segment_triangle(Vec3(0.2, 0.2, 1), Vec3(0.2, 0.2, 2), a, b, c), SegmentHit::kNone);
}

TEST(BucketGrid, EveryTriangleInEveryOverlappedCell) {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {}, 0);
  const BucketGrid grid(fx.mesh);
  const auto res = grid.resolution();
  for (int f = 0; f < static_cast<int>(fx.mesh.faces.size()); ++f) {
    Aabb box;
    for (int v : fx.mesh.faces[f]) box.extend(fx.mesh.vertices[v]);
    for (int k = 0; k < res[2]; ++k)
      for (int j = 0; j < res[1]; ++j)
        for (int i = 0; i < res[0]; ++i) {
          const Vec3 lo = grid.bounds().min + grid.cell_size() * Vec3(i, j, k);
          const Vec3 hi = lo + Vec3::Constant(grid.cell_size());
          const bool overlaps = (box.min.array() <= hi.array()).all() && (lo.array() <= box.max.array()).all();
          if (!overlaps) continue;
          const auto& bucket = grid.bucket(i, j, k);
          ASSERT_TRUE(std::find(bucket.begin(), bucket.end(), f) != bucket.end()) << f;
        }
  }
}

TEST(BucketGrid, CandidatesAreSupersetOfTrueHits) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {}, 4);
  const BucketGrid grid(fx.mesh);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-4, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p(u(rng), u(rng) * 0.3, u(rng)), q(u(rng), u(rng) * 0.3, u(rng));
    const auto candidates = grid.candidates_along(p, q);
    for (int f = 0; f < static_cast<int>(fx.mesh.faces.size()); ++f) {
      const Face& t = fx.mesh.faces[f];
      if (segment_triangle(p, q, fx.mesh.vertices[t[0]], fx.mesh.vertices[t[1]], fx.mesh.vertices[t[2]]) ==
          SegmentHit::kNone)
        continue;
      ASSERT_TRUE(std::binary_search(candidates.begin(), candidates.end(), f)) << "trial " << trial << " face " << f;
    }
  }
}

TEST(PointInMesh, Cube) {
  const TriangleMesh cube = unit_cube();
  EXPECT_TRUE(point_in_mesh(Vec3(0.5, 0.5, 0.5), cube));
  EXPECT_FALSE(point_in_mesh(Vec3(2, 2, 2), cube));
  EXPECT_FALSE(point_in_mesh(Vec3(0.5, 0.5, 1.5), cube));
  EXPECT_TRUE(point_in_mesh(Vec3(0.5, 0.5, 1.0), cube));  // on the surface
}

TEST(PointInMesh, MatchesAnalyticCylinderMembership) {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {}, 0);
  const PrismOracle oracle(fx);
  ASSERT_GT(oracle.sides, 6);
  const BucketGrid grid(fx.mesh);
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> xy(-1.3, 1.3), z(-1.0, 11.0);
  int compared = 0, inside = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(xy(rng), xy(rng), z(rng));
    const double d = oracle.signed_distance(p);
    if (std::abs(d) < 1e-9) continue;
    ASSERT_EQ(grid.contains(p, 7), d < 0) << p.transpose();
    ++compared;
    inside += d < 0;
  }
  EXPECT_GT(compared, 990);
  EXPECT_GT(inside, 200);
}

TEST(PointInMesh, ResultIndependentOfSeed) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {}, 2);
  const BucketGrid grid(fx.mesh);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 8);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng) * 0.2, u(rng));
    EXPECT_EQ(grid.contains(p, 0), grid.contains(p, 99)) << p.transpose();
  }
}

TEST(BucketGrid, DistanceToSurfaceMatchesBruteForce) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {}, 1);
  const BucketGrid grid(fx.mesh);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 10);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    double best = std::numeric_limits<double>::infinity();
    for (const Face& f : fx.mesh.faces) {
      best = std::min(best, (closest_point_on_triangle(p, fx.mesh.vertices[f[0]], fx.mesh.vertices[f[1]],
                                                       fx.mesh.vertices[f[2]]) - p).norm());
    }
    EXPECT_DOUBLE_EQ(grid.distance_to_surface(p), best);
  }
}

TEST(Fixtures, CylinderConstruction) {
  FixtureParams p;
  p.radius = 1.0;
  p.length = 10.0;
  p.target_faces = 2000;
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, p, 0);
  EXPECT_EQ(fx.mesh.euler_characteristic(), 2);
  EXPECT_NEAR(static_cast<double>(fx.mesh.faces.size()), 2000.0, 100.0);
  ASSERT_EQ(fx.centerlines.size(), 1u);
  EXPECT_EQ(fx.centerlines[0].front(), Vec3(0, 0, 0));
  EXPECT_EQ(fx.centerlines[0].back(), Vec3(0, 0, 10));
}

TEST(Fixtures, YTubeGroundTruth) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {}, 0);
  EXPECT_EQ(fx.mesh.euler_characteristic(), 2);
  ASSERT_EQ(fx.junctions.size(), 1u);
  EXPECT_EQ(fx.junctions[0], Vec3(0, 0, 5));
  EXPECT_EQ(fx.segments.size(), 3u);
}

TEST(Fixtures, DeterministicForSeed) {
  FixtureParams p;
  p.noise = 0.1;
  for (FixtureKind kind : {FixtureKind::kCylinder, FixtureKind::kYTube}) {
    const Fixture a = generate_fixture(kind, p, 42), b = generate_fixture(kind, p, 42);
    EXPECT_EQ(a.mesh.vertices, b.mesh.vertices);
    EXPECT_EQ(a.mesh.faces, b.mesh.faces);
    const Fixture c = generate_fixture(kind, p, 43);
    EXPECT_NE(a.mesh.vertices, c.mesh.vertices);
  }
}

TEST(Fixtures, NoisyFixturesAreValid) {
  FixtureParams p;
  p.noise = 0.1;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (FixtureKind kind : {FixtureKind::kCylinder, FixtureKind::kYTube, FixtureKind::kThreeLevelTree}) {
      EXPECT_NO_THROW(generate_fixture(kind, p, seed)) << to_string(kind);
    }
  }
}

TEST(Fixtures, RejectsBadParameters) {
  FixtureParams p;
  p.branch_radius = 1.2;
  EXPECT_THROW(generate_fixture(FixtureKind::kYTube, p, 0), ValidationError);
  p = {};
  p.arm_angle_deg = 175.0;  // arms fold back alongside the trunk
  EXPECT_THROW(generate_fixture(FixtureKind::kYTube, p, 0), ValidationError);
  p = {};
  p.noise = 0.6;
  EXPECT_THROW(generate_fixture(FixtureKind::kCylinder, p, 0), ValidationError);
  p = {};
  p.radius = -1;
  EXPECT_THROW(generate_fixture(FixtureKind::kCylinder, p, 0), ValidationError);
}

TEST(Delaunay, SingleTetrahedron) {
  const TetComplex c = delaunay_interior(testing::tetrahedron_mesh());
  EXPECT_EQ(c.cells.size(), 1u);
  EXPECT_EQ(c.interior_face_count(), 0u);
}

TEST(Delaunay, CubeGivesFiveOrSixCellsOfUnitVolume) {
  const TetComplex c = delaunay_interior(unit_cube());
  EXPECT_TRUE(c.cells.size() == 5 || c.cells.size() == 6) << c.cells.size();
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(c.cells.size()); ++i) {
    EXPECT_GT(c.volume(i), 0.0);
    EXPECT_TRUE(point_in_mesh(c.centroid(i), unit_cube()));
    sum += c.volume(i);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Delaunay, RejectsDuplicatesAndCoplanar) {
  std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 0, 0)};
  try {
    delaunay_tetrahedralize(pts);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate point"), std::string::npos);
  }
  std::vector<Vec3> flat{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(2, 3, 0)};
  EXPECT_THROW(delaunay_tetrahedralize(flat), ValidationError);
}

// Exhaustive empty-circumsphere check against every vertex of the complex.
void expect_delaunay(const TetComplex& c) {
  for (int t = 0; t < static_cast<int>(c.cells.size()); ++t) {
    const Cell& cell = c.cells[t];
    for (int v = 0; v < static_cast<int>(c.vertices.size()); ++v) {
      if (std::find(cell.begin(), cell.end(), v) != cell.end()) continue;
      ASSERT_LE(predicates::insphere(c.vertices[cell[0]], c.vertices[cell[1]], c.vertices[cell[2]],
                                     c.vertices[cell[3]], c.vertices[v]),
                0)
          << "cell " << t << " vertex " << v;
    }
  }
}

TEST(Delaunay, EmptyCircumsphereOnFixtures) {
  FixtureParams noisy;
  noisy.noise = 0.1;
  expect_delaunay(delaunay_interior(generate_fixture(FixtureKind::kCylinder, {}, 0).mesh));
  expect_delaunay(delaunay_interior(generate_fixture(FixtureKind::kCylinder, noisy, 1).mesh));
  FixtureParams box;
  box.box_divisions = 5;
  expect_delaunay(delaunay_interior(generate_fixture(FixtureKind::kBox, box, 0).mesh));
}

TEST(Delaunay, LinksEqualInteriorFacesAndCountIdentity) {
  const TetComplex c = delaunay_interior(generate_fixture(FixtureKind::kCylinder, {}, 0).mesh);
  EXPECT_EQ(2 * c.interior_face_count() + c.boundary_faces.size(), 4 * c.cells.size());
}

TEST(Delaunay, DeterministicAndSeedIndependentWithoutSampling) {
  const Fixture fx = generate_fixture(FixtureKind::kYTube, {}, 3);
  TetrahedralizeOptions a, b;
  b.seed = 17;
  const TetComplex x = delaunay_interior(fx.mesh, a), y = delaunay_interior(fx.mesh, b);
  EXPECT_EQ(x.cells, y.cells);
}

TEST(Tetrahedralize, CylinderInteriorAndVolume) {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {}, 0);
  const BucketGrid grid(fx.mesh);
  const TetComplex c = delaunay_interior(fx.mesh, grid);
  for (int i = 0; i < static_cast<int>(c.cells.size()); ++i) ASSERT_TRUE(grid.contains(c.centroid(i), 3));
  const double analytic = std::numbers::pi * 1.0 * 1.0 * 10.0;
  EXPECT_NEAR(c.total_volume() / analytic, 1.0, 0.05);
}

TEST(Tetrahedralize, MonotoneRefinementOnCylinder) {
  const Fixture fx = generate_fixture(FixtureKind::kCylinder, {}, 0);
  const BucketGrid grid(fx.mesh);
  const double analytic = std::numbers::pi * 10.0;
  double previous = 0.0;
  for (double density : {0.0, 0.5, 1.0, 2.0}) {
    TetrahedralizeOptions opts;
    opts.supersample = density;
    opts.seed = 5;
    const double ratio = delaunay_interior(fx.mesh, grid, opts).total_volume() / analytic;
    EXPECT_GE(ratio, previous * (1.0 - 1e-9)) << "density " << density;
    previous = ratio;
  }
}

TEST(Tetrahedralize, SurfaceSamplesLieInsideFaces) {
  const TriangleMesh cube = unit_cube();
  const auto samples = surface_samples(cube, 3.0, 1);
  EXPECT_GT(samples.size(), 20u);
  for (const Vec3& s : samples) {
    const double d = std::min({s.x(), s.y(), s.z(), 1 - s.x(), 1 - s.y(), 1 - s.z()});
    EXPECT_NEAR(d, 0.0, 1e-15);
  }
}

TEST(Tetrahedralize, RestrictExternalComplex) {
  // A complex covering the cube plus an exterior cell.
  TetComplex inner = delaunay_interior(unit_cube());
  std::vector<Vec3> verts = inner.vertices;
  std::vector<Cell> cells = inner.cells;
  verts.push_back(Vec3(3, 3, 3));
  verts.push_back(Vec3(4, 3, 3));
  verts.push_back(Vec3(3, 4, 3));
  verts.push_back(Vec3(3, 3, 4));
  cells.push_back({8, 9, 10, 11});
  const TetComplex all = TetComplex::from_cells(verts, cells);
  const TriangleMesh cube = unit_cube();
  const BucketGrid grid(cube);
  EXPECT_EQ(restrict_to_interior(all, grid).cells.size(), inner.cells.size());
}

}  // namespace
}  // namespace tubeskel
