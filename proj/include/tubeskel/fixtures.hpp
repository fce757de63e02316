#pragma once

#include "tubeskel/mesh.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tubeskel {

enum class FixtureKind { kCylinder, kYTube, kThreeLevelTree, kBox };

std::optional<FixtureKind> parse_fixture_kind(const std::string& name);
std::string to_string(FixtureKind kind);

struct FixtureParams {
  // Cylinder: axis from (0,0,0) to (0,0,length).
  double radius = 1.0;
  double length = 10.0;
  int target_faces = 2000;

  // Y-tube: trunk from the origin up to (0,0,junction_z); two arms of
  // arm_length leaving the junction at +/- arm_angle_deg from the z axis in
  // the xz plane.
  double trunk_radius = 1.0;
  double branch_radius = 0.6;
  double junction_z = 5.0;
  double arm_length = 4.0;
  double arm_angle_deg = 40.0;

  // Implicit fixtures are polygonized on a grid of spacing
  // (smallest radius) / cells_per_radius.
  double cells_per_radius = 3.0;
  /// Tangential smoothing passes applied to the polygonized surface.
  int relax_iterations = 8;

  // Box: axis-aligned solid, each face split into divisions^2 quads.
  Vec3 box_min = Vec3(0, 0, 0);
  Vec3 box_max = Vec3(1, 1, 1);
  int box_divisions = 1;

  /// Surface perturbation amplitude as a fraction of the (smallest) radius.
  double noise = 0.0;
};

/// A tube segment of the ground-truth skeleton.
struct TubeSegment {
  Vec3 a;
  Vec3 b;
  double radius = 0.0;
  int parent = -1;  ///< segment whose end b is this segment's start a
};

struct Fixture {
  TriangleMesh mesh;
  std::vector<TubeSegment> segments;
  /// Centerline polylines, one per segment, from start to end.
  std::vector<std::vector<Vec3>> centerlines;
  std::vector<Vec3> junctions;
  /// Closed-form enclosed volume when the fixture has one (cylinder and box
  /// without noise), otherwise the value for the ideal shape ignoring
  /// smoothing at the junctions.
  double analytic_volume = 0.0;
  double analytic_area = 0.0;
};

/// Deterministic for fixed (kind, params, seed). The result is validated.
/// Throws ValidationError for non-positive dimensions, branches not thinner
/// than their parent, noise >= 0.5, or segments whose tubes could touch.
Fixture generate_fixture(FixtureKind kind, const FixtureParams& params, std::uint64_t seed = 0);

/// Three-level binary tree with trunk, two level-two arms and four twigs.
std::vector<TubeSegment> three_level_tree_segments();
std::vector<TubeSegment> y_tube_segments(const FixtureParams& params);

}  // namespace tubeskel
