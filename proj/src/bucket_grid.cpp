#include "tubeskel/bucket_grid.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace tubeskel {
namespace {

using predicates::orient2d;
using predicates::orient3d;

Eigen::Vector2d drop_axis(const Vec3& p, int axis) {
  switch (axis) {
    case 0:
      return {p.y(), p.z()};
    case 1:
      return {p.z(), p.x()};
    default:
      return {p.x(), p.y()};
  }
}

bool boxes_overlap(const Aabb& a, const Aabb& b) {
  return (a.min.array() <= b.max.array()).all() && (b.min.array() <= a.max.array()).all();
}

Vec3 random_direction(std::uint64_t seed, int attempt) {
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(attempt + 1)));
  const auto uniform = [&rng] { return 2.0 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1.0; };
  for (;;) {
    const Vec3 d(uniform(), uniform(), uniform());
    const double n = d.norm();
    if (n > 0.1 && n <= 1.0) return d / n;
  }
}

}  // namespace

bool point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  if (orient3d(a, b, c, p) != 0) return false;
  const Vec3 n = (b - a).cross(c - a).cwiseAbs();
  std::array<int, 3> axes{0, 1, 2};
  std::sort(axes.begin(), axes.end(), [&n](int i, int j) { return n[i] > n[j]; });
  for (int axis : axes) {
    const auto a2 = drop_axis(a, axis), b2 = drop_axis(b, axis), c2 = drop_axis(c, axis);
    const int o = orient2d(a2, b2, c2);
    if (o == 0) continue;
    const auto p2 = drop_axis(p, axis);
    return orient2d(a2, b2, p2) * o >= 0 && orient2d(b2, c2, p2) * o >= 0 && orient2d(c2, a2, p2) * o >= 0;
  }
  return false;
}

SegmentHit segment_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const int sp = orient3d(a, b, c, p);
  const int sq = orient3d(a, b, c, q);
  if (sp == sq && sp != 0) return SegmentHit::kNone;
  if (sp == 0 && sq == 0) {
    Aabb seg, tri;
    seg.extend(p), seg.extend(q);
    tri.extend(a), tri.extend(b), tri.extend(c);
    return boxes_overlap(seg, tri) ? SegmentHit::kDegenerate : SegmentHit::kNone;
  }
  if (sp == 0) return point_on_triangle(p, a, b, c) ? SegmentHit::kDegenerate : SegmentHit::kNone;
  if (sq == 0) return point_on_triangle(q, a, b, c) ? SegmentHit::kDegenerate : SegmentHit::kNone;
  const int t1 = orient3d(p, q, a, b);
  const int t2 = orient3d(p, q, b, c);
  const int t3 = orient3d(p, q, c, a);
  const bool nonneg = t1 >= 0 && t2 >= 0 && t3 >= 0;
  const bool nonpos = t1 <= 0 && t2 <= 0 && t3 <= 0;
  if (!nonneg && !nonpos) return SegmentHit::kNone;
  return (t1 == 0 || t2 == 0 || t3 == 0) ? SegmentHit::kDegenerate : SegmentHit::kCross;
}

BucketGrid::BucketGrid(const TriangleMesh& mesh, double cells_per_face) : mesh_(&mesh) {
  const Aabb box = mesh.bounds();
  const double diag = std::max(box.diagonal(), std::numeric_limits<double>::min());
  const double margin = 1e-3 * diag;
  bounds_.min = box.min.array() - margin;
  bounds_.max = box.max.array() + margin;
  const Vec3 extent = bounds_.extent();
  const double target = std::max(1.0, cells_per_face * static_cast<double>(mesh.faces.size()));
  h_ = std::cbrt(extent.prod() / target);
  for (int k = 0; k < 3; ++k) res_[k] = std::clamp(static_cast<int>(std::ceil(extent[k] / h_)), 1, 4096);
  buckets_.resize(static_cast<std::size_t>(res_[0]) * res_[1] * res_[2]);

  const double pad = 1e-7 * diag;
  face_boxes_.reserve(mesh.faces.size());
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    Aabb fb;
    for (int v : mesh.faces[f]) fb.extend(mesh.vertices[v]);
    fb.min.array() -= pad;
    fb.max.array() += pad;
    face_boxes_.push_back(fb);
    bvh_faces_.push_back(f);
    const auto lo = cell_of(fb.min);
    const auto hi = cell_of(fb.max);
    for (int k = lo[2]; k <= hi[2]; ++k) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int i = lo[0]; i <= hi[0]; ++i) buckets_[index(i, j, k)].push_back(f);
      }
    }
  }
  if (!bvh_faces_.empty()) build_bvh(0, static_cast<int>(bvh_faces_.size()));
}

std::array<int, 3> BucketGrid::cell_of(const Vec3& p) const {
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    const double t = std::floor((p[k] - bounds_.min[k]) / h_);
    c[k] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(res_[k] - 1)));
  }
  return c;
}

std::vector<int> BucketGrid::candidates_along(const Vec3& p, const Vec3& q) const {
  const Vec3 d = q - p;
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (p[k] < bounds_.min[k] || p[k] > bounds_.max[k]) return {};
      continue;
    }
    double ta = (bounds_.min[k] - p[k]) / d[k];
    double tb = (bounds_.max[k] - p[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return {};

  // Amanatides-Woo traversal from the clipped entry point.
  auto cell = cell_of(p + t0 * d);
  const auto last = cell_of(p + t1 * d);
  std::array<int, 3> step{};
  Vec3 t_max, t_delta;
  for (int k = 0; k < 3; ++k) {
    if (d[k] > 0.0) {
      step[k] = 1;
      t_max[k] = (bounds_.min[k] + (cell[k] + 1) * h_ - p[k]) / d[k];
      t_delta[k] = h_ / d[k];
    } else if (d[k] < 0.0) {
      step[k] = -1;
      t_max[k] = (bounds_.min[k] + cell[k] * h_ - p[k]) / d[k];
      t_delta[k] = -h_ / d[k];
    } else {
      t_max[k] = std::numeric_limits<double>::infinity();
      t_delta[k] = std::numeric_limits<double>::infinity();
    }
  }

  std::vector<int> out;
  const int max_steps = res_[0] + res_[1] + res_[2] + 3;
  for (int s = 0; s < max_steps; ++s) {
    const auto& b = buckets_[index(cell[0], cell[1], cell[2])];
    out.insert(out.end(), b.begin(), b.end());
    if (cell == last) break;
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    if (t_max[axis] > t1) break;
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= res_[axis]) break;
    t_max[axis] += t_delta[axis];
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<int> BucketGrid::crossings(const Vec3& p, const Vec3& q) const {
  Aabb seg;
  seg.extend(p);
  seg.extend(q);
  int count = 0;
  for (int f : candidates_along(p, q)) {
    if (!boxes_overlap(seg, face_boxes_[f])) continue;
    const Face& t = mesh_->faces[f];
    const SegmentHit hit = segment_triangle(p, q, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]]);
    if (hit == SegmentHit::kDegenerate) return std::nullopt;
    if (hit == SegmentHit::kCross) ++count;
  }
  return count;
}

bool BucketGrid::contains(const Vec3& p, std::uint64_t seed) const {
  if (!bounds_.contains(p)) return false;
  const double length = (p - bounds_.center()).norm() + 2.0 * bounds_.diagonal();
  for (int attempt = 0; attempt < kMaxRayAttempts; ++attempt) {
    const Vec3 q = p + length * random_direction(seed, attempt);
    const auto count = crossings(p, q);
    if (count) return (*count % 2) == 1;
    for (int f : candidates_along(p, p)) {
      const Face& t = mesh_->faces[f];
      if (point_on_triangle(p, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]])) return true;
    }
  }
  throw NumericError("unresolvable parity");
}

int BucketGrid::build_bvh(int begin, int end) {
  const int id = static_cast<int>(bvh_.size());
  bvh_.emplace_back();
  Aabb box, centers;
  for (int i = begin; i < end; ++i) {
    const Aabb& fb = face_boxes_[bvh_faces_[i]];
    box.extend(fb.min);
    box.extend(fb.max);
    centers.extend(fb.center());
  }
  bvh_[id].box = box;
  constexpr int kLeafSize = 4;
  if (end - begin <= kLeafSize) {
    bvh_[id].first = begin;
    bvh_[id].count = end - begin;
    return id;
  }
  int axis = 0;
  centers.extent().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(bvh_faces_.begin() + begin, bvh_faces_.begin() + mid, bvh_faces_.begin() + end,
                   [this, axis](int a, int b) {
                     const double ca = face_boxes_[a].center()[axis], cb = face_boxes_[b].center()[axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build_bvh(begin, mid);
  const int right = build_bvh(mid, end);
  bvh_[id].left = left;
  bvh_[id].right = right;
  return id;
}

double BucketGrid::distance_to_surface(const Vec3& p) const {
  const auto box_distance2 = [&p](const Aabb& b) {
    return (b.min - p).cwiseMax(p - b.max).cwiseMax(0.0).squaredNorm();
  };
  double best2 = std::numeric_limits<double>::infinity();
  // Best-first traversal on the lower bound given by node boxes.
  using Entry = std::pair<double, int>;
  if (bvh_.empty()) return best2;
  std::vector<Entry> heap{{box_distance2(bvh_[0].box), 0}};
  const auto later = [](const Entry& a, const Entry& b) { return a.first > b.first; };
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), later);
    const auto [bound, id] = heap.back();
    heap.pop_back();
    if (bound >= best2) break;
    const BvhNode& node = bvh_[id];
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = bvh_faces_[i];
        if (box_distance2(face_boxes_[f]) >= best2) continue;
        const Face& t = mesh_->faces[f];
        const Vec3 x = closest_point_on_triangle(p, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]]);
        best2 = std::min(best2, (x - p).squaredNorm());
      }
      continue;
    }
    for (int child : {node.left, node.right}) {
      const double d2 = box_distance2(bvh_[child].box);
      if (d2 < best2) {
        heap.emplace_back(d2, child);
        std::push_heap(heap.begin(), heap.end(), later);
      }
    }
  }
  return std::sqrt(best2);
}

bool point_in_mesh(const Vec3& p, const BucketGrid& grid, std::uint64_t seed) { return grid.contains(p, seed); }

bool point_in_mesh(const Vec3& p, const TriangleMesh& mesh, std::uint64_t seed) {
  return BucketGrid(mesh).contains(p, seed);
}

}  // namespace tubeskel
