#include "tubeskel/delaunay.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/predicates.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <tuple>

namespace tubeskel {
namespace {

using predicates::orient3d;
using predicates::RankedPoint;

constexpr auto& kFaceLocal = TetComplex::kFaceLocal;

std::uint64_t spread_bits(std::uint64_t x) {
  x &= 0x1fffff;
  x = (x | x << 32) & 0x1f00000000ffffull;
  x = (x | x << 16) & 0x1f0000ff0000ffull;
  x = (x | x << 8) & 0x100f00f00f00f00full;
  x = (x | x << 4) & 0x10c30c30c30c30c3ull;
  x = (x | x << 2) & 0x1249249249249249ull;
  return x;
}

// Insertion order along a Morton curve keeps the walk from the previous
// insertion short.
std::vector<int> morton_order(const std::vector<Vec3>& points, const Aabb& box) {
  const Vec3 extent = box.extent().cwiseMax(Vec3::Constant(std::numeric_limits<double>::min()));
  std::vector<std::pair<std::uint64_t, int>> keyed(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 u = (points[i] - box.min).cwiseQuotient(extent) * 2097151.0;
    keyed[i] = {spread_bits(static_cast<std::uint64_t>(u.x())) | spread_bits(static_cast<std::uint64_t>(u.y())) << 1 |
                    spread_bits(static_cast<std::uint64_t>(u.z())) << 2,
                static_cast<int>(i)};
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> order(points.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) order[i] = keyed[i].second;
  return order;
}

bool collinear(const Vec3& a, const Vec3& b, const Vec3& c) {
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const Eigen::Vector2d a2(a[u], a[v]), b2(b[u], b[v]), c2(c[u], c[v]);
    if (predicates::orient2d(a2, b2, c2) != 0) return false;
  }
  return true;
}

class Triangulation {
 public:
  explicit Triangulation(std::vector<Vec3> points) : pts_(std::move(points)), n_(static_cast<int>(pts_.size())) {}

  void build() {
    const Aabb box = Aabb::of(pts_);
    add_super_tetrahedron(box);
    for (int i : morton_order(std::vector<Vec3>(pts_.begin(), pts_.begin() + n_), box)) insert(i);
  }

  std::vector<Cell> real_cells() const {
    std::vector<Cell> out;
    for (std::size_t t = 0; t < cells_.size(); ++t) {
      if (!alive_[t]) continue;
      const Cell& c = cells_[t];
      if (std::all_of(c.begin(), c.end(), [this](int v) { return v < n_; })) out.push_back(c);
    }
    // Deterministic output order independent of slot reuse.
    for (Cell& c : out) {
      const auto first = std::min_element(c.begin(), c.end()) - c.begin();
      // Even permutations keep the orientation: rotate the smallest vertex to
      // the front while cycling the remaining three.
      static constexpr std::array<std::array<int, 4>, 4> kEven{{{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}}};
      const auto& perm = kEven[first];
      c = {c[perm[0]], c[perm[1]], c[perm[2]], c[perm[3]]};
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  RankedPoint ranked(int v) const { return {&pts_[v], v}; }

  void add_super_tetrahedron(const Aabb& box) {
    const Vec3 c = box.center();
    const double r = 50.0 * box.diagonal();
    const std::array<Vec3, 4> corners{Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
    for (const Vec3& d : corners) pts_.push_back(c + 2.0 * r * d);
    Cell cell{n_, n_ + 1, n_ + 2, n_ + 3};
    if (orient3d(pts_[cell[0]], pts_[cell[1]], pts_[cell[2]], pts_[cell[3]]) < 0) std::swap(cell[2], cell[3]);
    allocate(cell);
  }

  int allocate(const Cell& cell) {
    int t;
    if (!free_.empty()) {
      t = free_.back();
      free_.pop_back();
      cells_[t] = cell;
      adjacency_[t] = {-1, -1, -1, -1};
      alive_[t] = 1;
      mark_[t] = 0;
    } else {
      t = static_cast<int>(cells_.size());
      cells_.push_back(cell);
      adjacency_.push_back({-1, -1, -1, -1});
      alive_.push_back(1);
      mark_.push_back(0);
    }
    return t;
  }

  bool beyond_face(int t, int k, const Vec3& p) const {
    const Cell& c = cells_[t];
    return orient3d(pts_[c[kFaceLocal[k][0]]], pts_[c[kFaceLocal[k][1]]], pts_[c[kFaceLocal[k][2]]], p) > 0;
  }

  // Stochastic visibility walk; terminates with probability one.
  int locate(int pi) {
    const Vec3& p = pts_[pi];
    int t = last_;
    for (;;) {
      const int start = static_cast<int>(walk_rng_() & 3u);
      int next = -1;
      for (int i = 0; i < 4 && next < 0; ++i) {
        const int k = (start + i) & 3;
        if (beyond_face(t, k, p)) {
          next = adjacency_[t][k];
          if (next < 0) throw NumericError("point " + std::to_string(pi) + " lies outside the bounding simplex");
        }
      }
      if (next < 0) return t;
      t = next;
    }
  }

  void insert(int pi) {
    const Vec3& p = pts_[pi];
    const int seed = locate(pi);
    for (int v : cells_[seed]) {
      if (pts_[v] == p) {
        throw ValidationError("duplicate point " + std::to_string(pi) + " (same as point " + std::to_string(v) + ")");
      }
    }

    const std::int64_t in_mark = 2 * ++stamp_;
    const std::int64_t out_mark = in_mark + 1;
    struct Boundary {
      Cell cell;
      int local;
      int outside;
    };
    std::vector<int> cavity{seed};
    std::vector<Boundary> boundary;
    mark_[seed] = in_mark;
    for (std::size_t i = 0; i < cavity.size(); ++i) {
      const int t = cavity[i];
      for (int k = 0; k < 4; ++k) {
        const int nb = adjacency_[t][k];
        if (nb >= 0 && mark_[nb] != out_mark) {
          if (mark_[nb] == in_mark) continue;
          const Cell& c = cells_[nb];
          if (predicates::insphere_sos(ranked(c[0]), ranked(c[1]), ranked(c[2]), ranked(c[3]), ranked(pi)) > 0) {
            mark_[nb] = in_mark;
            cavity.push_back(nb);
            continue;
          }
          mark_[nb] = out_mark;
        }
        boundary.push_back({cells_[t], k, nb});
      }
    }

    for (int t : cavity) {
      alive_[t] = 0;
      free_.push_back(t);
    }

    struct Slot {
      int a;
      int b;
      int tet;
      int local;
      bool operator<(const Slot& o) const { return std::tie(a, b, tet, local) < std::tie(o.a, o.b, o.tet, o.local); }
    };
    std::vector<Slot> slots;
    slots.reserve(boundary.size() * 3);
    for (const Boundary& b : boundary) {
      Cell cell = b.cell;
      cell[b.local] = pi;
      if (orient3d(pts_[cell[0]], pts_[cell[1]], pts_[cell[2]], pts_[cell[3]]) <= 0) {
        throw NumericError("insertion of point " + std::to_string(pi) + " produced a flat cell");
      }
      const int t = allocate(cell);
      adjacency_[t][b.local] = b.outside;
      if (b.outside >= 0) {
        // The back face is opposite the one vertex of the neighbor that the
        // shared face lacks. Slot ids are reused, so matching on the old
        // cell id would be ambiguous.
        const Cell& o = cells_[b.outside];
        for (int j = 0; j < 4; ++j) {
          if (std::find(cell.begin(), cell.end(), o[j]) == cell.end()) {
            adjacency_[b.outside][j] = t;
            break;
          }
        }
      }
      for (int j = 0; j < 4; ++j) {
        if (j == b.local) continue;
        std::array<int, 2> pair{};
        int m = 0;
        for (int l = 0; l < 4; ++l) {
          if (l != j && l != b.local) pair[m++] = cell[l];
        }
        slots.push_back({std::min(pair[0], pair[1]), std::max(pair[0], pair[1]), t, j});
      }
      last_ = t;
    }
    std::sort(slots.begin(), slots.end());
    for (std::size_t i = 0; i + 1 < slots.size(); i += 2) {
      if (slots[i].a != slots[i + 1].a || slots[i].b != slots[i + 1].b) {
        throw NumericError("cavity of point " + std::to_string(pi) + " is not a topological ball");
      }
      adjacency_[slots[i].tet][slots[i].local] = slots[i + 1].tet;
      adjacency_[slots[i + 1].tet][slots[i + 1].local] = slots[i].tet;
    }
  }

  std::vector<Vec3> pts_;
  int n_;
  std::vector<Cell> cells_;
  std::vector<std::array<int, 4>> adjacency_;
  std::vector<char> alive_;
  std::vector<std::int64_t> mark_;
  std::vector<int> free_;
  std::int64_t stamp_ = 0;
  int last_ = 0;
  std::mt19937_64 walk_rng_{0x5DEECE66Dull};
};

}  // namespace

std::vector<Cell> delaunay_tetrahedralize(const std::vector<Vec3>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 4) throw ValidationError("Delaunay tetrahedralization needs at least 4 points");
  for (int i = 0; i < n; ++i) {
    if (!points[i].allFinite()) throw ValidationError("point " + std::to_string(i) + " is not finite");
  }
  int b = -1, c = -1;
  for (int i = 1; i < n && b < 0; ++i) {
    if (points[i] != points[0]) b = i;
  }
  for (int i = 1; b >= 0 && i < n && c < 0; ++i) {
    if (!collinear(points[0], points[b], points[i])) c = i;
  }
  bool solid = false;
  for (int i = 1; c >= 0 && i < n && !solid; ++i) solid = orient3d(points[0], points[b], points[c], points[i]) != 0;
  if (!solid) throw ValidationError("all points are coplanar");

  Triangulation tri(points);
  tri.build();
  return tri.real_cells();
}

}  // namespace tubeskel
