#include "tubeskel/fixtures.hpp"

#include "tubeskel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_map>

namespace tubeskel {
namespace {

constexpr double kPi = std::numbers::pi;

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1.0; }

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Distance between two segments, by dense sampling refined with the
// point-segment distance; only used for a conservative clearance check.
double segment_segment_distance(const TubeSegment& s, const TubeSegment& t) {
  double best = std::numeric_limits<double>::infinity();
  constexpr int kSamples = 256;
  for (int i = 0; i <= kSamples; ++i) {
    const double u = static_cast<double>(i) / kSamples;
    best = std::min(best, segment_distance(s.a + u * (s.b - s.a), t.a, t.b));
    best = std::min(best, segment_distance(t.a + u * (t.b - t.a), s.a, s.b));
  }
  return best;
}

bool share_endpoint(const TubeSegment& s, const TubeSegment& t) {
  return s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b;
}

// Segments meeting at a joint may touch near it; beyond twice the required
// clearance from the joint, s must keep its distance from t.
bool folds_back(const TubeSegment& s, const TubeSegment& t, double need) {
  const bool from_a = s.a == t.a || s.a == t.b;
  const Vec3 joint = from_a ? s.a : s.b;
  const Vec3 far = from_a ? s.b : s.a;
  const double length = (far - joint).norm();
  if (length <= 2.0 * need) return false;
  constexpr int kSamples = 256;
  for (int i = 0; i <= kSamples; ++i) {
    const double d = 2.0 * need + (length - 2.0 * need) * i / kSamples;
    if (segment_distance(joint + d / length * (far - joint), t.a, t.b) <= need) return true;
  }
  return false;
}

// Polynomial smooth minimum; deviates from min by at most k/4.
double smooth_min(double a, double b, double k) {
  const double h = std::max(k - std::abs(a - b), 0.0) / k;
  return std::min(a, b) - h * h * k * 0.25;
}

/// Sum of random plane waves normalized to [-1, 1].
class WaveNoise {
 public:
  WaveNoise(std::uint64_t seed, double wavelength) {
    std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 0x632BE59BD9B4E019ull);
    for (auto& w : waves_) {
      Vec3 d;
      do {
        d = Vec3(uniform_pm1(rng), uniform_pm1(rng), uniform_pm1(rng));
      } while (d.norm() < 0.1 || d.norm() > 1.0);
      w.k = d.normalized() * (2.0 * kPi / wavelength);
      w.phase = kPi * uniform_pm1(rng);
    }
  }
  double operator()(const Vec3& x) const {
    double sum = 0.0;
    for (const auto& w : waves_) sum += std::sin(w.k.dot(x) + w.phase);
    return sum / static_cast<double>(waves_.size());
  }

 private:
  struct Wave {
    Vec3 k;
    double phase;
  };
  std::array<Wave, 8> waves_;
};

struct EdgeKeyHash {
  std::size_t operator()(std::uint64_t k) const { return std::hash<std::uint64_t>{}(k * 0x9E3779B97F4A7C15ull); }
};

// Marching tetrahedra over a Freudenthal split of a regular grid. Negative
// values are inside. Interpolation parameters are clamped away from grid
// nodes so that no triangle degenerates.
TriangleMesh polygonize(const std::function<double(const Vec3&)>& field, const Aabb& box, double h) {
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) n[k] = static_cast<int>(std::ceil(box.extent()[k] / h)) + 1;
  const auto node = [&n](int i, int j, int k) {
    return static_cast<std::uint64_t>((static_cast<std::int64_t>(k) * n[1] + j) * n[0] + i);
  };
  const auto position = [&](std::uint64_t id) {
    const auto i = static_cast<int>(id % n[0]);
    const auto j = static_cast<int>((id / n[0]) % n[1]);
    const auto k = static_cast<int>(id / (static_cast<std::uint64_t>(n[0]) * n[1]));
    return Vec3(box.min.x() + i * h, box.min.y() + j * h, box.min.z() + k * h);
  };
  std::vector<double> values(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  for (std::uint64_t id = 0; id < values.size(); ++id) {
    double v = field(position(id));
    if (v == 0.0) v = 1e-12;
    values[id] = v;
  }

  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int, EdgeKeyHash> edge_vertex;
  const std::uint64_t total = values.size();
  const auto crossing = [&](std::uint64_t a, std::uint64_t b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = a * total + b;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double t = std::clamp(values[a] / (values[a] - values[b]), 0.1, 0.9);
    const Vec3 pa = position(a), pb = position(b);
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, id);
    return id;
  };
  const auto emit = [&](int a, int b, int c, const Vec3& inward_to_outward) {
    const Vec3 normal = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
    if (normal.dot(inward_to_outward) < 0.0) std::swap(b, c);
    mesh.faces.push_back({a, b, c});
  };

  constexpr std::array<std::array<int, 3>, 6> kAxisOrders{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k + 1 < n[2]; ++k) {
    for (int j = 0; j + 1 < n[1]; ++j) {
      for (int i = 0; i + 1 < n[0]; ++i) {
        for (const auto& order : kAxisOrders) {
          std::array<int, 3> c{i, j, k};
          std::array<std::uint64_t, 4> tet{};
          tet[0] = node(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[order[s]];
            tet[s + 1] = node(c[0], c[1], c[2]);
          }
          std::vector<std::uint64_t> in, out;
          for (std::uint64_t v : tet) (values[v] < 0.0 ? in : out).push_back(v);
          if (in.empty() || out.empty()) continue;
          Vec3 cin = Vec3::Zero(), cout = Vec3::Zero();
          for (auto v : in) cin += position(v) / static_cast<double>(in.size());
          for (auto v : out) cout += position(v) / static_cast<double>(out.size());
          const Vec3 dir = cout - cin;
          if (in.size() == 1 || out.size() == 1) {
            const auto& lone = in.size() == 1 ? in : out;
            const auto& rest = in.size() == 1 ? out : in;
            emit(crossing(lone[0], rest[0]), crossing(lone[0], rest[1]), crossing(lone[0], rest[2]), dir);
          } else {
            const int p00 = crossing(in[0], out[0]);
            const int p01 = crossing(in[0], out[1]);
            const int p11 = crossing(in[1], out[1]);
            const int p10 = crossing(in[1], out[0]);
            emit(p00, p01, p11, dir);
            emit(p00, p11, p10, dir);
          }
        }
      }
    }
  }
  return mesh;
}

Vec3 field_gradient(const std::function<double(const Vec3&)>& field, const Vec3& x, double step) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = step;
    g[k] = (field(x + e) - field(x - e)) / (2.0 * step);
  }
  return g;
}

// Newton steps along the field gradient onto the zero level set.
Vec3 project_to_surface(const std::function<double(const Vec3&)>& field, Vec3 x, double h) {
  for (int it = 0; it < 4; ++it) {
    const double v = field(x);
    const Vec3 g = field_gradient(field, x, 1e-3 * h);
    const double g2 = g.squaredNorm();
    if (g2 < 1e-12) break;
    const Vec3 dx = (v / g2) * g;
    x -= dx.norm() > 0.5 * h ? (0.5 * h / dx.norm()) * dx : dx;
  }
  return x;
}

// Marching-tet output inherits the lattice's faceting, and the Voronoi
// vertices of such a sample trace spurious sheets along the lattice axes.
// Tangential Laplacian relaxation followed by projection onto the level set
// spreads the vertices evenly over the smooth surface. A step that would flip
// a face against the field gradient is undone for that vertex.
void relax(TriangleMesh& mesh, const std::function<double(const Vec3&)>& field, double h, int iterations) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<std::vector<int>> ring(nv), incident(nv);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      ring[t[k]].push_back(t[(k + 1) % 3]);
      incident[t[k]].push_back(f);
    }
  }
  const auto upright = [&](int v) {
    for (int f : incident[v]) {
      const Face& t = mesh.faces[f];
      const Vec3& a = mesh.vertices[t[0]];
      const Vec3 n = (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
      const Vec3 c = (a + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
      if (n.dot(field_gradient(field, c, 1e-3 * h)) <= 0.0 || n.norm() < 1e-6 * h * h) return false;
    }
    return true;
  };
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < nv; ++v) {
      if (ring[v].empty()) continue;
      Vec3 mean = Vec3::Zero();
      for (int w : ring[v]) mean += mesh.vertices[w];
      mean /= static_cast<double>(ring[v].size());
      const Vec3 old = mesh.vertices[v];
      const Vec3 n = field_gradient(field, old, 1e-3 * h).normalized();
      Vec3 d = 0.5 * (mean - old);
      d -= d.dot(n) * n;
      mesh.vertices[v] = project_to_surface(field, old + d, h);
      if (!mesh.vertices[v].allFinite() || !upright(static_cast<int>(v))) mesh.vertices[v] = old;
    }
  }
}

// Keeps the connected component with the most faces.
TriangleMesh largest_component(const TriangleMesh& mesh) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  const std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Face& f : mesh.faces) {
    for (int k = 1; k < 3; ++k) {
      const int a = find(f[0]), b = find(f[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::unordered_map<int, int> count;
  for (const Face& f : mesh.faces) ++count[find(f[0])];
  int best = -1, best_count = -1;
  for (const auto& [root, c] : count) {
    if (c > best_count || (c == best_count && root < best)) best = root, best_count = c;
  }
  TriangleMesh out;
  out.label = mesh.label;
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (const Face& f : mesh.faces) {
    if (find(f[0]) != best) continue;
    Face g{};
    for (int k = 0; k < 3; ++k) {
      if (remap[f[k]] < 0) {
        remap[f[k]] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[f[k]]);
      }
      g[k] = remap[f[k]];
    }
    out.faces.push_back(g);
  }
  return out;
}

void check_tree(const std::vector<TubeSegment>& segments, double noise) {
  if (!(noise >= 0.0 && noise < 0.5)) throw ValidationError("noise must be in [0, 0.5)");
  double rmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.radius > 0.0) || !((s.b - s.a).norm() > 0.0)) {
      throw ValidationError("segment " + std::to_string(i) + " needs positive radius and length");
    }
    if (s.parent >= 0 && !(s.radius < segments[s.parent].radius)) {
      throw ValidationError("segment " + std::to_string(i) + " must be thinner than its parent");
    }
    rmin = std::min(rmin, s.radius);
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (std::size_t j = i + 1; j < segments.size(); ++j) {
      const double need = segments[i].radius + segments[j].radius + 2.0 * noise * rmin + 0.5 * rmin;
      const bool clash = share_endpoint(segments[i], segments[j])
                             ? folds_back(segments[i], segments[j], need) || folds_back(segments[j], segments[i], need)
                             : segment_segment_distance(segments[i], segments[j]) <= need;
      if (clash) {
        throw ValidationError("segments " + std::to_string(i) + " and " + std::to_string(j) +
                              " fail the clearance check");
      }
    }
  }
}

Fixture tube_tree(std::vector<TubeSegment> segments, const FixtureParams& params, std::uint64_t seed,
                  const std::string& label) {
  check_tree(segments, params.noise);
  if (!(params.cells_per_radius > 0.0)) throw ValidationError("cells_per_radius must be positive");
  if (params.relax_iterations < 0) throw ValidationError("relax_iterations must be non-negative");
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  Aabb box;
  for (const auto& s : segments) {
    rmin = std::min(rmin, s.radius);
    rmax = std::max(rmax, s.radius);
    box.extend(s.a);
    box.extend(s.b);
  }
  const double h = rmin / params.cells_per_radius;
  const double amplitude = params.noise * rmin;
  const double blend = 0.25 * rmin;
  box.min.array() -= rmax + amplitude + 2.0 * h;
  box.max.array() += rmax + amplitude + 2.0 * h;

  const WaveNoise noise(seed, 1.5 * rmin);
  const auto field = [&](const Vec3& x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : segments) {
      const double di = segment_distance(x, s.a, s.b) - s.radius;
      d = std::isinf(d) ? di : smooth_min(d, di, blend);
    }
    return amplitude > 0.0 ? d - amplitude * noise(x) : d;
  };

  Fixture fx;
  fx.mesh = largest_component(polygonize(field, box, h));
  relax(fx.mesh, field, h, params.relax_iterations);
  fx.mesh.label = label;
  fx.segments = segments;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    fx.centerlines.push_back({s.a, s.b});
    fx.analytic_volume += kPi * s.radius * s.radius * (s.b - s.a).norm();
    fx.analytic_area += 2.0 * kPi * s.radius * (s.b - s.a).norm();
    const bool has_children =
        std::any_of(segments.begin(), segments.end(), [i](const TubeSegment& t) { return t.parent == static_cast<int>(i); });
    if (has_children) fx.junctions.push_back(s.b);
  }
  validate(fx.mesh);
  return fx;
}

Fixture cylinder(const FixtureParams& p, std::uint64_t seed) {
  if (!(p.radius > 0.0) || !(p.length > 0.0)) throw ValidationError("cylinder needs positive radius and length");
  if (p.target_faces < 64) throw ValidationError("cylinder needs at least 64 faces");
  if (!(p.noise >= 0.0 && p.noise < 0.5)) throw ValidationError("noise must be in [0, 0.5)");
  const double r = p.radius, len = p.length;
  const double h = std::sqrt(4.0 * kPi * r * (len + 2.0 * r) / p.target_faces);
  const int s = std::max(6, static_cast<int>(std::lround(2.0 * kPi * r / h)));
  const int m = std::max(1, static_cast<int>(std::lround(len / h)));
  const int c = std::max(1, static_cast<int>(std::lround(r / h)));

  std::mt19937_64 rng(seed);
  const auto jitter = [&] { return p.noise > 0.0 ? p.noise * r * uniform_pm1(rng) : 0.0; };

  TriangleMesh mesh;
  mesh.label = "cylinder";
  const auto ring_vertex = [s](int first, int i) { return first + (i % s); };
  // Lateral rings from z=0 to z=len; the first and last are the cap rims.
  std::vector<int> lateral(m + 1);
  for (int j = 0; j <= m; ++j) {
    lateral[j] = static_cast<int>(mesh.vertices.size());
    const double z = len * j / m;
    for (int i = 0; i < s; ++i) {
      const double theta = 2.0 * kPi * i / s;
      const double rr = r + jitter();
      mesh.vertices.emplace_back(rr * std::cos(theta), rr * std::sin(theta), z);
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < s; ++i) {
      const int a = ring_vertex(lateral[j], i), b = ring_vertex(lateral[j], i + 1);
      const int cc = ring_vertex(lateral[j + 1], i + 1), d = ring_vertex(lateral[j + 1], i);
      mesh.faces.push_back({a, b, cc});
      mesh.faces.push_back({a, cc, d});
    }
  }
  // Caps: concentric rings with the same vertex count and a center fan.
  for (int top = 0; top < 2; ++top) {
    const double z0 = top ? len : 0.0;
    int outer = top ? lateral[m] : lateral[0];
    for (int k = c - 1; k >= 1; --k) {
      const int inner = static_cast<int>(mesh.vertices.size());
      const double rho = r * k / c;
      for (int i = 0; i < s; ++i) {
        const double theta = 2.0 * kPi * i / s;
        mesh.vertices.emplace_back(rho * std::cos(theta), rho * std::sin(theta), z0 + jitter());
      }
      for (int i = 0; i < s; ++i) {
        const int o0 = ring_vertex(outer, i), o1 = ring_vertex(outer, i + 1);
        const int i0 = ring_vertex(inner, i), i1 = ring_vertex(inner, i + 1);
        if (top) {
          mesh.faces.push_back({o0, o1, i1});
          mesh.faces.push_back({o0, i1, i0});
        } else {
          mesh.faces.push_back({o0, i1, o1});
          mesh.faces.push_back({o0, i0, i1});
        }
      }
      outer = inner;
    }
    const int center = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(0.0, 0.0, z0 + jitter());
    for (int i = 0; i < s; ++i) {
      const int o0 = ring_vertex(outer, i), o1 = ring_vertex(outer, i + 1);
      if (top) {
        mesh.faces.push_back({o0, o1, center});
      } else {
        mesh.faces.push_back({o0, center, o1});
      }
    }
  }

  Fixture fx;
  fx.mesh = std::move(mesh);
  fx.segments.push_back({Vec3(0, 0, 0), Vec3(0, 0, len), r, -1});
  fx.centerlines.push_back({Vec3(0, 0, 0), Vec3(0, 0, len)});
  fx.analytic_volume = kPi * r * r * len;
  fx.analytic_area = 2.0 * kPi * r * len + 2.0 * kPi * r * r;
  validate(fx.mesh);
  return fx;
}

Fixture box(const FixtureParams& p) {
  const Vec3 lo = p.box_min, hi = p.box_max;
  if (!((hi - lo).array() > 0.0).all()) throw ValidationError("box needs positive extents");
  if (p.box_divisions < 1) throw ValidationError("box needs at least one division");
  const int d = p.box_divisions;
  TriangleMesh mesh;
  mesh.label = "box";
  std::unordered_map<std::uint64_t, int> lattice;
  const auto vertex = [&](std::array<int, 3> ijk) {
    const std::uint64_t key = (static_cast<std::uint64_t>(ijk[2]) * (d + 1) + ijk[1]) * (d + 1) + ijk[0];
    const auto it = lattice.find(key);
    if (it != lattice.end()) return it->second;
    Vec3 x;
    for (int k = 0; k < 3; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * ijk[k] / d;
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(x);
    lattice.emplace(key, id);
    return id;
  };
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          const auto corner = [&](int du, int dv) {
            std::array<int, 3> ijk{};
            ijk[axis] = side * d;
            ijk[u] = a + du;
            ijk[v] = b + dv;
            return vertex(ijk);
          };
          const int c00 = corner(0, 0), c10 = corner(1, 0), c11 = corner(1, 1), c01 = corner(0, 1);
          if (side == 1) {
            mesh.faces.push_back({c00, c10, c11});
            mesh.faces.push_back({c00, c11, c01});
          } else {
            mesh.faces.push_back({c00, c11, c10});
            mesh.faces.push_back({c00, c01, c11});
          }
        }
      }
    }
  }
  Fixture fx;
  fx.mesh = std::move(mesh);
  const Vec3 e = hi - lo;
  fx.analytic_volume = e.prod();
  fx.analytic_area = 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
  validate(fx.mesh);
  return fx;
}

}  // namespace

std::optional<FixtureKind> parse_fixture_kind(const std::string& name) {
  if (name == "cylinder") return FixtureKind::kCylinder;
  if (name == "y_tube") return FixtureKind::kYTube;
  if (name == "three_level_tree") return FixtureKind::kThreeLevelTree;
  if (name == "box") return FixtureKind::kBox;
  return std::nullopt;
}

std::string to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::kCylinder:
      return "cylinder";
    case FixtureKind::kYTube:
      return "y_tube";
    case FixtureKind::kThreeLevelTree:
      return "three_level_tree";
    case FixtureKind::kBox:
      return "box";
  }
  return "unknown";
}

std::vector<TubeSegment> y_tube_segments(const FixtureParams& p) {
  const Vec3 junction(0, 0, p.junction_z);
  const double angle = p.arm_angle_deg * kPi / 180.0;
  const Vec3 left(-std::sin(angle), 0.0, std::cos(angle));
  const Vec3 right(std::sin(angle), 0.0, std::cos(angle));
  return {{Vec3(0, 0, 0), junction, p.trunk_radius, -1},
          {junction, junction + p.arm_length * left, p.branch_radius, 0},
          {junction, junction + p.arm_length * right, p.branch_radius, 0}};
}

std::vector<TubeSegment> three_level_tree_segments() {
  const Vec3 fork(0, 0, 4);
  const Vec3 left(-2.5, 0, 7), right(2.5, 0, 7);
  return {{Vec3(0, 0, 0), fork, 1.0, -1},         {fork, left, 0.7, 0},
          {fork, right, 0.7, 0},                  {left, Vec3(-2.5, -1.5, 9), 0.45, 1},
          {left, Vec3(-2.5, 1.5, 9), 0.45, 1},    {right, Vec3(2.5, -1.5, 9), 0.45, 2},
          {right, Vec3(2.5, 1.5, 9), 0.45, 2}};
}

Fixture generate_fixture(FixtureKind kind, const FixtureParams& params, std::uint64_t seed) {
  switch (kind) {
    case FixtureKind::kCylinder:
      return cylinder(params, seed);
    case FixtureKind::kYTube:
      return tube_tree(y_tube_segments(params), params, seed, "y_tube");
    case FixtureKind::kThreeLevelTree:
      return tube_tree(three_level_tree_segments(), params, seed, "three_level_tree");
    case FixtureKind::kBox:
      return box(params);
  }
  throw ValidationError("unknown fixture kind");
}

}  // namespace tubeskel
