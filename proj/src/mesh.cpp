#include "tubeskel/mesh.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace tubeskel {
namespace {

struct EdgeRecord {
  int a;
  int b;
  int face;
  bool operator<(const EdgeRecord& o) const { return std::tie(a, b, face) < std::tie(o.a, o.b, o.face); }
};

// Undirected edges, each with the face it came from, sorted by (min, max).
std::vector<EdgeRecord> undirected_edges(const std::vector<Face>& faces) {
  std::vector<EdgeRecord> edges;
  edges.reserve(faces.size() * 3);
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int u = faces[f][k];
      const int v = faces[f][(k + 1) % 3];
      edges.push_back({std::min(u, v), std::max(u, v), f});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Shell id per face (dense, ordered by smallest face index).
std::vector<int> face_shells(const std::vector<Face>& faces, const std::vector<EdgeRecord>& edges,
                             int* shell_count) {
  DisjointSets sets(faces.size());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i].a == edges[i + 1].a && edges[i].b == edges[i + 1].b) sets.unite(edges[i].face, edges[i + 1].face);
  }
  std::vector<int> dense(faces.size(), -1);
  std::vector<int> shell(faces.size());
  int count = 0;
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    const int r = sets.find(f);
    if (dense[r] < 0) dense[r] = count++;
    shell[f] = dense[r];
  }
  *shell_count = count;
  return shell;
}

std::string edge_name(int a, int b) {
  std::ostringstream os;
  os << "(" << a << "," << b << ")";
  return os.str();
}

}  // namespace

std::size_t TriangleMesh::edge_count() const {
  const auto edges = undirected_edges(faces);
  std::size_t count = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i == 0 || edges[i].a != edges[i - 1].a || edges[i].b != edges[i - 1].b) ++count;
  }
  return count;
}

long TriangleMesh::euler_characteristic() const {
  return static_cast<long>(vertices.size()) - static_cast<long>(edge_count()) + static_cast<long>(faces.size());
}

double TriangleMesh::signed_volume() const {
  double volume = 0.0;
  for (const Face& f : faces) volume += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]])) / 6.0;
  return volume;
}

double TriangleMesh::surface_area() const {
  double area = 0.0;
  for (const Face& f : faces) area += triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
  return area;
}

std::vector<ShellTopology> shell_topology(const TriangleMesh& mesh) {
  const auto edges = undirected_edges(mesh.faces);
  int shells = 0;
  const auto shell = face_shells(mesh.faces, edges, &shells);
  std::vector<ShellTopology> out(shells);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) ++out[shell[f]].faces;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i == 0 || edges[i].a != edges[i - 1].a || edges[i].b != edges[i - 1].b) ++out[shell[edges[i].face]].edges;
  }
  std::vector<int> vertex_shell(mesh.vertices.size(), -1);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int v : mesh.faces[f]) {
      if (vertex_shell[v] < 0) {
        vertex_shell[v] = shell[f];
        ++out[shell[f]].vertices;
      }
    }
  }
  return out;
}

void validate(const TriangleMesh& mesh, const ValidationOptions& options) {
  const int nv = static_cast<int>(mesh.vertices.size());
  if (mesh.faces.empty()) throw ValidationError("mesh has no faces");
  const double diag = mesh.bounds().diagonal();
  const double min_area = options.degenerate_area * diag * diag;

  std::vector<char> referenced(mesh.vertices.size(), 0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (int v : t) {
      if (v < 0 || v >= nv) throw ValidationError("face " + std::to_string(f) + " references invalid vertex " + std::to_string(v));
      referenced[v] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw ValidationError("degenerate face " + std::to_string(f) + " repeats a vertex");
    }
    if (!(triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) > min_area)) {
      throw ValidationError("degenerate (zero-area) face " + std::to_string(f));
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (!referenced[v]) throw ValidationError("isolated vertex " + std::to_string(v));
    if (!mesh.vertices[v].allFinite()) throw ValidationError("non-finite vertex " + std::to_string(v));
  }

  const auto edges = undirected_edges(mesh.faces);
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j].a == edges[i].a && edges[j].b == edges[i].b) ++j;
    if (j - i == 1) throw ValidationError("open boundary at edge " + edge_name(edges[i].a, edges[i].b));
    if (j - i > 2) throw ValidationError("non-manifold edge " + edge_name(edges[i].a, edges[i].b));
    i = j;
  }

  // Each directed edge must occur once; a repeat means a neighbor is flipped.
  std::vector<EdgeRecord> directed;
  directed.reserve(mesh.faces.size() * 3);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    for (int k = 0; k < 3; ++k) directed.push_back({mesh.faces[f][k], mesh.faces[f][(k + 1) % 3], f});
  }
  std::sort(directed.begin(), directed.end());
  for (std::size_t i = 0; i + 1 < directed.size(); ++i) {
    if (directed[i].a == directed[i + 1].a && directed[i].b == directed[i + 1].b) {
      throw ValidationError("inconsistent orientation at face " + std::to_string(directed[i + 1].face) + " (edge " +
                            edge_name(directed[i].a, directed[i].b) + ")");
    }
  }

  const auto shells = shell_topology(mesh);
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const long chi = shells[s].euler();
    if (chi != 2) {
      throw ValidationError("shell " + std::to_string(s) + " has Euler characteristic " + std::to_string(chi) +
                            " (genus " + std::to_string((2 - chi) / 2) + " > 0)");
    }
  }
  if (shells.size() > 1 && !options.allow_multiple_shells) {
    throw ValidationError("mesh has " + std::to_string(shells.size()) + " shells; a single shell is required");
  }
  const double volume = mesh.signed_volume();
  if (!(volume > 0.0)) {
    throw ValidationError("inward-facing orientation (signed volume " + std::to_string(volume) + ")");
  }
}

TriangleMesh weld(const TriangleMesh& raw, double relative_tolerance) {
  const double tol = relative_tolerance * raw.bounds().diagonal();
  std::vector<int> remap(raw.vertices.size(), -1);
  std::vector<Vec3> merged;
  merged.reserve(raw.vertices.size());

  if (tol > 0.0) {
    struct KeyHash {
      std::size_t operator()(const std::array<long long, 3>& k) const {
        std::size_t h = 1469598103934665603ull;
        for (long long x : k) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
        return h;
      }
    };
    std::unordered_map<std::array<long long, 3>, std::vector<int>, KeyHash> buckets;
    const double tol2 = tol * tol;
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
      const Vec3& p = raw.vertices[i];
      const std::array<long long, 3> key{static_cast<long long>(std::floor(p.x() / tol)),
                                         static_cast<long long>(std::floor(p.y() / tol)),
                                         static_cast<long long>(std::floor(p.z() / tol))};
      int found = -1;
      for (long long dx = -1; dx <= 1 && found < 0; ++dx) {
        for (long long dy = -1; dy <= 1 && found < 0; ++dy) {
          for (long long dz = -1; dz <= 1 && found < 0; ++dz) {
            const auto it = buckets.find({key[0] + dx, key[1] + dy, key[2] + dz});
            if (it == buckets.end()) continue;
            for (int rep : it->second) {
              if ((merged[rep] - p).squaredNorm() <= tol2) {
                found = rep;
                break;
              }
            }
          }
        }
      }
      if (found < 0) {
        found = static_cast<int>(merged.size());
        merged.push_back(p);
        buckets[key].push_back(found);
      }
      remap[i] = found;
    }
  } else {
    std::map<std::tuple<double, double, double>, int> exact;
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
      const Vec3& p = raw.vertices[i];
      const auto [it, inserted] = exact.emplace(std::make_tuple(p.x(), p.y(), p.z()), static_cast<int>(merged.size()));
      if (inserted) merged.push_back(p);
      remap[i] = it->second;
    }
  }

  TriangleMesh out;
  out.label = raw.label;
  out.faces.reserve(raw.faces.size());
  std::vector<int> compact(merged.size(), -1);
  for (const Face& f : raw.faces) {
    Face g{};
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || f[k] >= static_cast<int>(remap.size())) {
        throw ValidationError("face references invalid vertex " + std::to_string(f[k]));
      }
      const int m = remap[f[k]];
      if (compact[m] < 0) {
        compact[m] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(merged[m]);
      }
      g[k] = compact[m];
    }
    out.faces.push_back(g);
  }
  return out;
}

TriangleMesh canonicalize(const TriangleMesh& mesh) {
  std::vector<int> order(mesh.vertices.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec3& p = mesh.vertices[a];
    const Vec3& q = mesh.vertices[b];
    return std::make_tuple(p.x(), p.y(), p.z(), a) < std::make_tuple(q.x(), q.y(), q.z(), b);
  });
  std::vector<int> rank(mesh.vertices.size());
  TriangleMesh out;
  out.label = mesh.label;
  for (std::size_t i = 0; i < order.size(); ++i) {
    rank[order[i]] = static_cast<int>(i);
    out.vertices.push_back(mesh.vertices[order[i]]);
  }
  for (const Face& f : mesh.faces) {
    Face g{rank[f[0]], rank[f[1]], rank[f[2]]};
    const auto smallest = std::min_element(g.begin(), g.end()) - g.begin();
    std::rotate(g.begin(), g.begin() + smallest, g.end());
    out.faces.push_back(g);
  }
  std::sort(out.faces.begin(), out.faces.end());
  return out;
}

TetComplex TetComplex::from_cells(std::vector<Vec3> vertices, std::vector<Cell> cells, InvertedCellPolicy policy) {
  const int nv = static_cast<int>(vertices.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Cell& cell = cells[c];
    for (int v : cell) {
      if (v < 0 || v >= nv) {
        throw ValidationError("cell " + std::to_string(c) + " references vertex index " + std::to_string(v) +
                              " out of range");
      }
    }
    const int o = predicates::orient3d(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]], vertices[cell[3]]);
    if (o == 0) throw ValidationError("degenerate (flat) cell " + std::to_string(c));
    if (o < 0) {
      if (policy == InvertedCellPolicy::kReject) throw ValidationError("inverted cell " + std::to_string(c));
      std::swap(cell[2], cell[3]);
    }
  }

  struct FaceSlot {
    std::array<int, 3> key;
    int cell;
    int local;
    bool operator<(const FaceSlot& o) const { return std::tie(key, cell, local) < std::tie(o.key, o.cell, o.local); }
  };
  std::vector<FaceSlot> slots;
  slots.reserve(cells.size() * 4);
  for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
    for (int k = 0; k < 4; ++k) {
      std::array<int, 3> key{};
      for (int j = 0; j < 3; ++j) key[j] = cells[c][kFaceLocal[k][j]];
      std::sort(key.begin(), key.end());
      slots.push_back({key, c, k});
    }
  }
  std::sort(slots.begin(), slots.end());

  TetComplex out;
  out.adjacency.assign(cells.size(), {-1, -1, -1, -1});
  for (std::size_t i = 0; i < slots.size();) {
    std::size_t j = i;
    while (j < slots.size() && slots[j].key == slots[i].key) ++j;
    if (j - i > 2) {
      throw ValidationError("face (" + std::to_string(slots[i].key[0]) + "," + std::to_string(slots[i].key[1]) + "," +
                            std::to_string(slots[i].key[2]) + ") is shared by more than two cells");
    }
    if (j - i == 2) {
      out.adjacency[slots[i].cell][slots[i].local] = slots[i + 1].cell;
      out.adjacency[slots[i + 1].cell][slots[i + 1].local] = slots[i].cell;
    }
    i = j;
  }
  out.vertices = std::move(vertices);
  out.cells = std::move(cells);
  for (int c = 0; c < static_cast<int>(out.cells.size()); ++c) {
    for (int k = 0; k < 4; ++k) {
      if (out.adjacency[c][k] < 0) out.boundary_faces.push_back({c, k, out.face(c, k)});
    }
  }
  return out;
}

std::size_t TetComplex::interior_face_count() const {
  std::size_t shared = 0;
  for (const auto& adj : adjacency) {
    for (int n : adj) shared += (n >= 0);
  }
  return shared / 2;
}

Vec3 TetComplex::centroid(int cell) const {
  const Cell& c = cells[cell];
  return 0.25 * (vertices[c[0]] + vertices[c[1]] + vertices[c[2]] + vertices[c[3]]);
}

double TetComplex::volume(int cell) const {
  const Cell& c = cells[cell];
  return tet_signed_volume(vertices[c[0]], vertices[c[1]], vertices[c[2]], vertices[c[3]]);
}

double TetComplex::total_volume() const {
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c) sum += volume(c);
  return sum;
}

Face TetComplex::face(int cell, int local) const {
  const Cell& c = cells[cell];
  return {c[kFaceLocal[local][0]], c[kFaceLocal[local][1]], c[kFaceLocal[local][2]]};
}

}  // namespace tubeskel
