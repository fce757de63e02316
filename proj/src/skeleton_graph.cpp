#include "tubeskel/skeleton_graph.hpp"

#include "tubeskel/errors.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace tubeskel {

SkeletonGraph::SkeletonGraph(std::vector<GraphNode> nodes, std::vector<GraphLink> links, LinkWeight metric,
                             double min_weight)
    : nodes_(std::move(nodes)), links_(std::move(links)), metric_(metric), min_weight_(min_weight) {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const GraphLink& l = links_[i];
    if (l.a < 0 || l.b < 0 || l.a >= size() || l.b >= size() || l.a == l.b) {
      throw ValidationError("link " + std::to_string(i) + " has invalid endpoints");
    }
    if (!(l.weight > 0.0)) throw ValidationError("link " + std::to_string(i) + " has non-positive weight");
  }
  index();
}

void SkeletonGraph::index() {
  const int n = size();
  offsets_.assign(n + 1, 0);
  for (const GraphLink& l : links_) {
    ++offsets_[l.a + 1];
    ++offsets_[l.b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  incidence_.resize(2 * links_.size());
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
    incidence_[fill[links_[i].a]++] = {links_[i].b, i};
    incidence_[fill[links_[i].b]++] = {links_[i].a, i};
  }
  for (int v = 0; v < n; ++v) {
    std::sort(incidence_.begin() + offsets_[v], incidence_.begin() + offsets_[v + 1],
              [](const Incidence& x, const Incidence& y) { return x.node < y.node; });
  }

  component_.assign(n, -1);
  component_count_ = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (component_[s] >= 0) continue;
    component_[s] = component_count_;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const Incidence& inc : neighbors(v)) {
        if (component_[inc.node] < 0) {
          component_[inc.node] = component_count_;
          stack.push_back(inc.node);
        }
      }
    }
    ++component_count_;
  }
}

std::vector<std::vector<int>> SkeletonGraph::components() const {
  std::vector<std::vector<int>> out(component_count_);
  for (int v = 0; v < size(); ++v) out[component_[v]].push_back(v);
  return out;
}

double SkeletonGraph::weight_between(const Vec3& a, const Vec3& b) const {
  if (metric_ == LinkWeight::kHops) return 1.0;
  return std::max((a - b).norm(), min_weight_);
}

SkeletonGraph SkeletonGraph::from_weighted_links(std::vector<Vec3> positions, std::vector<GraphLink> links) {
  std::vector<GraphNode> nodes(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    nodes[i].cell = static_cast<int>(i);
    nodes[i].position = positions[i];
  }
  return SkeletonGraph(std::move(nodes), std::move(links));
}

SkeletonGraph SkeletonGraph::from_links(std::vector<Vec3> positions, const std::vector<std::pair<int, int>>& links,
                                        LinkWeight weight) {
  std::vector<GraphLink> out;
  out.reserve(links.size());
  for (auto [a, b] : links) {
    const bool valid = a >= 0 && b >= 0 && a < static_cast<int>(positions.size()) &&
                       b < static_cast<int>(positions.size());
    const double w = weight == LinkWeight::kHops ? 1.0 : valid ? (positions[a] - positions[b]).norm() : 1.0;
    out.push_back({a, b, w});
  }
  SkeletonGraph g = from_weighted_links(std::move(positions), std::move(out));
  g.metric_ = weight;
  return g;
}

SkeletonGraph build_graph(const TetComplex& complex, const GraphOptions& options) {
  const double diag = std::max(Aabb::of(complex.vertices).diagonal(), std::numeric_limits<double>::min());
  const double clamp = options.clamp_factor * diag;
  const int n = static_cast<int>(complex.cells.size());

  std::vector<GraphNode> nodes(n);
  for (int c = 0; c < n; ++c) {
    const Cell& cell = complex.cells[c];
    const Vec3& a = complex.vertices[cell[0]];
    GraphNode& node = nodes[c];
    node.cell = c;
    const auto center = tet_circumcenter(a, complex.vertices[cell[1]], complex.vertices[cell[2]],
                                         complex.vertices[cell[3]]);
    node.circumradius = center ? (*center - a).norm() : std::numeric_limits<double>::infinity();
    if (center && node.circumradius <= clamp) {
      node.position = *center;
    } else {
      node.position = complex.centroid(c);
      node.clamped = true;
    }
    for (int k = 0; k < 4; ++k) {
      const Face f = complex.face(c, k);
      node.largest_face_area = std::max(
          node.largest_face_area, triangle_area(complex.vertices[f[0]], complex.vertices[f[1]], complex.vertices[f[2]]));
    }
  }

  const double min_weight = 1e-9 * diag;
  std::vector<GraphLink> links;
  links.reserve(complex.interior_face_count());
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < 4; ++k) {
      const int d = complex.adjacency[c][k];
      if (d <= c) continue;
      const double w = options.weight == LinkWeight::kHops
                           ? 1.0
                           : std::max((nodes[c].position - nodes[d].position).norm(), min_weight);
      links.push_back({c, d, w});
    }
  }
  return SkeletonGraph(std::move(nodes), std::move(links), options.weight, min_weight);
}

RootSelection select_root(const SkeletonGraph& graph, RootMode mode, std::optional<int> manual_pick) {
  if (graph.size() == 0) throw ValidationError("cannot select a root in an empty graph");
  RootSelection sel;
  sel.mode = mode;
  sel.roots.assign(graph.component_count(), -1);
  for (int v = 0; v < graph.size(); ++v) {
    int& r = sel.roots[graph.component(v)];
    const auto key = [&graph](int n) { return std::make_pair(-graph.nodes()[n].largest_face_area, graph.nodes()[n].cell); };
    if (r < 0 || key(v) < key(r)) r = v;
  }
  if (mode == RootMode::kManual) {
    if (!manual_pick) throw ValidationError("manual root mode requires a node id");
    if (*manual_pick < 0 || *manual_pick >= graph.size()) {
      throw ValidationError("manual root " + std::to_string(*manual_pick) + " is not a graph node");
    }
    sel.roots[graph.component(*manual_pick)] = *manual_pick;
  }
  return sel;
}

void write_edge_list(const SkeletonGraph& graph, std::ostream& out) {
  out << graph.size() << ' ' << graph.links().size() << '\n';
  for (const GraphLink& l : graph.links()) out << l.a << ' ' << l.b << ' ' << l.weight << '\n';
}

}  // namespace tubeskel
