#include "tubeskel/pipeline.hpp"

#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/tetrahedralize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <type_traits>

namespace tubeskel {
namespace {

using Clock = std::chrono::steady_clock;

const std::set<std::string> kStages{"outrageous", "shave", "straighten"};

// Runs one stage, accumulating its wall time and prefixing errors with the
// stage name while keeping the exception type.
template <typename F>
auto run_stage(const char* name, double& seconds, F&& body) {
  const auto start = Clock::now();
  const auto stop = [&] { seconds += std::chrono::duration<double>(Clock::now() - start).count(); };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      body();
      stop();
    } else {
      auto value = body();
      stop();
      return value;
    }
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(name) + ": " + e.what());
  }
}

std::string to_string(TetSource s) { return s == TetSource::kInternal ? "internal" : "files"; }

nlohmann::json mesh_json(const TriangleMesh& mesh, ArrayEncoding enc) {
  std::vector<double> v;
  v.reserve(3 * mesh.vertices.size());
  for (const Vec3& p : mesh.vertices) v.insert(v.end(), {p.x(), p.y(), p.z()});
  std::vector<int> f;
  f.reserve(3 * mesh.faces.size());
  for (const Face& t : mesh.faces) f.insert(f.end(), t.begin(), t.end());
  return {{"label", mesh.label}, {"vertices", encode_f32(v, enc)}, {"faces", encode_i32(f, enc)}};
}

nlohmann::json complex_json(const TetComplex& c, ArrayEncoding enc) {
  std::vector<double> v;
  v.reserve(3 * c.vertices.size());
  for (const Vec3& p : c.vertices) v.insert(v.end(), {p.x(), p.y(), p.z()});
  std::vector<int> cells;
  cells.reserve(4 * c.cells.size());
  for (const Cell& t : c.cells) cells.insert(cells.end(), t.begin(), t.end());
  return {{"vertices", encode_f32(v, enc)}, {"cells", encode_i32(cells, enc)}};
}

nlohmann::json segmentation_json(const SegmentationMap& map, const MedialAxis& axis, const std::vector<int>& ids,
                                 ArrayEncoding enc) {
  const auto subtree = subtree_aggregates(map, axis);
  std::vector<int> cells, sub_cells;
  std::vector<double> volume, area, sub_volume, sub_area;
  for (int n : ids) {
    cells.push_back(map.node[n].cells);
    volume.push_back(map.node[n].volume);
    area.push_back(map.node[n].surface_area);
    sub_cells.push_back(subtree[n].cells);
    sub_volume.push_back(subtree[n].volume);
    sub_area.push_back(subtree[n].surface_area);
  }
  return {{"label", map.label},
          {"cell_node", encode_i32(map.assignment, enc)},
          {"total_volume", map.total_volume},
          {"total_surface_area", map.total_surface_area},
          {"node_cells", encode_i32(cells, enc)},
          {"node_volume", encode_f64(volume, enc)},
          {"node_surface_area", encode_f64(area, enc)},
          {"subtree_cells", encode_i32(sub_cells, enc)},
          {"subtree_volume", encode_f64(sub_volume, enc)},
          {"subtree_surface_area", encode_f64(sub_area, enc)}};
}

nlohmann::json properties_json(const std::vector<BranchProperties>& props) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : props) {
    out.push_back({{"branch", p.branch},
                   {"cells", p.cells},
                   {"volume", p.volume},
                   {"surface_area", p.surface_area},
                   {"length", p.length},
                   {"thickness", p.thickness}});
  }
  return out;
}

nlohmann::json report_json(const RefinementReport& r, const ExtractionTrace& trace, ArrayEncoding enc) {
  std::vector<double> reductions;
  for (const auto& s : trace.steps) reductions.push_back(s.reduction);
  return {{"initial_nodes", r.initial_nodes},
          {"after_outrageous", r.after_outrageous},
          {"after_shave", r.after_shave},
          {"final_nodes", r.final_nodes},
          {"removed_outrageous", r.removed_outrageous},
          {"removed_hair", r.removed_hair},
          {"removed_bumpy", r.removed_bumpy},
          {"parity_fallbacks", r.parity_fallbacks},
          {"epsilon", r.epsilon},
          {"epsilon_auto", r.epsilon_auto},
          {"shave_reductions", encode_f64(r.deltas, enc)},
          {"still_outside", r.still_outside},
          {"extraction",
           {{"concatenations", trace.steps.size()},
            {"skipped_leaves", trace.skipped_leaves.size()},
            {"initial_delta", trace.initial_delta},
            {"reductions", encode_f64(reductions, enc)}}}};
}

}  // namespace

void PipelineConfig::validate() const {
  if (tet_source == TetSource::kInternal && artery_path.empty()) throw ValidationError("config: artery mesh path is required");
  if (tet_source == TetSource::kFiles) {
    if (artery_path.empty() || artery_node.empty() || artery_ele.empty()) {
      throw ValidationError("config: tet source 'files' needs the artery mesh and its .node/.ele files");
    }
    if (!territory_path.empty() && (territory_node.empty() || territory_ele.empty())) {
      throw ValidationError("config: tet source 'files' needs .node/.ele files for the territory");
    }
  }
  if (!(weld_tolerance >= 0.0)) throw ValidationError("config: weld tolerance must be non-negative");
  if (!(supersample >= 0.0) || !std::isfinite(supersample)) throw ValidationError("config: supersample must be >= 0");
  if (epsilon && !(*epsilon >= 0.0)) throw ValidationError("config: epsilon must be non-negative");
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw ValidationError("config: alpha thresholds must be non-negative");
  if (root_mode == RootMode::kManual && !manual_root) throw ValidationError("config: manual root mode needs a node id");
  for (const auto& s : skip_stages) {
    if (!kStages.count(s)) throw ValidationError("config: unknown stage '" + s + "'");
  }
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
  j["artery_path"] = artery_path;
  j["territory_path"] = territory_path;
  j["artery_node"] = artery_node;
  j["artery_ele"] = artery_ele;
  j["territory_node"] = territory_node;
  j["territory_ele"] = territory_ele;
  j["format"] = format ? nlohmann::json(tubeskel::to_string(*format)) : nlohmann::json(nullptr);
  j["weld_tolerance"] = weld_tolerance;
  j["tet_source"] = to_string(tet_source);
  j["supersample"] = supersample;
  j["seed"] = seed;
  j["epsilon"] = epsilon ? nlohmann::json(*epsilon) : nlohmann::json("auto");
  j["alpha1"] = alpha1;
  j["alpha2"] = alpha2;
  j["root_mode"] = root_mode == RootMode::kAutomatic ? "automatic" : "manual";
  j["manual_root"] = manual_root ? nlohmann::json(*manual_root) : nlohmann::json(nullptr);
  j["link_weight"] = link_weight == LinkWeight::kEuclidean ? "euclidean" : "hops";
  j["skip_stages"] = skip_stages;
  j["out"] = out;
  j["encoding"] = encoding == ArrayEncoding::kBase64 ? "base64" : "inline";
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.artery_path = j.at("artery_path").get<std::string>();
    c.territory_path = j.at("territory_path").get<std::string>();
    c.artery_node = j.at("artery_node").get<std::string>();
    c.artery_ele = j.at("artery_ele").get<std::string>();
    c.territory_node = j.at("territory_node").get<std::string>();
    c.territory_ele = j.at("territory_ele").get<std::string>();
    if (!j.at("format").is_null()) {
      c.format = parse_surface_format(j.at("format").get<std::string>());
      if (!c.format) throw ValidationError("config: unknown format");
    }
    c.weld_tolerance = j.at("weld_tolerance").get<double>();
    const auto source = j.at("tet_source").get<std::string>();
    if (source != "internal" && source != "files") throw ValidationError("config: unknown tet source " + source);
    c.tet_source = source == "internal" ? TetSource::kInternal : TetSource::kFiles;
    c.supersample = j.at("supersample").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("epsilon").is_number()) c.epsilon = j.at("epsilon").get<double>();
    c.alpha1 = j.at("alpha1").get<double>();
    c.alpha2 = j.at("alpha2").get<double>();
    c.root_mode = j.at("root_mode").get<std::string>() == "manual" ? RootMode::kManual : RootMode::kAutomatic;
    if (!j.at("manual_root").is_null()) c.manual_root = j.at("manual_root").get<int>();
    c.link_weight = j.at("link_weight").get<std::string>() == "hops" ? LinkWeight::kHops : LinkWeight::kEuclidean;
    c.skip_stages = j.at("skip_stages").get<std::set<std::string>>();
    c.out = j.at("out").get<std::string>();
    c.encoding = j.at("encoding").get<std::string>() == "inline" ? ArrayEncoding::kInline : ArrayEncoding::kBase64;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  LoadOptions load;
  load.format = config.format;
  load.weld_tolerance = config.weld_tolerance;
  PipelineInputs inputs;
  double ignored = 0.0;
  run_stage("load", ignored, [&] {
    inputs.artery = load_surface(config.artery_path, load);
    if (!config.territory_path.empty()) inputs.territory = load_surface(config.territory_path, load);
    if (config.tet_source == TetSource::kFiles) {
      inputs.artery_complex = load_tet_complex(config.artery_node, config.artery_ele);
      if (inputs.territory) inputs.territory_complex = load_tet_complex(config.territory_node, config.territory_ele);
    }
  });
  return run_pipeline(config, std::move(inputs));
}

PipelineResult run_pipeline(const PipelineConfig& config, PipelineInputs inputs) {
  PipelineResult r;
  r.inputs = std::move(inputs);
  PipelineTimings& time = r.timings;
  validate(r.inputs.artery);
  if (r.inputs.territory) validate(*r.inputs.territory);

  const BucketGrid artery_grid(r.inputs.artery);
  std::optional<BucketGrid> territory_grid;
  if (r.inputs.territory) territory_grid.emplace(*r.inputs.territory);

  const TetrahedralizeOptions tet{config.supersample, config.seed};
  run_stage("tetrahedralize", time.tetrahedralize, [&] {
    r.artery_complex = r.inputs.artery_complex ? restrict_to_interior(*r.inputs.artery_complex, artery_grid, config.seed)
                                               : delaunay_interior(r.inputs.artery, artery_grid, tet);
    if (territory_grid) {
      r.territory_complex = r.inputs.territory_complex
                                ? restrict_to_interior(*r.inputs.territory_complex, *territory_grid, config.seed)
                                : delaunay_interior(*r.inputs.territory, *territory_grid, tet);
    }
    if (r.artery_complex.cells.empty()) throw NumericError("no interior cells");
  });
  run_stage("graph", time.graph, [&] {
    r.graph = build_graph(r.artery_complex, {config.link_weight});
    r.roots = select_root(r.graph, config.root_mode, config.manual_root);
    const auto components = r.graph.components();
    for (int c = 0; c < static_cast<int>(components.size()); ++c) {
      const int root = r.roots.roots[c];
      if (artery_grid.contains(r.graph.position(root), config.seed)) continue;
      if (config.root_mode == RootMode::kManual && root == *config.manual_root) continue;
      const bool any_inside = std::any_of(components[c].begin(), components[c].end(), [&](int n) {
        return artery_grid.contains(r.graph.position(n), config.seed);
      });
      if (!any_inside) r.dropped_components.push_back(c);
    }
    if (r.dropped_components.size() == components.size()) throw NumericError("no graph node lies inside the surface");
  });
  run_stage("tree_extraction", time.tree_extraction, [&] {
    for (int c = 0; c < static_cast<int>(r.roots.roots.size()); ++c) {
      if (std::binary_search(r.dropped_components.begin(), r.dropped_components.end(), c)) continue;
      const int root = r.roots.roots[c];
      ExtractionTrace trace;
      r.extracted.push_back(extract_tree(r.graph, root, &trace));
      r.traces.push_back(std::move(trace));
    }
  });

  std::vector<SkeletonTree> refined;
  for (const SkeletonTree& extracted : r.extracted) {
    RefinementReport report;
    report.initial_nodes = extracted.size();
    SkeletonTree t = extracted;
    run_stage("outrageous", time.outrageous, [&] {
      if (!config.skip_stages.count("outrageous")) t = remove_outrageous(t, artery_grid, &report, config.seed);
      report.after_outrageous = t.size();
    });
    run_stage("shave", time.shave, [&] {
      if (!config.skip_stages.count("shave")) {
        t = shave_hairs(t, config.epsilon, &report);
      } else {
        report.epsilon = 0.0;
        report.epsilon_auto = false;
      }
      report.after_shave = t.size();
    });
    run_stage("straighten", time.straighten, [&] {
      if (!config.skip_stages.count("straighten")) {
        t = straighten_bumpy(t, r.graph, config.alpha1, config.alpha2, &report);
      }
      report.final_nodes = t.size();
      report.still_outside = outside_nodes(t, artery_grid, config.seed);
    });
    refined.push_back(std::move(t));
    r.reports.push_back(std::move(report));
  }

  run_stage("segmentation", time.segmentation, [&] {
    r.axis = decompose_branches(std::move(refined));
    r.artery_map = segment(r.artery_complex, r.axis, artery_grid, "artery");
    if (r.territory_complex) r.territory_map = segment(*r.territory_complex, r.axis, *territory_grid, "territory");
  });
  run_stage("mass_properties", time.mass_properties, [&] {
    r.artery_properties = mass_properties(r.artery_map, r.axis, &artery_grid);
    if (r.territory_map) r.territory_properties = mass_properties(*r.territory_map, r.axis, &artery_grid);
  });
  return r;
}

nlohmann::json make_bundle(const PipelineConfig& config, const PipelineResult& r) {
  const ArrayEncoding enc = config.encoding;
  nlohmann::json j;
  j["schema"] = kBundleSchema;
  j["schema_version"] = kBundleSchemaVersion;
  j["config"] = config.to_json();
  j["meshes"] = {{"artery", mesh_json(r.inputs.artery, enc)},
                 {"territory", r.inputs.territory ? mesh_json(*r.inputs.territory, enc) : nlohmann::json(nullptr)}};
  j["complexes"] = {
      {"artery", complex_json(r.artery_complex, enc)},
      {"territory", r.territory_complex ? complex_json(*r.territory_complex, enc) : nlohmann::json(nullptr)}};

  int clamped = 0;
  for (const GraphNode& n : r.graph.nodes()) clamped += n.clamped;
  j["graph"] = {{"nodes", r.graph.size()},
                {"links", r.graph.links().size()},
                {"components", r.graph.component_count()},
                {"clamped_nodes", clamped},
                {"dropped_components", r.dropped_components},
                {"root_mode", r.roots.mode == RootMode::kAutomatic ? "automatic" : "manual"}};

  const auto ids = r.axis.nodes();
  std::vector<double> positions;
  std::vector<int> parents, owners;
  for (int n : ids) {
    const Vec3& p = r.axis.trees[r.axis.tree_of(n)].position(n);
    positions.insert(positions.end(), {p.x(), p.y(), p.z()});
    parents.push_back(r.axis.trees[r.axis.tree_of(n)].parent(n));
    owners.push_back(r.axis.node_branch[n]);
  }
  nlohmann::json roots = nlohmann::json::array();
  for (const SkeletonTree& t : r.axis.trees) roots.push_back(t.root());
  nlohmann::json branches = nlohmann::json::array();
  for (const Branch& b : r.axis.branches) {
    branches.push_back(
        {{"id", b.id}, {"parent", b.parent}, {"component", b.component}, {"nodes", b.nodes}, {"length", b.length}});
  }
  j["axis"] = {{"node_ids", encode_i32(ids, enc)},
               {"positions", encode_f32(positions, enc)},
               {"parents", encode_i32(parents, enc)},
               {"node_branch", encode_i32(owners, enc)},
               {"roots", roots},
               {"branches", branches}};

  j["segmentation"] = {
      {"artery", segmentation_json(r.artery_map, r.axis, ids, enc)},
      {"territory", r.territory_map ? segmentation_json(*r.territory_map, r.axis, ids, enc) : nlohmann::json(nullptr)}};
  j["mass_properties"] = {{"artery", properties_json(r.artery_properties)},
                          {"territory", properties_json(r.territory_properties)}};

  nlohmann::json reports = nlohmann::json::array();
  for (std::size_t i = 0; i < r.reports.size(); ++i) reports.push_back(report_json(r.reports[i], r.traces[i], enc));
  j["refinement"] = reports;

  const PipelineTimings& t = r.timings;
  j["timings"] = {{"tetrahedralize", t.tetrahedralize}, {"graph", t.graph},
                  {"tree_extraction", t.tree_extraction}, {"outrageous", t.outrageous},
                  {"shave", t.shave}, {"straighten", t.straighten},
                  {"segmentation", t.segmentation}, {"mass_properties", t.mass_properties},
                  {"phase1", t.phase1()}, {"phase2", t.phase2()},
                  {"phase3", t.phase3()}};
  return j;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs at least two matching samples");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("log-log slope needs positive samples");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

BenchReport bench_scaling(const std::vector<int>& target_faces, const PipelineConfig& config, int repeats) {
  if (target_faces.size() < 4) throw ValidationError("bench needs at least four sizes");
  BenchReport report;
  for (int faces : target_faces) {
    FixtureParams p;
    p.target_faces = faces;
    const Fixture artery = generate_fixture(FixtureKind::kCylinder, p, config.seed);
    FixtureParams box;
    box.box_min = Vec3(-2.5, -2.5, -0.5);
    box.box_max = Vec3(2.5, 2.5, 10.5);
    box.box_divisions = std::max(1, static_cast<int>(std::lround(std::sqrt(faces / 12.0))));
    const Fixture territory = generate_fixture(FixtureKind::kBox, box, config.seed);

    BenchRow best;
    for (int rep = 0; rep < std::max(1, repeats); ++rep) {
      PipelineInputs in;
      in.artery = artery.mesh;
      in.territory = territory.mesh;
      const PipelineResult r = run_pipeline(config, std::move(in));
      BenchRow row;
      row.faces = artery.mesh.faces.size();
      row.cells = r.artery_complex.cells.size();
      row.graph_nodes = static_cast<std::size_t>(r.graph.size());
      row.graph_links = r.graph.links().size();
      row.axis_nodes = r.axis.nodes().size();
      row.timings = r.timings;
      if (rep == 0) {
        best = row;
      } else {
        PipelineTimings& b = best.timings;
        const PipelineTimings& t = row.timings;
        b.tetrahedralize = std::min(b.tetrahedralize, t.tetrahedralize);
        b.graph = std::min(b.graph, t.graph);
        b.tree_extraction = std::min(b.tree_extraction, t.tree_extraction);
        b.outrageous = std::min(b.outrageous, t.outrageous);
        b.shave = std::min(b.shave, t.shave);
        b.straighten = std::min(b.straighten, t.straighten);
        b.segmentation = std::min(b.segmentation, t.segmentation);
        b.mass_properties = std::min(b.mass_properties, t.mass_properties);
      }
    }
    report.rows.push_back(best);
  }
  std::vector<double> faces, nodes, tree, seg;
  for (const BenchRow& row : report.rows) {
    faces.push_back(static_cast<double>(row.faces));
    nodes.push_back(static_cast<double>(row.graph_nodes));
    tree.push_back(row.timings.tree_extraction);
    seg.push_back(row.timings.segmentation);
  }
  report.graph_nodes_slope = loglog_slope(faces, nodes);
  report.tree_extraction_slope = loglog_slope(faces, tree);
  report.segmentation_slope = loglog_slope(faces, seg);
  return report;
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
  out << "faces,cells,graph_nodes,graph_links,axis_nodes,tetrahedralize,graph,tree_extraction,outrageous,shave,"
         "straighten,segmentation,mass_properties,phase1,phase2,phase3\n";
  for (const BenchRow& r : report.rows) {
    const PipelineTimings& t = r.timings;
    out << r.faces << ',' << r.cells << ',' << r.graph_nodes << ',' << r.graph_links << ',' << r.axis_nodes << ','
        << t.tetrahedralize << ',' << t.graph << ',' << t.tree_extraction << ',' << t.outrageous << ',' << t.shave
        << ',' << t.straighten << ',' << t.segmentation << ',' << t.mass_properties << ',' << t.phase1() << ','
        << t.phase2() << ',' << t.phase3() << '\n';
  }
}

}  // namespace tubeskel
