#include "tubeskel/bundle.hpp"
#include "tubeskel/errors.hpp"
#include "tubeskel/fixtures.hpp"
#include "tubeskel/mesh_io.hpp"
#include "tubeskel/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tubeskel;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

// Flag values as typed; converted into a PipelineConfig after parsing so that
// every check reports a ValidationError.
struct PipelineFlags {
  std::string artery;
  std::string territory;
  std::string format;
  double weld_tol = 1e-6;
  std::string tet_source = "internal";
  std::string artery_node, artery_ele, territory_node, territory_ele;
  double supersample = 0.0;
  std::uint64_t seed = 0;
  std::string epsilon = "auto";
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  std::string root = "auto";
  std::string metric = "euclidean";
  std::vector<std::string> skip;
  std::string encoding = "base64";
  std::string out = "-";
};

void add_pipeline_flags(CLI::App& cmd, PipelineFlags& f, bool needs_artery) {
  auto* artery = cmd.add_option("artery", f.artery, "Tubular surface mesh (STL or OFF)");
  if (needs_artery) artery->required();
  cmd.add_option("--territory", f.territory, "Second solid mesh segmented against the artery's axis");
  cmd.add_option("--format", f.format, "Input format: stl-ascii, stl-binary or off (default: by extension)");
  cmd.add_option("--weld-tol", f.weld_tol, "Vertex weld tolerance relative to the bounding-box diagonal");
  cmd.add_option("--tet-source", f.tet_source, "internal or files")->check(CLI::IsMember({"internal", "files"}));
  cmd.add_option("--artery-node", f.artery_node, "Artery .node file for --tet-source files");
  cmd.add_option("--artery-ele", f.artery_ele, "Artery .ele file for --tet-source files");
  cmd.add_option("--territory-node", f.territory_node, "Territory .node file for --tet-source files");
  cmd.add_option("--territory-ele", f.territory_ele, "Territory .ele file for --tet-source files");
  cmd.add_option("--supersample", f.supersample, "Extra surface samples per unit area before tetrahedralizing");
  cmd.add_option("--seed", f.seed, "Seed for sampling and ray draws");
  cmd.add_option("--epsilon", f.epsilon, "Hair-shaving threshold length, or auto for the mean reduction");
  cmd.add_option("--alpha1", f.alpha1, "Curvature threshold for straightening");
  cmd.add_option("--alpha2", f.alpha2, "Curvature-change threshold for straightening");
  cmd.add_option("--root", f.root, "auto, or a graph node id to use as root");
  cmd.add_option("--metric", f.metric, "Link weights: euclidean or hops")->check(CLI::IsMember({"euclidean", "hops"}));
  cmd.add_option("--skip-stage", f.skip, "Refinement stage to skip: outrageous, shave or straighten")
      ->check(CLI::IsMember({"outrageous", "shave", "straighten"}));
  cmd.add_option("--encoding", f.encoding, "Array encoding in JSON output: base64 or inline")
      ->check(CLI::IsMember({"base64", "inline"}));
  cmd.add_option("--out", f.out, "Output path, - for stdout");
}

double parse_number(const std::string& flag, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ValidationError(flag + ": expected a number, got '" + text + "'");
  return value;
}

PipelineConfig to_config(const PipelineFlags& f) {
  PipelineConfig c;
  c.artery_path = f.artery;
  c.territory_path = f.territory;
  if (!f.format.empty()) {
    c.format = parse_surface_format(f.format);
    if (!c.format) throw ValidationError("--format: unknown format '" + f.format + "'");
  }
  c.weld_tolerance = f.weld_tol;
  c.tet_source = f.tet_source == "files" ? TetSource::kFiles : TetSource::kInternal;
  c.artery_node = f.artery_node;
  c.artery_ele = f.artery_ele;
  c.territory_node = f.territory_node;
  c.territory_ele = f.territory_ele;
  c.supersample = f.supersample;
  c.seed = f.seed;
  if (f.epsilon != "auto") c.epsilon = parse_number("--epsilon", f.epsilon);
  c.alpha1 = f.alpha1;
  c.alpha2 = f.alpha2;
  if (f.root != "auto") {
    const double id = parse_number("--root", f.root);
    if (id != std::floor(id) || id < 0 || id > std::numeric_limits<int>::max()) {
      throw ValidationError("--root: expected auto or a node id");
    }
    c.root_mode = RootMode::kManual;
    c.manual_root = static_cast<int>(id);
  }
  c.link_weight = f.metric == "hops" ? LinkWeight::kHops : LinkWeight::kEuclidean;
  c.skip_stages = {f.skip.begin(), f.skip.end()};
  c.out = f.out;
  c.encoding = f.encoding == "inline" ? ArrayEncoding::kInline : ArrayEncoding::kBase64;
  c.validate();
  return c;
}

// Writes next to the target and renames, so a failed run never leaves a
// partial file behind.
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

nlohmann::json pick(const nlohmann::json& bundle, std::initializer_list<const char*> keys) {
  nlohmann::json out;
  out["schema"] = bundle["schema"];
  out["schema_version"] = bundle["schema_version"];
  for (const char* k : keys) out[k] = bundle[k];
  return out;
}

struct SkeletonizeExtras {
  std::string trace_csv;
  std::string edge_list;
};

int run_skeletonize(const PipelineFlags& flags, const SkeletonizeExtras& extras) {
  const PipelineConfig config = to_config(flags);
  const PipelineResult r = run_pipeline(config);
  const nlohmann::json doc = pick(make_bundle(config, r), {"config", "graph", "axis", "refinement", "timings"});
  std::string trace_text, edges_text;
  if (!extras.trace_csv.empty()) {
    std::ostringstream s;
    for (const ExtractionTrace& t : r.traces) write_trace_csv(t, s);
    trace_text = s.str();
  }
  if (!extras.edge_list.empty()) {
    std::ostringstream s;
    write_edge_list(r.graph, s);
    edges_text = s.str();
  }
  write_output(config.out, emit_bundle(doc));
  if (!extras.trace_csv.empty()) write_output(extras.trace_csv, trace_text);
  if (!extras.edge_list.empty()) write_output(extras.edge_list, edges_text);
  return 0;
}

int run_segment(const PipelineFlags& flags) {
  const PipelineConfig config = to_config(flags);
  const PipelineResult r = run_pipeline(config);
  write_output(config.out, emit_bundle(pick(make_bundle(config, r),
                                            {"config", "axis", "segmentation", "mass_properties", "timings"})));
  return 0;
}

int run_bundle(const PipelineFlags& flags) {
  const PipelineConfig config = to_config(flags);
  const PipelineResult r = run_pipeline(config);
  write_output(config.out, emit_bundle(make_bundle(config, r)));
  return 0;
}

struct BenchFlags {
  std::vector<int> sizes{1000, 2000, 4000, 8000};
  int repeats = 1;
};

int run_bench(const PipelineFlags& flags, const BenchFlags& bench) {
  PipelineFlags f = flags;
  f.artery = "cylinder";  // generated per size
  const PipelineConfig config = to_config(f);
  const BenchReport report = bench_scaling(bench.sizes, config, bench.repeats);
  std::ostringstream csv;
  write_bench_csv(report, csv);
  write_output(config.out, csv.str());
  std::cerr << "slope graph_nodes=" << report.graph_nodes_slope << " tree_extraction=" << report.tree_extraction_slope
            << " segmentation=" << report.segmentation_slope << "\n";
  return 0;
}

struct FixtureFlags {
  std::string kind;
  std::string out;
  std::string format = "off";
  std::uint64_t seed = 0;
  FixtureParams params;
  std::string centerlines;
};

int run_fixtures(const FixtureFlags& f) {
  const auto kind = parse_fixture_kind(f.kind);
  if (!kind) throw ValidationError("unknown fixture '" + f.kind + "'");
  const auto format = parse_surface_format(f.format);
  if (!format) throw ValidationError("--format: unknown format '" + f.format + "'");
  const Fixture fx = generate_fixture(*kind, f.params, f.seed);
  const fs::path target(f.out);
  fs::path tmp = target;
  tmp += ".partial";
  save_surface(fx.mesh, tmp, *format);
  fs::rename(tmp, target);
  if (!f.centerlines.empty()) {
    nlohmann::json segs = nlohmann::json::array();
    for (const TubeSegment& s : fx.segments) {
      segs.push_back({{"a", {s.a.x(), s.a.y(), s.a.z()}},
                      {"b", {s.b.x(), s.b.y(), s.b.z()}},
                      {"radius", s.radius},
                      {"parent", s.parent}});
    }
    write_output(f.centerlines, nlohmann::json{{"fixture", f.kind}, {"segments", segs}}.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curve-skeleton extraction and territory segmentation for tubular meshes"};
  app.require_subcommand(1);

  PipelineFlags flags;
  SkeletonizeExtras extras;
  auto* skeletonize = app.add_subcommand("skeletonize", "Extract and refine the medial axis");
  add_pipeline_flags(*skeletonize, flags, true);
  skeletonize->add_option("--trace-csv", extras.trace_csv, "Write the tree-extraction trace as CSV");
  skeletonize->add_option("--edge-list", extras.edge_list, "Write the dual graph as an edge list");

  auto* segment = app.add_subcommand("segment", "Segment the meshes against the axis and report mass properties");
  add_pipeline_flags(*segment, flags, true);

  auto* bundle = app.add_subcommand("bundle", "Write the complete analysis bundle for the viewer");
  add_pipeline_flags(*bundle, flags, true);

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Time the pipeline on a cylinder family of growing size");
  add_pipeline_flags(*bench, flags, false);
  bench->add_option("--sizes", bench_flags.sizes, "Target face counts, at least four")->delimiter(',');
  bench->add_option("--repeats", bench_flags.repeats, "Runs per size; the fastest is kept");

  FixtureFlags fixture;
  auto* fixtures = app.add_subcommand("fixtures", "Generate a synthetic test mesh");
  fixtures->add_option("kind", fixture.kind, "cylinder, y_tube, three_level_tree or box")->required();
  fixtures->add_option("--out", fixture.out, "Output mesh path")->required();
  fixtures->add_option("--format", fixture.format, "stl-ascii, stl-binary or off");
  fixtures->add_option("--seed", fixture.seed, "Noise seed");
  fixtures->add_option("--noise", fixture.params.noise, "Surface perturbation as a fraction of the radius");
  fixtures->add_option("--radius", fixture.params.radius, "Cylinder radius");
  fixtures->add_option("--length", fixture.params.length, "Cylinder length");
  fixtures->add_option("--target-faces", fixture.params.target_faces, "Approximate cylinder face count");
  fixtures->add_option("--cells-per-radius", fixture.params.cells_per_radius, "Polygonization density");
  fixtures->add_option("--relax", fixture.params.relax_iterations, "Smoothing passes on implicit fixtures");
  fixtures->add_option("--box-divisions", fixture.params.box_divisions, "Quads per box face edge");
  fixtures->add_option("--centerlines", fixture.centerlines, "Write the ground-truth segments as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*skeletonize) return run_skeletonize(flags, extras);
    if (*segment) return run_segment(flags);
    if (*bundle) return run_bundle(flags);
    if (*bench) return run_bench(flags, bench_flags);
    if (*fixtures) return run_fixtures(fixture);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
