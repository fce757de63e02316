#pragma once

#include "tubeskel/axis_refinement.hpp"
#include "tubeskel/bundle.hpp"
#include "tubeskel/mesh.hpp"
#include "tubeskel/mesh_io.hpp"
#include "tubeskel/segmentation.hpp"
#include "tubeskel/skeleton_graph.hpp"
#include "tubeskel/tree_extraction.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tubeskel {

enum class TetSource { kInternal, kFiles };

struct PipelineConfig {
  std::string artery_path;
  /// Optional second mesh segmented against the artery's axis.
  std::string territory_path;
  /// .node/.ele pairs used when tet_source is kFiles.
  std::string artery_node, artery_ele;
  std::string territory_node, territory_ele;
  std::optional<SurfaceFormat> format;
  double weld_tolerance = 1e-6;
  TetSource tet_source = TetSource::kInternal;
  double supersample = 0.0;
  std::uint64_t seed = 0;
  /// Shaving threshold; the mean reduction when unset.
  std::optional<double> epsilon;
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  RootMode root_mode = RootMode::kAutomatic;
  std::optional<int> manual_root;
  LinkWeight link_weight = LinkWeight::kEuclidean;
  /// Any of "outrageous", "shave", "straighten".
  std::set<std::string> skip_stages;
  std::string out;
  ArrayEncoding encoding = ArrayEncoding::kBase64;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Meshes and optional precomputed complexes handed to the pipeline directly.
struct PipelineInputs {
  TriangleMesh artery;
  std::optional<TriangleMesh> territory;
  std::optional<TetComplex> artery_complex;
  std::optional<TetComplex> territory_complex;
};

/// Wall-clock seconds. Phase I covers tetrahedralization, graph and tree
/// extraction; phase II the three refinement stages; phase III segmentation
/// and mass properties.
struct PipelineTimings {
  double tetrahedralize = 0.0;
  double graph = 0.0;
  double tree_extraction = 0.0;
  double outrageous = 0.0;
  double shave = 0.0;
  double straighten = 0.0;
  double segmentation = 0.0;
  double mass_properties = 0.0;
  double phase1() const { return tetrahedralize + graph + tree_extraction; }
  double phase2() const { return outrageous + shave + straighten; }
  double phase3() const { return segmentation + mass_properties; }
};

struct PipelineResult {
  PipelineInputs inputs;
  TetComplex artery_complex;
  std::optional<TetComplex> territory_complex;
  SkeletonGraph graph;
  RootSelection roots;
  /// Components left without an axis because none of their nodes lies
  /// inside the surface (isolated cells in surface pockets). Their cells are
  /// still segmented.
  std::vector<int> dropped_components;
  /// Per skeletonized component, in component order.
  std::vector<ExtractionTrace> traces;
  std::vector<SkeletonTree> extracted;
  std::vector<RefinementReport> reports;
  MedialAxis axis;
  SegmentationMap artery_map;
  std::optional<SegmentationMap> territory_map;
  std::vector<BranchProperties> artery_properties;
  std::vector<BranchProperties> territory_properties;
  PipelineTimings timings;
};

/// Loads the configured files and runs the pipeline on them.
PipelineResult run_pipeline(const PipelineConfig& config);
/// Runs every stage in order on each graph component. Errors propagate with
/// the stage name prefixed and the original exception type kept.
PipelineResult run_pipeline(const PipelineConfig& config, PipelineInputs inputs);

/// Self-contained analysis document for the viewer.
nlohmann::json make_bundle(const PipelineConfig& config, const PipelineResult& result);

struct BenchRow {
  std::size_t faces = 0;
  std::size_t cells = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_links = 0;
  std::size_t axis_nodes = 0;
  PipelineTimings timings;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Least-squares log-log slopes against face count.
  double graph_nodes_slope = 0.0;
  double tree_extraction_slope = 0.0;
  double segmentation_slope = 0.0;
};

/// Cylinder artery with a box territory around it, at each target face count.
/// Each size is timed `repeats` times and the fastest run kept.
BenchReport bench_scaling(const std::vector<int>& target_faces, const PipelineConfig& config, int repeats = 1);
void write_bench_csv(const BenchReport& report, std::ostream& out);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tubeskel
