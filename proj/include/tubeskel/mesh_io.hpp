#pragma once

#include "tubeskel/mesh.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace tubeskel {

enum class SurfaceFormat { kStlAscii, kStlBinary, kOff };

std::optional<SurfaceFormat> parse_surface_format(const std::string& name);
std::string to_string(SurfaceFormat format);

struct LoadOptions {
  /// Forced format; detected from the extension and content when empty.
  std::optional<SurfaceFormat> format;
  /// Welding tolerance relative to the bounding-box diagonal.
  double weld_tolerance = 1e-6;
  ValidationOptions validation;
};

/// Reads, welds and validates a surface mesh. Throws ValidationError.
TriangleMesh load_surface(const std::filesystem::path& path, const LoadOptions& options = {});

/// Parses raw triangles without welding or validation.
TriangleMesh read_surface_raw(const std::filesystem::path& path, std::optional<SurfaceFormat> format = {});

void save_surface(const TriangleMesh& mesh, const std::filesystem::path& path, SurfaceFormat format);

/// Reads a TetGen-style .node/.ele pair. Indexing base (0 or 1) is taken from
/// the first point index in the .node file.
TetComplex load_tet_complex(const std::filesystem::path& node_path, const std::filesystem::path& ele_path,
                            InvertedCellPolicy policy = InvertedCellPolicy::kReject);

void save_tet_complex(const TetComplex& complex, const std::filesystem::path& node_path,
                      const std::filesystem::path& ele_path, int index_base = 0);

}  // namespace tubeskel
