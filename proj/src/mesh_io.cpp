#include "tubeskel/mesh_io.hpp"

#include "tubeskel/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace tubeskel {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32le(const unsigned char* p) { return std::bit_cast<float>(read_u32le(p)); }

void write_u32le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void write_f32le(std::ostream& out, double v) { write_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

bool looks_binary_stl(const std::string& data) {
  if (data.size() < 84) return false;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint64_t count = read_u32le(bytes + 80);
  return data.size() == 84 + 50 * count;
}

// Triangle soup: one vertex per corner, welded afterwards.
TriangleMesh parse_stl_binary(const std::string& data) {
  if (!looks_binary_stl(data)) throw ValidationError("binary STL size does not match its triangle count");
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t count = read_u32le(bytes + 80);
  TriangleMesh mesh;
  mesh.vertices.reserve(count * 3);
  mesh.faces.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const unsigned char* rec = bytes + 84 + 50 * static_cast<std::size_t>(t) + 12;
    for (int k = 0; k < 3; ++k) {
      mesh.vertices.emplace_back(read_f32le(rec + 12 * k), read_f32le(rec + 12 * k + 4), read_f32le(rec + 12 * k + 8));
    }
    const int base = static_cast<int>(3 * t);
    mesh.faces.push_back({base, base + 1, base + 2});
  }
  return mesh;
}

TriangleMesh parse_stl_ascii(const std::string& data) {
  std::istringstream in(data);
  std::string token;
  in >> token;
  if (lower(token) != "solid") throw ValidationError("ASCII STL must start with 'solid'");
  TriangleMesh mesh;
  std::getline(in, mesh.label);
  const auto first = mesh.label.find_first_not_of(" \t\r");
  mesh.label = first == std::string::npos ? "" : mesh.label.substr(first);
  while (!mesh.label.empty() && (mesh.label.back() == '\r' || mesh.label.back() == ' ')) mesh.label.pop_back();

  std::size_t corners = 0;
  while (in >> token) {
    const std::string t = lower(token);
    if (t == "vertex") {
      double x = 0, y = 0, z = 0;
      if (!(in >> x >> y >> z)) {
        throw ValidationError("malformed vertex in facet " + std::to_string(corners / 3));
      }
      mesh.vertices.emplace_back(x, y, z);
      ++corners;
    } else if (t == "endloop") {
      if (corners % 3 != 0) throw ValidationError("facet " + std::to_string(corners / 3) + " is not a triangle");
    } else if (t == "endsolid") {
      break;
    }
  }
  if (corners % 3 != 0) throw ValidationError("truncated ASCII STL");
  for (std::size_t f = 0; f < corners / 3; ++f) {
    const int base = static_cast<int>(3 * f);
    mesh.faces.push_back({base, base + 1, base + 2});
  }
  return mesh;
}

// Next non-empty line with comments stripped.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

TriangleMesh parse_off(const std::string& data) {
  std::istringstream in(data);
  std::string line;
  if (!next_content_line(in, line)) throw ValidationError("empty OFF file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw ValidationError("OFF file must start with 'OFF'");
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_content_line(in, line)) throw ValidationError("OFF file is missing its counts line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw ValidationError("malformed OFF counts line");
    counts >> ne;
  }
  if (nv < 0 || nf < 0) throw ValidationError("negative OFF counts");
  TriangleMesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw ValidationError("OFF file ends before vertex " + std::to_string(i));
    std::istringstream row(line);
    double x = 0, y = 0, z = 0;
    if (!(row >> x >> y >> z)) throw ValidationError("malformed OFF vertex " + std::to_string(i));
    mesh.vertices.emplace_back(x, y, z);
  }
  for (long f = 0; f < nf; ++f) {
    if (!next_content_line(in, line)) throw ValidationError("OFF file ends before face " + std::to_string(f));
    std::istringstream row(line);
    int n = 0;
    if (!(row >> n) || n < 3) throw ValidationError("malformed OFF face " + std::to_string(f));
    std::vector<int> poly(n);
    for (int& v : poly) {
      if (!(row >> v)) throw ValidationError("malformed OFF face " + std::to_string(f));
      if (v < 0 || v >= nv) throw ValidationError("OFF face " + std::to_string(f) + " index out of range");
    }
    for (int k = 1; k + 1 < n; ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
  }
  return mesh;
}

SurfaceFormat detect_format(const std::filesystem::path& path, const std::string& data) {
  if (lower(path.extension().string()) == ".off") return SurfaceFormat::kOff;
  if (data.rfind("OFF", 0) == 0) return SurfaceFormat::kOff;
  if (looks_binary_stl(data)) return SurfaceFormat::kStlBinary;
  return SurfaceFormat::kStlAscii;
}

Vec3 face_normal(const TriangleMesh& mesh, const Face& f) {
  const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

std::vector<std::vector<double>> read_table(const std::filesystem::path& path, std::size_t* declared,
                                            std::vector<double>* header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!next_content_line(in, line)) throw ValidationError(path.string() + " is empty");
  std::istringstream head(line);
  header->clear();
  for (double v; head >> v;) header->push_back(v);
  if (header->empty() || (*header)[0] < 0) throw ValidationError(path.string() + " has a malformed header");
  *declared = static_cast<std::size_t>((*header)[0]);
  std::vector<std::vector<double>> rows;
  rows.reserve(*declared);
  while (rows.size() < *declared && next_content_line(in, line)) {
    std::istringstream row(line);
    std::vector<double> values;
    for (double v; row >> v;) values.push_back(v);
    rows.push_back(std::move(values));
  }
  if (rows.size() != *declared) {
    throw ValidationError(path.string() + " declares " + std::to_string(*declared) + " records but has " +
                          std::to_string(rows.size()));
  }
  return rows;
}

}  // namespace

std::optional<SurfaceFormat> parse_surface_format(const std::string& name) {
  const std::string n = lower(name);
  if (n == "stl-ascii") return SurfaceFormat::kStlAscii;
  if (n == "stl-binary") return SurfaceFormat::kStlBinary;
  if (n == "off") return SurfaceFormat::kOff;
  return std::nullopt;
}

std::string to_string(SurfaceFormat format) {
  switch (format) {
    case SurfaceFormat::kStlAscii:
      return "stl-ascii";
    case SurfaceFormat::kStlBinary:
      return "stl-binary";
    case SurfaceFormat::kOff:
      return "off";
  }
  return "unknown";
}

TriangleMesh read_surface_raw(const std::filesystem::path& path, std::optional<SurfaceFormat> format) {
  const std::string data = read_file(path);
  const SurfaceFormat f = format.value_or(detect_format(path, data));
  TriangleMesh mesh;
  switch (f) {
    case SurfaceFormat::kStlAscii:
      mesh = parse_stl_ascii(data);
      break;
    case SurfaceFormat::kStlBinary:
      mesh = parse_stl_binary(data);
      break;
    case SurfaceFormat::kOff:
      mesh = parse_off(data);
      break;
  }
  if (mesh.label.empty()) mesh.label = path.stem().string();
  return mesh;
}

TriangleMesh load_surface(const std::filesystem::path& path, const LoadOptions& options) {
  TriangleMesh mesh = weld(read_surface_raw(path, options.format), options.weld_tolerance);
  validate(mesh, options.validation);
  return mesh;
}

void save_surface(const TriangleMesh& mesh, const std::filesystem::path& path, SurfaceFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  switch (format) {
    case SurfaceFormat::kStlAscii: {
      out << std::setprecision(std::numeric_limits<double>::max_digits10);
      out << "solid " << mesh.label << "\n";
      for (const Face& f : mesh.faces) {
        const Vec3 n = face_normal(mesh, f);
        out << "  facet normal " << n.x() << " " << n.y() << " " << n.z() << "\n    outer loop\n";
        for (int v : f) {
          const Vec3& p = mesh.vertices[v];
          out << "      vertex " << p.x() << " " << p.y() << " " << p.z() << "\n";
        }
        out << "    endloop\n  endfacet\n";
      }
      out << "endsolid " << mesh.label << "\n";
      break;
    }
    case SurfaceFormat::kStlBinary: {
      std::string header = mesh.label.substr(0, 80);
      header.resize(80, ' ');
      // An ASCII reader keys on "solid"; never start a binary header with it.
      if (lower(header).rfind("solid", 0) == 0) header[0] = '_';
      out.write(header.data(), 80);
      write_u32le(out, static_cast<std::uint32_t>(mesh.faces.size()));
      for (const Face& f : mesh.faces) {
        const Vec3 n = face_normal(mesh, f);
        for (int k = 0; k < 3; ++k) write_f32le(out, n[k]);
        for (int v : f) {
          for (int k = 0; k < 3; ++k) write_f32le(out, mesh.vertices[v][k]);
        }
        const char attribute[2] = {0, 0};
        out.write(attribute, 2);
      }
      break;
    }
    case SurfaceFormat::kOff: {
      out << std::setprecision(std::numeric_limits<double>::max_digits10);
      out << "OFF\n" << mesh.vertices.size() << " " << mesh.faces.size() << " 0\n";
      for (const Vec3& p : mesh.vertices) out << p.x() << " " << p.y() << " " << p.z() << "\n";
      for (const Face& f : mesh.faces) out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
      break;
    }
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

TetComplex load_tet_complex(const std::filesystem::path& node_path, const std::filesystem::path& ele_path,
                            InvertedCellPolicy policy) {
  std::size_t point_count = 0;
  std::vector<double> node_header;
  const auto node_rows = read_table(node_path, &point_count, &node_header);
  if (node_header.size() >= 2 && node_header[1] != 3) throw ValidationError(".node file must be 3-dimensional");

  long base = 0;
  std::vector<Vec3> vertices(point_count);
  for (std::size_t i = 0; i < node_rows.size(); ++i) {
    const auto& row = node_rows[i];
    if (row.size() < 4) throw ValidationError(".node record " + std::to_string(i) + " is malformed");
    if (i == 0) {
      base = static_cast<long>(row[0]);
      if (base != 0 && base != 1) throw ValidationError(".node indices must start at 0 or 1");
    }
    const long index = static_cast<long>(row[0]) - base;
    if (index < 0 || index >= static_cast<long>(point_count)) {
      throw ValidationError(".node point index " + std::to_string(static_cast<long>(row[0])) + " out of range");
    }
    vertices[index] = Vec3(row[1], row[2], row[3]);
  }

  std::size_t cell_count = 0;
  std::vector<double> ele_header;
  const auto ele_rows = read_table(ele_path, &cell_count, &ele_header);
  if (ele_header.size() >= 2 && ele_header[1] < 4) throw ValidationError(".ele cells must have at least 4 nodes");
  std::vector<Cell> cells;
  cells.reserve(cell_count);
  for (std::size_t i = 0; i < ele_rows.size(); ++i) {
    const auto& row = ele_rows[i];
    if (row.size() < 5) throw ValidationError(".ele record " + std::to_string(i) + " is malformed");
    Cell cell{};
    for (int k = 0; k < 4; ++k) {
      const long v = static_cast<long>(row[1 + k]) - base;
      if (v < 0 || v >= static_cast<long>(point_count)) {
        throw ValidationError("cell " + std::to_string(i) + " index " + std::to_string(static_cast<long>(row[1 + k])) +
                              " out of range");
      }
      cell[k] = static_cast<int>(v);
    }
    cells.push_back(cell);
  }
  return TetComplex::from_cells(std::move(vertices), std::move(cells), policy);
}

void save_tet_complex(const TetComplex& complex, const std::filesystem::path& node_path,
                      const std::filesystem::path& ele_path, int index_base) {
  std::ofstream node(node_path);
  std::ofstream ele(ele_path);
  if (!node || !ele) throw ValidationError("cannot write tetrahedral complex files");
  node << std::setprecision(std::numeric_limits<double>::max_digits10);
  node << complex.vertices.size() << " 3 0 0\n";
  for (std::size_t i = 0; i < complex.vertices.size(); ++i) {
    const Vec3& p = complex.vertices[i];
    node << i + index_base << " " << p.x() << " " << p.y() << " " << p.z() << "\n";
  }
  ele << complex.cells.size() << " 4 0\n";
  for (std::size_t i = 0; i < complex.cells.size(); ++i) {
    ele << i + index_base;
    for (int v : complex.cells[i]) ele << " " << v + index_base;
    ele << "\n";
  }
}

}  // namespace tubeskel
