#pragma once

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tubeskel {

inline constexpr const char* kBundleSchema = "tubeskel.bundle";
inline constexpr int kBundleSchemaVersion = 1;

enum class ArrayEncoding { kBase64, kInline };

/// Typed numeric array as {"dtype", "encoding", "count", "data"}. Base64
/// payloads are little-endian.
nlohmann::json encode_f32(std::span<const double> values, ArrayEncoding encoding);
nlohmann::json encode_f64(std::span<const double> values, ArrayEncoding encoding);
nlohmann::json encode_i32(std::span<const int> values, ArrayEncoding encoding);

/// Decoding accepts any numeric dtype; integers are range-checked.
/// Throws ValidationError on malformed arrays.
std::vector<double> decode_reals(const nlohmann::json& array);
std::vector<int> decode_ints(const nlohmann::json& array);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Serialized form: two-space indented JSON with a trailing newline.
std::string emit_bundle(const nlohmann::json& bundle);
/// Parses and checks the schema tag, version and required sections.
nlohmann::json parse_bundle(const std::string& text);
/// The bundle without run-dependent fields (timings), for comparisons.
nlohmann::json canonicalize_bundle(nlohmann::json bundle);

}  // namespace tubeskel
