#include "tubeskel/bundle.hpp"

#include "tubeskel/errors.hpp"

#include <sodium.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace tubeskel {
namespace {

static_assert(std::endian::native == std::endian::little, "bundle payloads assume a little-endian host");

constexpr int kVariant = sodium_base64_VARIANT_ORIGINAL;

template <typename T>
nlohmann::json encode(const char* dtype, const std::vector<T>& values, ArrayEncoding encoding) {
  nlohmann::json out;
  out["dtype"] = dtype;
  out["encoding"] = encoding == ArrayEncoding::kBase64 ? "base64" : "inline";
  out["count"] = values.size();
  if (encoding == ArrayEncoding::kBase64) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(values.data());
    out["data"] = base64_encode({bytes, values.size() * sizeof(T)});
  } else {
    out["data"] = values;
  }
  return out;
}

template <typename T>
std::vector<T> unpack(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  if (bytes.size() != count * sizeof(T)) throw ValidationError("array payload size does not match its count");
  std::vector<T> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<double> decode_any(const nlohmann::json& a) {
  if (!a.is_object() || !a.contains("dtype") || !a.contains("encoding") || !a.contains("count") || !a.contains("data")) {
    throw ValidationError("array needs dtype, encoding, count and data");
  }
  const std::string dtype = a["dtype"].get<std::string>();
  const std::string encoding = a["encoding"].get<std::string>();
  const auto count = a["count"].get<std::size_t>();
  if (dtype != "f32" && dtype != "f64" && dtype != "i32") throw ValidationError("unknown dtype " + dtype);
  std::vector<double> out;
  if (encoding == "inline") {
    if (!a["data"].is_array() || a["data"].size() != count) throw ValidationError("inline array length mismatch");
    for (const auto& v : a["data"]) {
      if (!v.is_number()) throw ValidationError("inline array holds a non-number");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (encoding != "base64") throw ValidationError("unknown encoding " + encoding);
  const auto bytes = base64_decode(a["data"].get<std::string>());
  if (dtype == "f32") {
    for (float f : unpack<float>(bytes, count)) out.push_back(f);
  } else if (dtype == "f64") {
    out = unpack<double>(bytes, count);
  } else {
    for (std::int32_t i : unpack<std::int32_t>(bytes, count)) out.push_back(i);
  }
  return out;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(sodium_base64_encoded_len(bytes.size(), kVariant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), kVariant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end, kVariant) != 0 ||
      end != text.data() + text.size()) {
    throw ValidationError("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

nlohmann::json encode_f32(std::span<const double> values, ArrayEncoding encoding) {
  std::vector<float> v(values.begin(), values.end());
  if (encoding == ArrayEncoding::kInline) {
    // Inline numbers carry the float values exactly so both encodings decode alike.
    return encode("f32", std::vector<double>(v.begin(), v.end()), encoding);
  }
  return encode("f32", v, encoding);
}

nlohmann::json encode_f64(std::span<const double> values, ArrayEncoding encoding) {
  return encode("f64", std::vector<double>(values.begin(), values.end()), encoding);
}

nlohmann::json encode_i32(std::span<const int> values, ArrayEncoding encoding) {
  return encode("i32", std::vector<std::int32_t>(values.begin(), values.end()), encoding);
}

std::vector<double> decode_reals(const nlohmann::json& array) { return decode_any(array); }

std::vector<int> decode_ints(const nlohmann::json& array) {
  std::vector<int> out;
  for (double v : decode_any(array)) {
    if (v != std::floor(v) || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ValidationError("integer array holds a non-integer");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string emit_bundle(const nlohmann::json& bundle) { return bundle.dump(2) + "\n"; }

nlohmann::json parse_bundle(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("bundle is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != kBundleSchema) throw ValidationError("not a tubeskel bundle");
  if (doc.value("schema_version", 0) != kBundleSchemaVersion) {
    throw ValidationError("unsupported bundle schema version");
  }
  for (const char* key : {"config", "meshes", "axis", "segmentation", "refinement"}) {
    if (!doc.contains(key)) throw ValidationError(std::string("bundle lacks section ") + key);
  }
  return doc;
}

nlohmann::json canonicalize_bundle(nlohmann::json bundle) {
  bundle.erase("timings");
  return bundle;
}

}  // namespace tubeskel
