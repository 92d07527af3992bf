#pragma once

#include "steer/error.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace steer::detail {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Parses JSON, turning parser failures into FormatError with `what` as context.
json parse_json(std::string_view text, std::string_view what);

const json& require_field(const json& obj, std::string_view key, std::string_view where);
double require_number(const json& value, std::string_view where);
const json& require_array(const json& value, std::string_view where);
std::string require_string(const json& value, std::string_view where);

/// 64-bit FNV-1a, used to fingerprint files recorded in provenance.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

} // namespace steer::detail
