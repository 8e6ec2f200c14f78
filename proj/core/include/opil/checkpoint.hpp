#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

#include "opil/numerics.hpp"

namespace opil {

/// {"layers":[{"in","out","activation","weights":[row-major],"bias":[...]}]}
nlohmann::json network_to_json(const NetworkParams& params);
/// Throws ParseError on missing fields or inconsistent shapes.
NetworkParams network_from_json(const nlohmann::json& doc);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& doc, std::string_view field);

/// Whole-file helpers. Parse failures carry the offending line number.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& doc);

}  // namespace opil
