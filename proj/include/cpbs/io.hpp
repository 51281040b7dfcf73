#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpbs/ecm.hpp"

namespace cpbs {

/// Shortest round-trip decimal representation.
[[nodiscard]] std::string format_double(double value);

/// Writes a header row plus equal-length numeric columns. Output is
/// byte-deterministic for identical inputs.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns);

/// Parameter file schema: capacity_As, r0_ohm, r1_ohm, c1_farad, ocv: [[soc, volts], ...].
[[nodiscard]] EcmParams params_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json params_to_json(const EcmParams& params);

[[nodiscard]] EcmParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const EcmParams& params);

[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace cpbs
