#include "cpbs/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "cpbs/errors.hpp"

namespace cpbs {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) return "nan";
    return {buf.data(), ptr};
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size())
        throw std::invalid_argument("write_table_csv: header/column count mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw std::invalid_argument("write_table_csv: ragged columns");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());

    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << (i ? "," : "") << format_double(columns[i][r]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

double required_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("parameter file: missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("parameter file: '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

EcmParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("parameter file: expected a JSON object");
    if (!j.contains("ocv") || !j.at("ocv").is_array())
        throw ConfigError("parameter file: 'ocv' must be an array of [soc, volts] pairs");

    std::vector<double> soc;
    std::vector<double> volts;
    for (const auto& point : j.at("ocv")) {
        if (!point.is_array() || point.size() != 2 || !point[0].is_number() || !point[1].is_number())
            throw ConfigError("parameter file: each 'ocv' entry must be [soc, volts]");
        soc.push_back(point[0].get<double>());
        volts.push_back(point[1].get<double>());
    }
    try {
        EcmParams p{required_number(j, "capacity_As"), required_number(j, "r0_ohm"),
                    required_number(j, "r1_ohm"), required_number(j, "c1_farad"),
                    OcvCurve(std::move(soc), std::move(volts))};
        p.validate();
        return p;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("parameter file: ") + e.what());
    }
}

nlohmann::json params_to_json(const EcmParams& params) {
    nlohmann::json ocv = nlohmann::json::array();
    const auto soc = params.ocv.soc_breakpoints();
    const auto volts = params.ocv.ocv_values();
    for (std::size_t i = 0; i < soc.size(); ++i) ocv.push_back({soc[i], volts[i]});
    return {{"capacity_As", params.capacity_q},
            {"r0_ohm", params.r0},
            {"r1_ohm", params.r1},
            {"c1_farad", params.c1},
            {"ocv", std::move(ocv)}};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

EcmParams load_params(const std::filesystem::path& path) {
    try {
        return params_from_json(read_json_file(path));
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.find(path.string()) != std::string::npos) throw;
        throw ConfigError(path.string() + ": " + msg);
    }
}

void save_params(const std::filesystem::path& path, const EcmParams& params) {
    write_json_file(path, params_to_json(params));
}

}  // namespace cpbs
