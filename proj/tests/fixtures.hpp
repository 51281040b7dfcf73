#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cpbs/ecm.hpp"
#include "cpbs/io.hpp"

namespace cpbs::test {

/// Identified cell parameters with the shipped OCV fixture.
inline EcmParams reference_cell() {
    return load_params(std::filesystem::path(CPBS_SOURCE_DIR) / "params" / "reference_cell.json");
}

/// Same cell, OCV = 3.0 + 1.2 soc.
inline EcmParams linear_cell() {
    EcmParams p = reference_cell();
    p.ocv = OcvCurve({0.0, 1.0}, {3.0, 4.2});
    return p;
}

inline std::filesystem::path source_dir() { return CPBS_SOURCE_DIR; }

struct CliResult {
    int exit_code;
    std::string output;  ///< stdout and stderr combined
};

/// Runs the CLI binary with the given argument string from the source tree root.
inline CliResult run_cli(const std::string& args) {
    const auto log = std::filesystem::temp_directory_path() /
                     ("cpbs_cli_" + std::to_string(std::rand()) + ".log");
    const std::string cmd = "cd '" + source_dir().string() + "' && '" + std::string(CPBS_CLI) +
                            "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    std::filesystem::remove(log);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, ss.str()};
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace cpbs::test
