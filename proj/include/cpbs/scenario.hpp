#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpbs/attack.hpp"
#include "cpbs/ecm.hpp"
#include "cpbs/metrics.hpp"
#include "cpbs/stealth.hpp"
#include "cpbs/time_series.hpp"

namespace cpbs {

/// Where the user's nominal current comes from: a CSV file or a synthetic generator.
struct ProfileSpec {
    std::optional<std::filesystem::path> csv;
    ProfileKind kind = ProfileKind::constant;
    double amplitude = 0.0;
    double bias = 0.0;
    double duration = 0.0;
    std::uint64_t seed = 0;
};

/// Plant deviations from the adversary's model. Absolute values win over scales.
struct PlantOverrides {
    std::map<std::string, double> absolute;  ///< keys: capacity_As, r0_ohm, r1_ohm, c1_farad
    std::map<std::string, double> scale;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

struct ScenarioConfig {
    std::string name;
    std::filesystem::path params_file;
    std::optional<PlantOverrides> plant_overrides;
    ProfileSpec profile;
    BatteryState x0;
    double soc_target = 0.0;
    ReferenceShape reference_shape = ReferenceShape::linear_ramp;
    AttackWeights weights = AttackWeights::scenario_default();
    double k_a = 0.0;
    double dt = 1.0;
    std::optional<double> i_max;
    std::filesystem::path output_dir;
    std::vector<double> sweep_ka;
};

/// Parses and validates a scenario file. Relative paths resolve against the
/// file's directory. Throws ConfigError naming the offending field.
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& path);
[[nodiscard]] ScenarioConfig scenario_from_json(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir);

struct RunOptions {
    bool perfect_plant = false;             ///< ignore plant_overrides
    std::optional<std::uint64_t> seed;      ///< replaces the plant noise seed
};

/// Inputs materialized from a config: model, plant, nominal current.
struct PreparedScenario {
    ScenarioConfig config;
    EcmParams adversary;
    PlantConfig plant;
    TimeSeries u_nom;

    [[nodiscard]] ReferenceTrajectory reference() const;
};

[[nodiscard]] PreparedScenario prepare_scenario(const ScenarioConfig& config,
                                                const RunOptions& options = {});

[[nodiscard]] EcmParams apply_overrides(const EcmParams& base, const PlantOverrides& overrides);

struct ScenarioRun {
    PreparedScenario prepared;
    InputAttack attack;
    StealthResult stealth;
    ScenarioSummary summary;
};

/// Input attack, plant run, output attack, summary.
[[nodiscard]] ScenarioRun run_scenario(const PreparedScenario& prepared);

/// nominal.csv: t, i, soc, vc, v.
void write_nominal(const std::filesystem::path& out_dir, const TimeSeries& u_nom,
                   const SimulationResult& nominal);

/// attack.csv, stealth.csv, riccati.csv, summary.json.
void write_scenario_outputs(const std::filesystem::path& out_dir, const ScenarioRun& run);

[[nodiscard]] nlohmann::json summary_json(const ScenarioRun& run);

/// sweep.csv (k_a,residual_rms_V) and sweep_summary.json.
void write_sweep_outputs(const std::filesystem::path& out_dir, const KaSweep& sweep);

}  // namespace cpbs
