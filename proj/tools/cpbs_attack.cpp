// Batch front end: simulate, scenario, sweep, fit.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/numerical error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpbs/ecm.hpp"
#include "cpbs/errors.hpp"
#include "cpbs/io.hpp"
#include "cpbs/metrics.hpp"
#include "cpbs/scenario.hpp"
#include "cpbs/sysid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct GlobalOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

fs::path output_dir(const GlobalOptions& g, const cpbs::ScenarioConfig& c) {
    return g.out.empty() ? c.output_dir : fs::path(g.out);
}

cpbs::ScenarioConfig require_scenario(const GlobalOptions& g) {
    if (g.config.empty()) throw cpbs::ConfigError("--config is required");
    return cpbs::load_scenario(g.config);
}

void require_finite(const cpbs::ScenarioSummary& s) {
    for (double v : {s.final_soc_nominal, s.final_soc_attacked, s.residual_rms, s.residual_max,
                     s.attack_energy}) {
        if (!std::isfinite(v)) throw cpbs::NumericalError("summary contains non-finite values");
    }
}

int cmd_simulate(const GlobalOptions& g) {
    const auto config = require_scenario(g);
    const auto prepared = cpbs::prepare_scenario(config, {.perfect_plant = true, .seed = g.seed});
    const auto nominal = cpbs::simulate(prepared.adversary, config.x0, prepared.u_nom);
    const fs::path out = output_dir(g, config);
    cpbs::write_nominal(out, prepared.u_nom, nominal);
    std::cout << "final_soc " << cpbs::format_double(nominal.states.back().soc)
              << (nominal.soc_violation ? " (soc left [0, 1])" : "") << "\n"
              << "wrote " << (out / "nominal.csv").string() << "\n";
    return 0;
}

int cmd_scenario(const GlobalOptions& g, bool perfect_plant) {
    const auto config = require_scenario(g);
    const auto prepared = cpbs::prepare_scenario(config, {.perfect_plant = perfect_plant, .seed = g.seed});
    const auto run = cpbs::run_scenario(prepared);
    require_finite(run.summary);
    cpbs::write_scenario_outputs(output_dir(g, config), run);
    std::cout << cpbs::summary_json(run).dump(2) << "\n";
    return 0;
}

int cmd_sweep(const GlobalOptions& g, std::vector<double> ka, bool serial, bool perfect_plant) {
    const auto config = require_scenario(g);
    if (ka.empty()) ka = config.sweep_ka;
    if (ka.empty()) throw cpbs::ConfigError("sweep: empty k_a list (use --ka or 'sweep_ka')");
    for (double k : ka) {
        if (!std::isfinite(k) || k == 1.0) throw cpbs::ConfigError("sweep: invalid k_a value");
    }

    const auto prepared = cpbs::prepare_scenario(config, {.perfect_plant = perfect_plant, .seed = g.seed});
    const auto attack = cpbs::synthesize_input_attack(prepared.adversary, config.weights,
                                                      prepared.reference(), prepared.u_nom, config.x0);
    const cpbs::MaskingScenario masking{prepared.adversary, prepared.plant, config.x0, prepared.u_nom,
                                        attack.u_a};
    const auto sweep = cpbs::sweep_ka(masking, ka, !serial);
    cpbs::write_sweep_outputs(output_dir(g, config), sweep);
    for (const auto& row : sweep.rows)
        std::cout << "k_a " << cpbs::format_double(row.k_a) << "  residual_rms_V "
                  << cpbs::format_double(row.residual_rms) << "\n";
    std::cout << "argmin k_a " << cpbs::format_double(sweep.best().k_a) << "\n";
    return 0;
}

// Fit configuration:
// {
//   "params_file": "initial.json", "dt": 1.0,
//   "ocv": {"charge": {"current": "c_i.csv", "voltage": "c_v.csv"},
//           "discharge": {...}, "breakpoints": 21, "r0_guess": 0.0135},
//   "dynamic": {"current": "i.csv", "voltage": "v.csv", "soc0": 0.8, "vc0": 0.0,
//               "freeze": ["capacity_q"]}
// }
cpbs::CurrentVoltageLog load_log(const json& j, const fs::path& base, double dt, const std::string& where) {
    auto path_of = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string())
            throw cpbs::ConfigError("fit: missing path '" + where + "." + key + "'");
        fs::path p = j.at(key).get<std::string>();
        if (p.is_relative()) p = base / p;
        if (!fs::exists(p)) throw cpbs::ConfigError("fit: '" + where + "." + key + "': file not found: " + p.string());
        return p;
    };
    return {cpbs::load_csv(path_of("current"), dt), cpbs::load_csv(path_of("voltage"), dt)};
}

int cmd_fit(const GlobalOptions& g) {
    if (g.config.empty()) throw cpbs::ConfigError("--config is required");
    const fs::path config_path = g.config;
    const json cfg = cpbs::read_json_file(config_path);
    const fs::path base = config_path.parent_path();
    if (!cfg.contains("params_file") || !cfg.at("params_file").is_string())
        throw cpbs::ConfigError("fit: missing field 'params_file'");
    fs::path params_path = cfg.at("params_file").get<std::string>();
    if (params_path.is_relative()) params_path = base / params_path;
    if (!fs::exists(params_path)) throw cpbs::ConfigError("fit: 'params_file': file not found: " + params_path.string());
    cpbs::EcmParams params = cpbs::load_params(params_path);
    const double dt = cfg.value("dt", 1.0);
    if (!(dt > 0.0)) throw cpbs::ConfigError("fit: field 'dt' must be > 0");
    if (!cfg.contains("ocv") && !cfg.contains("dynamic"))
        throw cpbs::ConfigError("fit: need an 'ocv' and/or 'dynamic' section");

    json report;
    if (cfg.contains("ocv")) {
        const json& o = cfg.at("ocv");
        if (!o.contains("charge") || !o.contains("discharge"))
            throw cpbs::ConfigError("fit: 'ocv' needs 'charge' and 'discharge'");
        const auto charge = load_log(o.at("charge"), base, dt, "ocv.charge");
        const auto discharge = load_log(o.at("discharge"), base, dt, "ocv.discharge");
        const auto n = o.value("breakpoints", std::size_t{21});
        std::optional<double> r0_guess;
        if (o.contains("r0_guess")) r0_guess = o.at("r0_guess").get<double>();
        auto extraction = cpbs::extract_ocv(charge, discharge, params.capacity_q, n, r0_guess);
        for (const auto& w : extraction.warnings) std::cerr << "warning: " << w << "\n";
        params.ocv = extraction.curve;
        report["ocv"] = {{"soc_span", extraction.soc_span},
                         {"breakpoints", n},
                         {"warnings", extraction.warnings}};
    }

    if (cfg.contains("dynamic")) {
        const json& d = cfg.at("dynamic");
        const auto data = load_log(d, base, dt, "dynamic");
        const cpbs::BatteryState x0{d.value("soc0", 1.0), d.value("vc0", 0.0)};
        std::set<cpbs::FitParam> frozen;
        for (const auto& name : d.value("freeze", std::vector<std::string>{})) {
            try {
                frozen.insert(cpbs::parse_fit_param(name));
            } catch (const std::invalid_argument& e) {
                throw cpbs::ConfigError(std::string("fit: 'dynamic.freeze': ") + e.what());
            }
        }
        const auto fit = cpbs::fit_rc(params, data, x0, frozen);
        params = fit.fitted;
        std::vector<std::string> frozen_names;
        for (auto p : frozen) frozen_names.emplace_back(cpbs::to_string(p));
        report["fit"] = {{"rmse_V", fit.rmse},
                         {"iterations", fit.iterations},
                         {"converged", fit.converged},
                         {"frozen", frozen_names}};
    }

    const fs::path out = g.out.empty() ? fs::path("out/fit") : fs::path(g.out);
    cpbs::save_params(out / "params.json", params);
    report["params"] = cpbs::params_to_json(params);
    cpbs::write_json_file(out / "fit_report.json", report);
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal-control false-data-injection attacks on an equivalent-circuit battery model"};
    app.require_subcommand(1);

    GlobalOptions global;
    std::uint64_t seed_value = 0;
    app.add_option("--config", global.config, "Scenario or fit configuration (JSON)");
    app.add_option("--out", global.out, "Output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed_value, "Plant noise seed override");
    app.fallthrough();

    auto* simulate = app.add_subcommand("simulate", "Nominal simulation only; writes nominal.csv");
    auto* scenario = app.add_subcommand("scenario", "Full attack pipeline; writes attack.csv, riccati.csv, summary.json");
    bool perfect_plant = false;
    scenario->add_flag("--perfect-plant", perfect_plant, "Ignore plant_overrides (plant = adversary model, no noise)");

    auto* sweep = app.add_subcommand("sweep", "Output-attack gain sweep; writes sweep.csv");
    std::vector<double> ka;
    bool serial = false;
    bool sweep_perfect = false;
    sweep->add_option("--ka", ka, "Gains to evaluate (defaults to the config's sweep_ka)")->delimiter(',');
    sweep->add_flag("--serial", serial, "Evaluate gains sequentially");
    sweep->add_flag("--perfect-plant", sweep_perfect, "Ignore plant_overrides");

    auto* fit = app.add_subcommand("fit", "Identify OCV and RC parameters; writes params.json, fit_report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }
    if (seed_opt->count() > 0) global.seed = seed_value;

    try {
        if (*simulate) return cmd_simulate(global);
        if (*scenario) return cmd_scenario(global, perfect_plant);
        if (*sweep) return cmd_sweep(global, ka, serial, sweep_perfect);
        if (*fit) return cmd_fit(global);
    } catch (const cpbs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kConfigError;
}
