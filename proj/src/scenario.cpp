#include "cpbs/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "cpbs/errors.hpp"
#include "cpbs/io.hpp"

namespace cpbs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json* find(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const char* key, const std::string& path) {
    const json* v = find(j, key);
    if (!v) throw ConfigError("scenario: missing field '" + path + "'");
    if (!v->is_number()) throw ConfigError("scenario: field '" + path + "' must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError("scenario: field '" + path + "' must be finite");
    return x;
}

double number_or(const json& j, const char* key, const std::string& path, double fallback) {
    return find(j, key) ? number(j, key, path) : fallback;
}

std::uint64_t seed_or(const json& j, const char* key, const std::string& path, std::uint64_t fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ConfigError("scenario: field '" + path + "' must be a non-negative integer");
    return v->get<std::uint64_t>();
}

std::string string_field(const json& j, const char* key, const std::string& path) {
    const json* v = find(j, key);
    if (!v) throw ConfigError("scenario: missing field '" + path + "'");
    if (!v->is_string()) throw ConfigError("scenario: field '" + path + "' must be a string");
    return v->get<std::string>();
}

const json& object(const json& j, const char* key, const std::string& path) {
    const json* v = find(j, key);
    if (!v) throw ConfigError("scenario: missing field '" + path + "'");
    if (!v->is_object()) throw ConfigError("scenario: field '" + path + "' must be an object");
    return *v;
}

Eigen::Matrix2d weight_matrix(const json& w, const std::string& name) {
    const std::string diag_key = name + "_diag";
    if (const json* d = find(w, diag_key.c_str())) {
        if (!d->is_array() || d->size() != 2 || !(*d)[0].is_number() || !(*d)[1].is_number())
            throw ConfigError("scenario: field 'weights." + diag_key + "' must be [a, b]");
        return Eigen::Vector2d((*d)[0].get<double>(), (*d)[1].get<double>()).asDiagonal();
    }
    if (const json* m = find(w, name.c_str())) {
        Eigen::Matrix2d out;
        if (!m->is_array() || m->size() != 2)
            throw ConfigError("scenario: field 'weights." + name + "' must be a 2x2 array");
        for (int r = 0; r < 2; ++r) {
            const json& row = (*m)[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
                throw ConfigError("scenario: field 'weights." + name + "' must be a 2x2 array");
            out(r, 0) = row[0].get<double>();
            out(r, 1) = row[1].get<double>();
        }
        return out;
    }
    throw ConfigError("scenario: missing field 'weights." + diag_key + "'");
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
    return p.is_absolute() ? p : base_dir / p;
}

const char* const kParamKeys[] = {"capacity_As", "r0_ohm", "r1_ohm", "c1_farad"};

void check_param_keys(const std::map<std::string, double>& m, const std::string& path) {
    for (const auto& [key, value] : m) {
        bool known = false;
        for (const char* k : kParamKeys) known = known || key == k;
        if (!known) throw ConfigError("scenario: unknown parameter '" + key + "' in '" + path + "'");
        if (!std::isfinite(value) || !(value > 0.0))
            throw ConfigError("scenario: '" + path + "." + key + "' must be finite and > 0");
    }
}

std::map<std::string, double> number_map(const json& j, const char* key, const std::string& path) {
    std::map<std::string, double> out;
    const json* v = find(j, key);
    if (!v) return out;
    if (!v->is_object()) throw ConfigError("scenario: field '" + path + "' must be an object");
    for (const auto& [k, x] : v->items()) {
        if (!x.is_number()) throw ConfigError("scenario: field '" + path + "." + k + "' must be a number");
        out[k] = x.get<double>();
    }
    check_param_keys(out, path);
    return out;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    ScenarioConfig c;
    c.name = find(j, "name") ? string_field(j, "name", "name") : "scenario";

    c.params_file = resolve(base_dir, string_field(j, "params_file", "params_file"));
    if (!fs::exists(c.params_file))
        throw ConfigError("scenario: field 'params_file': file not found: " + c.params_file.string());

    c.dt = number(j, "dt", "dt");
    if (!(c.dt > 0.0)) throw ConfigError("scenario: field 'dt' must be > 0");

    const json& prof = object(j, "profile", "profile");
    if (const json* csv = find(prof, "csv")) {
        if (!csv->is_string()) throw ConfigError("scenario: field 'profile.csv' must be a string");
        c.profile.csv = resolve(base_dir, csv->get<std::string>());
        if (!fs::exists(*c.profile.csv))
            throw ConfigError("scenario: field 'profile.csv': file not found: " + c.profile.csv->string());
    } else {
        try {
            c.profile.kind = parse_profile_kind(string_field(prof, "kind", "profile.kind"));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("scenario: field 'profile.kind': ") + e.what());
        }
        c.profile.amplitude = number_or(prof, "amplitude", "profile.amplitude", 0.0);
        c.profile.bias = number(prof, "bias", "profile.bias");
        c.profile.duration = number(prof, "duration", "profile.duration");
        c.profile.seed = seed_or(prof, "seed", "profile.seed", 0);
        if (!(c.profile.duration > c.dt))
            throw ConfigError("scenario: field 'profile.duration' must exceed dt");
    }

    const json& x0 = object(j, "x0", "x0");
    c.x0 = {number(x0, "soc", "x0.soc"), number_or(x0, "vc", "x0.vc", 0.0)};

    const json& ref = object(j, "reference", "reference");
    c.soc_target = number(ref, "soc_target", "reference.soc_target");
    if (!(c.soc_target >= 0.0 && c.soc_target <= 1.0))
        throw ConfigError("scenario: field 'reference.soc_target' must lie in [0, 1]");
    if (!(c.x0.soc >= 0.0 && c.x0.soc <= 1.0))
        throw ConfigError("scenario: field 'x0.soc' must lie in [0, 1]");
    if (find(ref, "shape")) {
        try {
            c.reference_shape = parse_reference_shape(string_field(ref, "shape", "reference.shape"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("scenario: field 'reference.shape': ") + e.what());
        }
    }

    if (const json* w = find(j, "weights")) {
        if (!w->is_object()) throw ConfigError("scenario: field 'weights' must be an object");
        c.weights.q1 = weight_matrix(*w, "q1");
        c.weights.q2 = weight_matrix(*w, "q2");
        c.weights.r = number(*w, "r", "weights.r");
        try {
            c.weights.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("scenario: field 'weights': ") + e.what());
        }
    }

    c.k_a = number_or(j, "k_a", "k_a", 0.0);
    if (c.k_a == 1.0) throw ConfigError("scenario: field 'k_a' must not equal 1");
    if (find(j, "i_max")) {
        c.i_max = number(j, "i_max", "i_max");
        if (!(*c.i_max > 0.0)) throw ConfigError("scenario: field 'i_max' must be > 0");
    }

    if (const json* po = find(j, "plant_overrides")) {
        if (!po->is_object()) throw ConfigError("scenario: field 'plant_overrides' must be an object");
        PlantOverrides o;
        o.scale = number_map(*po, "scale", "plant_overrides.scale");
        for (const char* key : kParamKeys) {
            if (find(*po, key)) {
                o.absolute[key] = number(*po, key, std::string("plant_overrides.") + key);
            }
        }
        check_param_keys(o.absolute, "plant_overrides");
        o.noise_std = number_or(*po, "noise_std", "plant_overrides.noise_std", 0.0);
        if (o.noise_std < 0.0) throw ConfigError("scenario: field 'plant_overrides.noise_std' must be >= 0");
        o.seed = seed_or(*po, "seed", "plant_overrides.seed", 0);
        c.plant_overrides = std::move(o);
    }

    c.output_dir = find(j, "output_dir") ? fs::path(string_field(j, "output_dir", "output_dir"))
                                         : fs::path("out") / c.name;

    if (const json* s = find(j, "sweep_ka")) {
        if (!s->is_array()) throw ConfigError("scenario: field 'sweep_ka' must be an array");
        for (const auto& x : *s) {
            if (!x.is_number()) throw ConfigError("scenario: field 'sweep_ka' must hold numbers");
            c.sweep_ka.push_back(x.get<double>());
        }
    }
    return c;
}

ScenarioConfig load_scenario(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("scenario file not found: " + path.string());
    return scenario_from_json(read_json_file(path), path.parent_path());
}

EcmParams apply_overrides(const EcmParams& base, const PlantOverrides& overrides) {
    EcmParams p = base;
    auto slot = [&p](const std::string& key) -> double& {
        if (key == "capacity_As") return p.capacity_q;
        if (key == "r0_ohm") return p.r0;
        if (key == "r1_ohm") return p.r1;
        return p.c1;
    };
    for (const auto& [key, factor] : overrides.scale) slot(key) *= factor;
    for (const auto& [key, value] : overrides.absolute) slot(key) = value;
    p.validate();
    return p;
}

ReferenceTrajectory PreparedScenario::reference() const {
    return {config.x0.soc, config.soc_target, u_nom.t0(), u_nom.end_time(), config.reference_shape};
}

PreparedScenario prepare_scenario(const ScenarioConfig& config, const RunOptions& options) {
    EcmParams adversary = load_params(config.params_file);

    TimeSeries u_nom = config.profile.csv
                           ? load_csv(*config.profile.csv, config.dt)
                           : synthetic_profile(config.profile.kind, config.profile.amplitude,
                                               config.profile.bias, config.profile.duration,
                                               config.dt, config.profile.seed);
    if (u_nom.size() < 2) throw ConfigError("scenario: profile must span at least one step");

    PlantConfig plant{adversary, 0.0, 0};
    if (config.plant_overrides && !options.perfect_plant) {
        plant.true_params = apply_overrides(adversary, *config.plant_overrides);
        plant.noise_std = config.plant_overrides->noise_std;
        plant.seed = config.plant_overrides->seed;
    }
    if (options.seed) plant.seed = *options.seed;

    return {config, std::move(adversary), std::move(plant), std::move(u_nom)};
}

ScenarioRun run_scenario(const PreparedScenario& prepared) {
    const auto& c = prepared.config;
    InputAttack attack =
        synthesize_input_attack(prepared.adversary, c.weights, prepared.reference(), prepared.u_nom, c.x0);
    StealthResult stealth = feedback_output_attack(prepared.adversary, prepared.plant, c.x0,
                                                   prepared.u_nom, attack.u_a, c.k_a);
    ScenarioSummary summary = summarize(prepared.u_nom, attack, stealth, c.i_max);
    return {prepared, std::move(attack), std::move(stealth), summary};
}

namespace {

std::vector<double> times_of(const TimeSeries& s) {
    std::vector<double> t(s.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = s.time(k);
    return t;
}

std::vector<double> values_of(const TimeSeries& s) { return {s.samples().begin(), s.samples().end()}; }

std::vector<double> soc_of(const std::vector<BatteryState>& states) {
    std::vector<double> out(states.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = states[k].soc;
    return out;
}

}  // namespace

void write_nominal(const fs::path& out_dir, const TimeSeries& u_nom, const SimulationResult& nominal) {
    std::vector<double> vc(nominal.states.size());
    for (std::size_t k = 0; k < vc.size(); ++k) vc[k] = nominal.states[k].vc;
    write_table_csv(out_dir / "nominal.csv", {"t", "i", "soc", "vc", "v"},
                    {times_of(u_nom), values_of(u_nom), soc_of(nominal.states), vc,
                     values_of(nominal.voltage)});
}

json summary_json(const ScenarioRun& run) {
    const auto& s = run.summary;
    const auto& st = run.stealth;
    json j;
    j["scenario"] = run.prepared.config.name;
    j["k_a"] = st.k_a;
    j["final_soc_nominal"] = s.final_soc_nominal;
    j["final_soc_attacked"] = s.final_soc_attacked;
    j["final_soc_plant"] = st.plant_states.back().soc;
    j["final_soc_adversary_model"] = run.attack.states.back().soc;
    j["residual_rms"] = s.residual_rms;
    j["residual_max"] = s.residual_max;
    j["max_residual"] = s.residual_max;
    j["attack_energy"] = s.attack_energy;
    j["i_max_violated"] = s.i_max_violated;
    j["soc_violation"] = {{"nominal", st.nominal_soc_violation},
                          {"adversary_model", run.attack.soc_violation},
                          {"plant", st.plant_soc_violation}};
    j["k_a_gain_warning"] = st.gain_warning;
    j["plant"] = {{"params", params_to_json(run.prepared.plant.true_params)},
                  {"noise_std", run.prepared.plant.noise_std},
                  {"seed", run.prepared.plant.seed}};
    return j;
}

void write_scenario_outputs(const fs::path& out_dir, const ScenarioRun& run) {
    const auto& u_nom = run.prepared.u_nom;
    const auto& st = run.stealth;
    const TimeSeries applied = add(u_nom, run.attack.u_a);
    const auto t = times_of(u_nom);

    write_table_csv(out_dir / "attack.csv",
                    {"t", "u_nom", "u_a", "i_applied", "soc_nominal", "soc_attacked", "y_nom",
                     "y_plant", "y_a", "y_measured"},
                    {t, values_of(u_nom), values_of(run.attack.u_a), values_of(applied),
                     soc_of(st.nominal_states), soc_of(st.plant_states), values_of(st.y_nom),
                     values_of(st.y_plant), values_of(st.y_a), values_of(st.y_measured)});
    write_table_csv(out_dir / "stealth.csv", {"t", "y_nom", "y_plant", "y_a", "y_measured"},
                    {t, values_of(st.y_nom), values_of(st.y_plant), values_of(st.y_a),
                     values_of(st.y_measured)});
    run.attack.riccati.write_csv(out_dir / "riccati.csv");
    write_json_file(out_dir / "summary.json", summary_json(run));
}

void write_sweep_outputs(const fs::path& out_dir, const KaSweep& sweep) {
    std::vector<double> ka, res;
    json rows = json::array();
    for (const auto& r : sweep.rows) {
        ka.push_back(r.k_a);
        res.push_back(r.residual_rms);
        rows.push_back({{"k_a", r.k_a}, {"residual_rms_V", r.residual_rms}});
    }
    write_table_csv(out_dir / "sweep.csv", {"k_a", "residual_rms_V"}, {ka, res});
    write_json_file(out_dir / "sweep_summary.json",
                    {{"rows", rows},
                     {"argmin_k_a", sweep.best().k_a},
                     {"argmin_residual_rms_V", sweep.best().residual_rms}});
}

}  // namespace cpbs
