#include <doctest.h>

#include <filesystem>

#include "cpbs/errors.hpp"
#include "cpbs/scenario.hpp"
#include "fixtures.hpp"

using namespace cpbs;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
    return json::parse(R"({
        "name": "unit",
        "params_file": "params/reference_cell.json",
        "profile": {"kind": "constant", "bias": 1.0, "duration": 600.0},
        "dt": 1.0,
        "x0": {"soc": 0.8},
        "reference": {"soc_target": 0.6},
        "k_a": -0.05
    })");
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cpbs_scenario_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void expect_field_error(const json& j, const std::string& field) {
    const std::string needle = "'" + field;
    CHECK_THROWS_WITH_AS((void)scenario_from_json(j, test::source_dir()),
                         doctest::Contains(needle.c_str()), ConfigError);
}

}  // namespace

TEST_CASE("scenario parsing: defaults and paths") {
    const auto c = scenario_from_json(base_config(), test::source_dir());
    CHECK(c.name == "unit");
    CHECK(c.params_file == test::source_dir() / "params/reference_cell.json");
    CHECK(c.output_dir == fs::path("out") / "unit");
    CHECK(c.x0.vc == 0.0);
    CHECK(c.reference_shape == ReferenceShape::linear_ramp);
    CHECK(c.weights.q1 == AttackWeights::scenario_default().q1);
    CHECK_FALSE(c.plant_overrides.has_value());
    CHECK_FALSE(c.i_max.has_value());
}

TEST_CASE("scenario parsing: errors name the field") {
    json j = base_config();
    j.erase("params_file");
    expect_field_error(j, "params_file");

    j = base_config();
    j["params_file"] = "params/nope.json";
    expect_field_error(j, "params_file");

    j = base_config();
    j["profile"]["kind"] = "udds";
    expect_field_error(j, "profile.kind");

    j = base_config();
    j["dt"] = -1.0;
    expect_field_error(j, "dt");

    j = base_config();
    j["x0"]["soc"] = "high";
    expect_field_error(j, "x0.soc");

    j = base_config();
    j["reference"]["soc_target"] = 1.5;
    expect_field_error(j, "reference.soc_target");

    j = base_config();
    j["weights"] = {{"q1_diag", {1.0, -1.0}}, {"q2_diag", {0.0, 0.0}}, {"r", 1.0}};
    expect_field_error(j, "weights");

    j = base_config();
    j["k_a"] = 1.0;
    expect_field_error(j, "k_a");

    j = base_config();
    j["plant_overrides"] = {{"scale", {{"r9_ohm", 1.2}}}};
    CHECK_THROWS_WITH_AS((void)scenario_from_json(j, test::source_dir()), doctest::Contains("r9_ohm"),
                         ConfigError);
}

TEST_CASE("plant overrides: scale then absolute") {
    const EcmParams base = test::reference_cell();
    PlantOverrides o;
    o.scale = {{"r0_ohm", 1.2}, {"c1_farad", 2.0}};
    o.absolute = {{"c1_farad", 1000.0}};
    const EcmParams p = apply_overrides(base, o);
    CHECK(p.r0 == base.r0 * 1.2);
    CHECK(p.c1 == 1000.0);
    CHECK(p.r1 == base.r1);
    CHECK(p.capacity_q == base.capacity_q);
}

TEST_CASE("prepare_scenario: perfect plant and seed override") {
    const auto config = load_scenario(test::source_dir() / "scenarios/tc1_r0_mismatch.json");
    const auto mismatched = prepare_scenario(config);
    CHECK(mismatched.plant.true_params.r0 == mismatched.adversary.r0 * 1.2);
    CHECK(mismatched.plant.seed == 7);

    const auto perfect = prepare_scenario(config, {.perfect_plant = true, .seed = 99});
    CHECK(perfect.plant.true_params.r0 == perfect.adversary.r0);
    CHECK(perfect.plant.noise_std == 0.0);
    CHECK(perfect.plant.seed == 99);
    CHECK(perfect.u_nom.size() == 3601);
}

TEST_CASE("profile from CSV") {
    const auto dir = scratch_dir("csv");
    write_csv(dir / "i.csv", TimeSeries(0.0, 2.0, std::vector<double>(301, 0.5)));
    json j = base_config();
    j["params_file"] = (test::source_dir() / "params/reference_cell.json").string();
    j["profile"] = {{"csv", "i.csv"}};
    const auto c = scenario_from_json(j, dir);
    const auto prep = prepare_scenario(c);
    CHECK(prep.u_nom.dt() == 1.0);
    CHECK(prep.u_nom.size() == 601);
    CHECK(prep.u_nom[17] == 0.5);
    fs::remove_all(dir.parent_path());
}

TEST_CASE("CLI: simulate writes nominal.csv and reports the final SoC") {
    const auto out = scratch_dir("simulate");
    const auto r = test::run_cli("--config scenarios/tc1.json --out '" + out.string() + "' simulate");
    CHECK(r.exit_code == 0);
    const auto pos = r.output.find("final_soc ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.output.substr(pos + 10)) == doctest::Approx(0.5).epsilon(1e-9));
    const auto csv = test::read_file(out / "nominal.csv");
    CHECK(csv.rfind("t,i,soc,vc,v\n", 0) == 0);
}

TEST_CASE("CLI: configuration errors exit with code 2") {
    const auto dir = scratch_dir("cli_errors");
    json j = base_config();
    j["params_file"] = "missing/params.json";
    std::ofstream(dir / "bad.json") << j.dump();
    auto r = test::run_cli("--config '" + (dir / "bad.json").string() + "' scenario");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("missing/params.json") != std::string::npos);

    j = base_config();
    j["params_file"] = (test::source_dir() / "params/reference_cell.json").string();
    std::ofstream(dir / "nosweep.json") << j.dump();
    r = test::run_cli("--config '" + (dir / "nosweep.json").string() + "' --out '" + dir.string() + "' sweep");
    CHECK(r.exit_code == 2);

    r = test::run_cli("scenario");
    CHECK(r.exit_code == 2);
    r = test::run_cli("--config scenarios/tc1.json bogus");
    CHECK(r.exit_code == 2);
}

TEST_CASE("CLI: an all-zero profile keeps the battery at rest") {
    const auto dir = scratch_dir("zero");
    json j = base_config();
    j["params_file"] = (test::source_dir() / "params/reference_cell.json").string();
    j["profile"] = {{"kind", "constant"}, {"bias", 0.0}, {"duration", 100.0}};
    j["weights"] = {{"q1_diag", {0.0, 0.0}}, {"q2_diag", {0.0, 0.0}}, {"r", 1.0}};
    std::ofstream(dir / "zero.json") << j.dump();
    const auto r = test::run_cli("--config '" + (dir / "zero.json").string() + "' --out '" +
                                 (dir / "out").string() + "' scenario");
    REQUIRE(r.exit_code == 0);
    const auto summary = json::parse(test::read_file(dir / "out" / "summary.json"));
    CHECK(summary["final_soc_attacked"].get<double>() == 0.8);
    CHECK(summary["attack_energy"].get<double>() == 0.0);
    CHECK(summary["residual_max"].get<double>() == 0.0);
}
