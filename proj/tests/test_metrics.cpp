#include <doctest.h>

#include <filesystem>

#include "cpbs/attack.hpp"
#include "cpbs/io.hpp"
#include "cpbs/metrics.hpp"
#include "cpbs/scenario.hpp"
#include "fixtures.hpp"

using namespace cpbs;
using doctest::Approx;

TEST_CASE("rms and max difference") {
    const TimeSeries a(0.0, 1.0, {1.0, 2.0, 3.0, 4.0});
    const TimeSeries b(0.0, 1.0, {1.0, 0.0, 3.0, 6.0});
    CHECK(rms(a, a) == 0.0);
    CHECK(rms(a, b) == Approx(std::sqrt(8.0 / 4.0)));
    CHECK(max_abs_diff(a, b) == 2.0);
    CHECK_THROWS_AS((void)rms(a, TimeSeries(0.0, 2.0, {1.0, 2.0, 3.0, 4.0})), std::invalid_argument);
}

TEST_CASE("current limit is reported on magnitude") {
    const TimeSeries i(0.0, 1.0, {1.0, -10.5, 3.0});
    CHECK(exceeds_current_limit(i, 10.0));
    CHECK_FALSE(exceeds_current_limit(i, 10.5));
    CHECK_THROWS_AS((void)exceeds_current_limit(i, 0.0), std::invalid_argument);
}

TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_double(-0.05) == "-0.05");
    CHECK(format_double(0.038) == "0.038");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1e-12) == "1e-12");
}

TEST_CASE("sweep table rows are written as k_a,residual") {
    const auto dir = std::filesystem::temp_directory_path() / "cpbs_sweep_fmt";
    KaSweep sweep;
    sweep.rows = {{-0.05, 0.038}};
    write_sweep_outputs(dir, sweep);
    const auto text = test::read_file(dir / "sweep.csv");
    CHECK(text == "k_a,residual_rms_V\n-0.05,0.038\n");
    std::filesystem::remove_all(dir);
}

namespace {

MaskingScenario mismatch_scenario(double noise) {
    const EcmParams adv = test::reference_cell();
    PlantConfig plant{adv, noise, 5};
    plant.true_params.r0 *= 1.2;
    const BatteryState x0{0.8, 0.0};
    const auto u_nom = synthetic_profile(ProfileKind::sin_mix, 1.0, 1.1935, 1200.0, 1.0, 11);
    const auto attack = synthesize_input_attack(adv, AttackWeights::scenario_default(),
                                                {0.8, 0.5, 0.0, 1200.0, ReferenceShape::linear_ramp},
                                                u_nom, x0);
    return {adv, plant, x0, u_nom, attack.u_a};
}

}  // namespace

TEST_CASE("sweep: parallel and serial tables are identical") {
    const auto s = mismatch_scenario(0.003);
    const std::vector<double> ka{0.1, -0.1, 0.0, 0.05, -0.05};
    const auto par = sweep_ka(s, ka, true);
    const auto ser = sweep_ka(s, ka, false);
    REQUIRE(par.rows.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(par.rows[i].k_a == ser.rows[i].k_a);
        CHECK(par.rows[i].residual_rms == ser.rows[i].residual_rms);
    }
    CHECK(par.argmin == ser.argmin);
    CHECK(std::is_sorted(par.rows.begin(), par.rows.end(),
                         [](const auto& a, const auto& b) { return a.k_a < b.k_a; }));
}

TEST_CASE("sweep: negative gain wins under resistance mismatch") {
    const auto sweep = sweep_ka(mismatch_scenario(0.0), std::vector<double>{-0.1, -0.05, 0.0, 0.05, 0.1});
    CHECK(sweep.best().k_a < 0.0);
    CHECK(sweep.best().residual_rms < sweep.rows[2].residual_rms);
}

TEST_CASE("sweep: ties go to the smallest gain magnitude") {
    const EcmParams adv = test::reference_cell();
    const auto u_nom = TimeSeries(0.0, 1.0, std::vector<double>(20, 0.0));
    const MaskingScenario s{adv, {adv, 0.0, 0}, {0.5, 0.0}, u_nom, u_nom};
    const auto sweep = sweep_ka(s, std::vector<double>{-0.1, 0.05, -0.05, 0.1});
    CHECK(sweep.best().residual_rms == 0.0);
    CHECK(std::abs(sweep.best().k_a) == 0.05);
    CHECK(sweep.best().k_a == -0.05);
    CHECK_THROWS_AS((void)sweep_ka(s, std::vector<double>{}), std::invalid_argument);
}
