#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cpbs/attack.hpp"
#include "cpbs/metrics.hpp"
#include "cpbs/stealth.hpp"
#include "fixtures.hpp"

using namespace cpbs;
using doctest::Approx;

namespace {

struct Setup {
    EcmParams adv = test::reference_cell();
    BatteryState x0{0.8, 0.0};
    TimeSeries u_nom = synthetic_profile(ProfileKind::sin_mix, 1.0, 1.1935, 1800.0, 1.0, 11);
    TimeSeries u_a = synthesize_input_attack(adv, AttackWeights::scenario_default(),
                                             {0.8, 0.5, 0.0, 1800.0, ReferenceShape::linear_ramp},
                                             u_nom, x0)
                         .u_a;
};

}  // namespace

TEST_CASE("open-loop attack cancels exactly on the adversary's own model") {
    const Setup s;
    const auto y_a = open_loop_output_attack(s.adv, s.x0, s.u_nom, s.u_a);
    const auto y_attacked = simulate(s.adv, s.x0, add(s.u_nom, s.u_a)).voltage;
    const auto y_nom = nominal_model_output(s.adv, s.x0, s.u_nom);
    CHECK(max_abs_diff(add(y_attacked, y_a), y_nom) <= 1e-12);
    // With a zero input attack there is nothing to mask.
    const auto none = open_loop_output_attack(s.adv, s.x0, s.u_nom, TimeSeries::zeros_like(s.u_nom));
    for (double v : none.samples()) CHECK(v == 0.0);
}

TEST_CASE("perfect model: any gain masks to round-off") {
    const Setup s;
    const PlantConfig plant{s.adv, 0.0, 1};
    for (double k : {-0.5, -0.05, 0.0, 0.05, 0.5, 3.0}) {
        const auto r = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, k);
        CHECK(r.residual_max <= 1e-9);
        CHECK(r.gain_warning == (std::abs(k) >= 1.0));
    }
}

TEST_CASE("measured voltage equals plant voltage plus injected correction") {
    const Setup s;
    PlantConfig plant{s.adv, 0.002, 99};
    plant.true_params.r0 *= 1.2;
    const double k = -0.05;
    const auto r = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, k);
    const auto y_model = simulate(s.adv, s.x0, add(s.u_nom, s.u_a)).voltage;
    for (std::size_t i = 0; i < s.u_nom.size(); ++i) {
        CHECK(r.y_measured[i] == r.y_plant[i] + r.y_a[i]);
        // y_a = y_nom - g(X, U) + k (y_measured - y_nom)
        const double rhs = r.y_nom[i] - y_model[i] + k * (r.y_measured[i] - r.y_nom[i]);
        CHECK(r.y_a[i] == Approx(rhs).epsilon(1e-12).scale(1.0));
    }
    CHECK(r.residual_rms == Approx(rms(r.y_measured, r.y_nom)).epsilon(1e-12));
    CHECK(r.residual_max == Approx(max_abs_diff(r.y_measured, r.y_nom)).epsilon(1e-12));
}

TEST_CASE("resistance mismatch: residual scales as 1 / (1 - k_a)") {
    const Setup s;
    PlantConfig plant{s.adv, 0.0, 0};
    plant.true_params.r0 *= 1.2;
    const double base = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, 0.0).residual_rms;
    CHECK(base > 1e-4);
    for (double k : {-0.1, -0.05, 0.05, 0.1}) {
        const double res = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, k).residual_rms;
        CHECK(res == Approx(base / (1.0 - k)).epsilon(1e-9));
    }
}

TEST_CASE("plant trajectory follows the true parameters") {
    const Setup s;
    PlantConfig plant{s.adv, 0.0, 0};
    plant.true_params.capacity_q *= 0.9;
    const auto r = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, 0.0);
    CHECK(r.plant_states == simulate(plant.true_params, s.x0, add(s.u_nom, s.u_a)).states);
    CHECK(r.nominal_states == simulate(s.adv, s.x0, s.u_nom).states);
}

TEST_CASE("k_a = 1 and bad plants are rejected") {
    const Setup s;
    const PlantConfig plant{s.adv, 0.0, 0};
    CHECK_THROWS_AS((void)feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, NAN),
                    std::invalid_argument);
    const PlantConfig noisy{s.adv, -1.0, 0};
    CHECK_THROWS_AS((void)feedback_output_attack(s.adv, noisy, s.x0, s.u_nom, s.u_a, 0.0),
                    std::invalid_argument);
}

TEST_CASE("gaussian noise: reproducible with the right moments") {
    CHECK(gaussian_noise(7, 0.0, 3) == std::vector<double>(7, 0.0));
    const auto a = gaussian_noise(200001, 0.005, 42);
    CHECK(a == gaussian_noise(200001, 0.005, 42));
    CHECK(a != gaussian_noise(200001, 0.005, 43));
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    var /= a.size();
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::sqrt(var) == Approx(0.005).epsilon(0.01));
    // Odd lengths are a prefix of the same stream.
    const auto first = gaussian_noise(1, 1.0, 1);
    CHECK(first[0] == gaussian_noise(2, 1.0, 1)[0]);
}

TEST_CASE("k_a = 0 reduces to the open-loop attack bit for bit") {
    const Setup s;
    PlantConfig plant{s.adv, 0.004, 3};
    plant.true_params.r1 *= 0.8;
    const auto r = feedback_output_attack(s.adv, plant, s.x0, s.u_nom, s.u_a, 0.0);
    CHECK(r.y_a == open_loop_output_attack(s.adv, s.x0, s.u_nom, s.u_a));
}
