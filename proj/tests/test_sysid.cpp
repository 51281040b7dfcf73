#include <doctest.h>

#include <cmath>

#include "cpbs/stealth.hpp"
#include "cpbs/sysid.hpp"
#include "fixtures.hpp"

using namespace cpbs;
using doctest::Approx;

namespace {

// Constant-current sweep across the full SoC range with vc starting at its
// steady-state value for that current.
CurrentVoltageLog sweep(const EcmParams& p, bool charging, double noise_std, std::uint64_t seed) {
    const double magnitude = p.capacity_q / 36000.0;
    const double i = charging ? -magnitude : magnitude;
    const double duration = 36000.0;
    const TimeSeries current(0.0, 1.0, std::vector<double>(static_cast<std::size_t>(duration) + 1, i));
    const BatteryState x0{charging ? 0.0 : 1.0, i * p.r1};
    TimeSeries v = simulate(p, x0, current).voltage;
    if (noise_std > 0.0) {
        const TimeSeries noise = v.with_samples(gaussian_noise(v.size(), noise_std, seed));
        v = add(v, noise);
    }
    return {current, v};
}

double worst_breakpoint_error(const OcvCurve& fitted, const OcvCurve& truth) {
    double worst = 0.0;
    for (std::size_t k = 0; k < fitted.soc_breakpoints().size(); ++k) {
        const double s = fitted.soc_breakpoints()[k];
        worst = std::max(worst, std::abs(fitted.ocv_values()[k] - truth(s)));
    }
    return worst;
}

}  // namespace

TEST_CASE("OCV round trip, noiseless") {
    const EcmParams p = test::reference_cell();
    const auto res = extract_ocv(sweep(p, true, 0.0, 0), sweep(p, false, 0.0, 0), p.capacity_q, 21,
                                 p.r0);
    CHECK(res.warnings.empty());
    CHECK(res.soc_span >= 0.99);
    REQUIRE(res.curve.soc_breakpoints().size() == 21);
    CHECK(res.curve.soc_breakpoints().front() == 0.0);
    CHECK(res.curve.soc_breakpoints().back() == 1.0);
    CHECK(worst_breakpoint_error(res.curve, p.ocv) <= 2e-3);
}

TEST_CASE("OCV round trip with 1 mV sensor noise") {
    const EcmParams p = test::reference_cell();
    const auto res = extract_ocv(sweep(p, true, 1e-3, 21), sweep(p, false, 1e-3, 22), p.capacity_q, 21);
    CHECK(worst_breakpoint_error(res.curve, p.ocv) <= 5e-3);
    for (std::size_t k = 1; k < res.curve.ocv_values().size(); ++k)
        CHECK(res.curve.ocv_values()[k] > res.curve.ocv_values()[k - 1]);
}

TEST_CASE("identical charge and discharge voltage is returned unchanged") {
    const EcmParams p = test::linear_cell();
    const double i = p.capacity_q / 36000.0;
    auto log = [&](bool charging) {
        const TimeSeries current(0.0, 1.0, std::vector<double>(36001, charging ? -i : i));
        std::vector<double> v(current.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double soc = charging ? k / 36000.0 : 1.0 - k / 36000.0;
            v[k] = p.ocv(soc);
        }
        return CurrentVoltageLog{current, current.with_samples(v)};
    };
    const auto res = extract_ocv(log(true), log(false), p.capacity_q, 11);
    CHECK(worst_breakpoint_error(res.curve, p.ocv) <= 1e-9);
}

TEST_CASE("OCV extraction guards") {
    const EcmParams p = test::reference_cell();
    const auto c = sweep(p, true, 0.0, 0);
    const auto d = sweep(p, false, 0.0, 0);

    SUBCASE("large sweep current warns") {
        const auto res = extract_ocv(c, d, p.capacity_q, 11, 0.05);
        CHECK(res.warnings.size() == 1);
    }
    SUBCASE("current reversal breaks monotone SoC") {
        auto samples = std::vector<double>(c.current.samples().begin(), c.current.samples().end());
        samples[100] = 1.0;
        const CurrentVoltageLog bad{c.current.with_samples(samples), c.voltage};
        CHECK_THROWS_AS((void)extract_ocv(bad, d, p.capacity_q, 11), std::invalid_argument);
    }
    SUBCASE("short sweeps do not cover enough SoC") {
        const std::size_t n = c.current.size() / 2;
        const auto head = [n](const TimeSeries& s) {
            return TimeSeries(s.t0(), s.dt(), std::vector<double>(s.samples().begin(), s.samples().begin() + n));
        };
        CHECK_THROWS_WITH_AS((void)extract_ocv({head(c.current), head(c.voltage)},
                                               {head(d.current), head(d.voltage)}, p.capacity_q, 11),
                             doctest::Contains("span"), std::invalid_argument);
    }
}

TEST_CASE("fit_rc recovers RC parameters from x1.5 guesses") {
    const EcmParams truth = test::reference_cell();
    const auto current = synthetic_profile(ProfileKind::sin_mix, 3.0, 0.5, 3600.0, 1.0, 5);
    const BatteryState x0{0.8, 0.0};
    const CurrentVoltageLog data{current, simulate(truth, x0, current).voltage};

    EcmParams guess = truth;
    guess.r0 *= 1.5;
    guess.r1 *= 1.5;
    guess.c1 *= 1.5;
    const auto fit = fit_rc(guess, data, x0, {FitParam::capacity_q});
    INFO("rmse ", fit.rmse, " iterations ", fit.iterations, " r0 ", fit.fitted.r0, " r1 ",
         fit.fitted.r1, " c1 ", fit.fitted.c1);
    CHECK(fit.converged);
    CHECK(fit.fitted.capacity_q == truth.capacity_q);
    CHECK(fit.fitted.r0 == Approx(truth.r0).epsilon(0.05));
    CHECK(fit.fitted.r1 == Approx(truth.r1).epsilon(0.05));
    CHECK(fit.fitted.c1 == Approx(truth.c1).epsilon(0.05));
    CHECK(fit.rmse < voltage_rmse(guess, data, x0));
    CHECK(std::is_sorted(fit.best_rmse_history.rbegin(), fit.best_rmse_history.rend()));
}

TEST_CASE("fit_rc edge cases") {
    const EcmParams truth = test::reference_cell();
    const auto current = synthetic_profile(ProfileKind::pulse_train, 2.0, 0.0, 600.0, 1.0, 1);
    const CurrentVoltageLog data{current, simulate(truth, {0.5, 0.0}, current).voltage};

    const auto exact = fit_rc(truth, data, {0.5, 0.0}, {});
    CHECK(exact.converged);
    CHECK(exact.iterations == 0);
    CHECK(exact.rmse <= 1e-9);

    EcmParams off = truth;
    off.r0 *= 2.0;
    const auto all_frozen =
        fit_rc(off, data, {0.5, 0.0}, {FitParam::r0, FitParam::r1, FitParam::c1, FitParam::capacity_q});
    CHECK(all_frozen.fitted.r0 == off.r0);
    CHECK(all_frozen.iterations == 0);

    CHECK(parse_fit_param("c1_farad") == FitParam::c1);
    CHECK(to_string(FitParam::capacity_q) == "capacity_q");
    CHECK_THROWS_AS((void)parse_fit_param("r2"), std::invalid_argument);
}
