#include "cpbs/stealth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cpbs {

void PlantConfig::validate() const {
    true_params.validate();
    if (!std::isfinite(noise_std) || noise_std < 0.0)
        throw std::invalid_argument("PlantConfig: noise_std must be finite and >= 0");
}

std::vector<double> gaussian_noise(std::size_t n, double std_dev, std::uint64_t seed) {
    std::vector<double> out(n, 0.0);
    if (std_dev == 0.0) return out;
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t k = 0; k < n; k += 2) {
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = two_pi * uniform();
        out[k] = std_dev * radius * std::cos(angle);
        if (k + 1 < n) out[k + 1] = std_dev * radius * std::sin(angle);
    }
    return out;
}

TimeSeries nominal_model_output(const EcmParams& adv_params, const BatteryState& x0,
                                const TimeSeries& u_nom) {
    return simulate(adv_params, x0, u_nom).voltage;
}

TimeSeries open_loop_output_attack(const EcmParams& adv_params, const BatteryState& x0,
                                   const TimeSeries& u_nom, const TimeSeries& u_a) {
    const TimeSeries applied = add(u_nom, u_a);
    const TimeSeries y_nom = nominal_model_output(adv_params, x0, u_nom);
    const TimeSeries y_model = simulate(adv_params, x0, applied).voltage;
    return subtract(y_nom, y_model);
}

StealthResult feedback_output_attack(const EcmParams& adv_params, const PlantConfig& plant,
                                     const BatteryState& x0, const TimeSeries& u_nom,
                                     const TimeSeries& u_a, double k_a) {
    plant.validate();
    if (!std::isfinite(k_a)) throw std::invalid_argument("feedback_output_attack: k_a must be finite");
    if (k_a == 1.0)
        throw std::invalid_argument("feedback_output_attack: k_a = 1 makes the measured-voltage loop singular");

    const TimeSeries applied = add(u_nom, u_a);
    const SimulationResult nominal = simulate(adv_params, x0, u_nom);
    const SimulationResult modeled = simulate(adv_params, x0, applied);

    const std::size_t n = u_nom.size();
    const std::vector<double> noise = gaussian_noise(n, plant.noise_std, plant.seed);
    std::vector<double> y_plant(n), y_a(n), y_measured(n);
    std::vector<BatteryState> plant_states;
    plant_states.reserve(n);
    bool plant_violation = false;

    BatteryState x = x0;
    double sum_sq = 0.0;
    double max_abs = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        plant_states.push_back(x);
        plant_violation = plant_violation || !soc_in_range(x.soc);
        y_plant[k] = terminal_voltage(plant.true_params, x, applied[k]) + noise[k];

        const double y_nom = nominal.voltage[k];
        const double open_loop = y_nom - modeled.voltage[k];
        const double seen_error = (y_plant[k] - modeled.voltage[k]) / (1.0 - k_a);
        y_a[k] = open_loop + k_a * seen_error;
        y_measured[k] = y_plant[k] + y_a[k];

        const double residual = y_measured[k] - y_nom;
        sum_sq += residual * residual;
        max_abs = std::max(max_abs, std::abs(residual));

        if (k + 1 < n) x = step(plant.true_params, x, applied[k], u_nom.dt());
    }

    return StealthResult{
        .y_nom = nominal.voltage,
        .y_plant = u_nom.with_samples(std::move(y_plant)),
        .y_a = u_nom.with_samples(std::move(y_a)),
        .y_measured = u_nom.with_samples(std::move(y_measured)),
        .plant_states = std::move(plant_states),
        .nominal_states = nominal.states,
        .residual_rms = std::sqrt(sum_sq / static_cast<double>(n)),
        .residual_max = max_abs,
        .k_a = k_a,
        .gain_warning = std::abs(k_a) >= 1.0,
        .plant_soc_violation = plant_violation,
        .nominal_soc_violation = nominal.soc_violation,
    };
}

}  // namespace cpbs
