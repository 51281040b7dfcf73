#pragma once

#include <cstdint>
#include <vector>

#include "cpbs/ecm.hpp"
#include "cpbs/time_series.hpp"

namespace cpbs {

/// Ground-truth battery seen by the BMS, possibly different from the
/// adversary's model, plus additive white gaussian sensor noise.
struct PlantConfig {
    EcmParams true_params;
    double noise_std = 0.0;  ///< [V]
    std::uint64_t seed = 0;

    void validate() const;
};

struct StealthResult {
    TimeSeries y_nom;       ///< adversary-model output under u_nom only
    TimeSeries y_plant;     ///< plant sensor voltage under input attack, before masking
    TimeSeries y_a;         ///< injected output attack
    TimeSeries y_measured;  ///< y_plant + y_a, what the BMS receives
    std::vector<BatteryState> plant_states;
    std::vector<BatteryState> nominal_states;  ///< adversary model under u_nom
    double residual_rms = 0.0;                 ///< RMS(y_measured - y_nom)
    double residual_max = 0.0;                 ///< max |y_measured - y_nom|
    double k_a = 0.0;
    bool gain_warning = false;        ///< |k_a| >= 1
    bool plant_soc_violation = false;
    bool nominal_soc_violation = false;
};

/// g(X_nom, U_nom) on the adversary's model.
[[nodiscard]] TimeSeries nominal_model_output(const EcmParams& adv_params, const BatteryState& x0,
                                              const TimeSeries& u_nom);

/// y_a = g(X_nom, U_nom) - g(X, U_nom + U_a), both on the adversary's model.
[[nodiscard]] TimeSeries open_loop_output_attack(const EcmParams& adv_params,
                                                 const BatteryState& x0, const TimeSeries& u_nom,
                                                 const TimeSeries& u_a);

/**
 * Open-loop cancellation plus measured-voltage correction
 *
 *   y_a = g(X_nom, U_nom) - g(X, U) + k_a (Y - g(X_nom, U_nom)),
 *
 * where Y = y_plant + y_a is the voltage the BMS receives at the same sample.
 * The per-sample algebraic loop is solved in closed form:
 *   Y - y_nom = (y_plant - g(X, U)) / (1 - k_a).
 * k_a = 1 has no solution and is rejected.
 */
[[nodiscard]] StealthResult feedback_output_attack(const EcmParams& adv_params,
                                                   const PlantConfig& plant,
                                                   const BatteryState& x0, const TimeSeries& u_nom,
                                                   const TimeSeries& u_a, double k_a);

/// Deterministic N(0, std) sequence (Box-Muller on mt19937_64), identical on every platform.
[[nodiscard]] std::vector<double> gaussian_noise(std::size_t n, double std_dev, std::uint64_t seed);

}  // namespace cpbs
