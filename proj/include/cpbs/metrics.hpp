#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cpbs/attack.hpp"
#include "cpbs/ecm.hpp"
#include "cpbs/stealth.hpp"
#include "cpbs/time_series.hpp"

namespace cpbs {

/// sqrt(mean((a - b)^2)); grids must match.
[[nodiscard]] double rms(const TimeSeries& a, const TimeSeries& b);

/// max |a - b|; grids must match.
[[nodiscard]] double max_abs_diff(const TimeSeries& a, const TimeSeries& b);

/// True when |total current| exceeds i_max at any sample. Reported, never clipped.
[[nodiscard]] bool exceeds_current_limit(const TimeSeries& total_current, double i_max);

struct ScenarioSummary {
    double final_soc_nominal = 0.0;
    double final_soc_attacked = 0.0;  ///< plant under u_nom + u_a
    double residual_rms = 0.0;        ///< [V]
    double residual_max = 0.0;        ///< [V]
    double attack_energy = 0.0;       ///< sum u_a^2 dt [A^2 s]
    bool i_max_violated = false;
};

[[nodiscard]] ScenarioSummary summarize(const TimeSeries& u_nom, const InputAttack& attack,
                                        const StealthResult& stealth,
                                        std::optional<double> i_max);

/// Everything the output attack needs, with the input attack already fixed.
struct MaskingScenario {
    EcmParams adversary;
    PlantConfig plant;
    BatteryState x0;
    TimeSeries u_nom;
    TimeSeries u_a;
};

struct KaSweepRow {
    double k_a;
    double residual_rms;
};

struct KaSweep {
    std::vector<KaSweepRow> rows;  ///< sorted by k_a
    std::size_t argmin = 0;        ///< ties go to the smallest |k_a|

    [[nodiscard]] const KaSweepRow& best() const { return rows[argmin]; }
};

/**
 * Runs the feedback output attack once per gain. Every run uses the scenario's
 * noise seed, so rows differ only through k_a. With `parallel` the gains are
 * evaluated concurrently; the table is identical either way.
 */
[[nodiscard]] KaSweep sweep_ka(const MaskingScenario& scenario, std::span<const double> ka_values,
                               bool parallel = true);

}  // namespace cpbs
