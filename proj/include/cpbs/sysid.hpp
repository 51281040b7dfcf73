#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cpbs/ecm.hpp"
#include "cpbs/time_series.hpp"

namespace cpbs {

/// Logged current/voltage pair on one grid.
struct CurrentVoltageLog {
    TimeSeries current;
    TimeSeries voltage;
};

struct OcvExtraction {
    OcvCurve curve;
    double soc_span = 0.0;  ///< SoC range covered by both sweeps
    std::vector<std::string> warnings;
};

/**
 * OCV curve from a pair of low-current sweeps. The charge sweep is assumed to
 * start empty (SoC 0) and the discharge sweep full (SoC 1); SoC along each is
 * coulomb counted. Charge and discharge voltages are averaged at matched SoC,
 * which cancels the ohmic and RC drops to first order. The result is projected
 * onto an increasing curve and resampled at n_breakpoints uniform SoC values.
 *
 * Throws std::invalid_argument if either sweep's SoC runs backwards or the
 * common SoC span is below 0.9.
 */
[[nodiscard]] OcvExtraction extract_ocv(const CurrentVoltageLog& charge,
                                        const CurrentVoltageLog& discharge, double capacity_q,
                                        std::size_t n_breakpoints,
                                        std::optional<double> r0_guess = std::nullopt);

enum class FitParam { r0, r1, c1, capacity_q };

[[nodiscard]] FitParam parse_fit_param(std::string_view name);
[[nodiscard]] std::string_view to_string(FitParam p);

struct FitReport {
    EcmParams fitted;
    double rmse = 0.0;  ///< [V]
    int iterations = 0;
    bool converged = false;
    std::vector<double> best_rmse_history;  ///< best RMSE after each iteration
};

struct FitOptions {
    int max_iterations = 500;
    double relative_tolerance = 1e-6;
};

/**
 * Least-RMSE fit of the non-frozen subset of {r0, r1, c1, capacity_q}.
 * Nelder-Mead in log-parameter space with one restart from the best vertex;
 * trial points whose simulation is non-finite score +inf.
 */
[[nodiscard]] FitReport fit_rc(const EcmParams& initial, const CurrentVoltageLog& data,
                               const BatteryState& x0, const std::set<FitParam>& frozen,
                               const FitOptions& options = {});

/// RMSE of the simulated terminal voltage against the logged one.
[[nodiscard]] double voltage_rmse(const EcmParams& params, const CurrentVoltageLog& data,
                                  const BatteryState& x0);

}  // namespace cpbs
