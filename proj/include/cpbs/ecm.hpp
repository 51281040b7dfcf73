#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "cpbs/time_series.hpp"

namespace cpbs {

/**
 * Open-circuit voltage as a piecewise-linear function of state of charge.
 *
 * Breakpoints span exactly [0, 1] and both axes are strictly increasing, so
 * the curve is invertible. Outside [0, 1] the end segments are extended
 * linearly.
 */
class OcvCurve {
public:
    OcvCurve(std::vector<double> soc_breakpoints, std::vector<double> ocv_values);

    [[nodiscard]] double operator()(double soc) const;

    [[nodiscard]] std::span<const double> soc_breakpoints() const { return soc_; }
    [[nodiscard]] std::span<const double> ocv_values() const { return ocv_; }
    [[nodiscard]] std::size_t size() const { return soc_.size(); }

private:
    std::vector<double> soc_;
    std::vector<double> ocv_;
};

/// First-order RC equivalent circuit: OCV source, series r0, one r1 || c1 branch.
struct EcmParams {
    double capacity_q;  ///< [A s]
    double r0;          ///< [Ohm]
    double r1;          ///< [Ohm]
    double c1;          ///< [F]
    OcvCurve ocv;

    /// Throws std::invalid_argument unless every scalar is finite and > 0.
    void validate() const;

    [[nodiscard]] double time_constant() const { return r1 * c1; }
};

/// State vector [soc, vc]. SoC is never clamped.
struct BatteryState {
    double soc = 0.0;
    double vc = 0.0;

    [[nodiscard]] Eigen::Vector2d vector() const { return {soc, vc}; }
    bool operator==(const BatteryState&) const = default;
};

struct StateMatrices {
    Eigen::Matrix2d a;
    Eigen::Vector2d b;
};

/// Continuous-time x' = A x + B i, positive current discharges.
[[nodiscard]] StateMatrices state_matrices(const EcmParams& params);

[[nodiscard]] double ocv(const OcvCurve& curve, double soc);

/// OCV(soc) - vc - current * r0
[[nodiscard]] double terminal_voltage(const EcmParams& params, const BatteryState& state,
                                      double current);

/// Exact zero-order-hold step of length dt under a constant current.
[[nodiscard]] BatteryState step(const EcmParams& params, const BatteryState& state,
                                double current, double dt);

[[nodiscard]] inline bool soc_in_range(double soc) { return soc >= 0.0 && soc <= 1.0; }

struct SimulationResult {
    std::vector<BatteryState> states;  ///< states[k] at sample k, states[0] = x0
    TimeSeries voltage;
    bool soc_violation = false;

    [[nodiscard]] TimeSeries soc() const;
    [[nodiscard]] TimeSeries vc() const;
};

[[nodiscard]] SimulationResult simulate(const EcmParams& params, const BatteryState& x0,
                                        const TimeSeries& current);

}  // namespace cpbs
