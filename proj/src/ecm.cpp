#include "cpbs/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpbs {

OcvCurve::OcvCurve(std::vector<double> soc_breakpoints, std::vector<double> ocv_values)
    : soc_(std::move(soc_breakpoints)), ocv_(std::move(ocv_values)) {
    if (soc_.size() != ocv_.size())
        throw std::invalid_argument("OcvCurve: breakpoint and value counts differ");
    if (soc_.size() < 2) throw std::invalid_argument("OcvCurve: need at least 2 points");
    if (soc_.front() != 0.0 || soc_.back() != 1.0)
        throw std::invalid_argument("OcvCurve: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 0; i < soc_.size(); ++i) {
        if (!std::isfinite(soc_[i]) || !std::isfinite(ocv_[i]))
            throw std::invalid_argument("OcvCurve: non-finite entry at index " + std::to_string(i));
        if (i > 0 && !(soc_[i] > soc_[i - 1]))
            throw std::invalid_argument("OcvCurve: soc breakpoints not strictly increasing at index " +
                                        std::to_string(i));
        if (i > 0 && !(ocv_[i] > ocv_[i - 1]))
            throw std::invalid_argument("OcvCurve: ocv values not strictly increasing at index " +
                                        std::to_string(i));
    }
}

double OcvCurve::operator()(double soc) const {
    // Segment index; end segments extend beyond [0, 1].
    std::size_t k;
    if (soc <= soc_.front()) {
        k = 0;
    } else if (soc >= soc_.back()) {
        k = soc_.size() - 2;
    } else {
        const auto it = std::upper_bound(soc_.begin(), soc_.end(), soc);
        k = static_cast<std::size_t>(it - soc_.begin()) - 1;
    }
    const double slope = (ocv_[k + 1] - ocv_[k]) / (soc_[k + 1] - soc_[k]);
    return ocv_[k] + slope * (soc - soc_[k]);
}

void EcmParams::validate() const {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || !(v > 0.0))
            throw std::invalid_argument(std::string("EcmParams: ") + name +
                                        " must be finite and > 0");
    };
    check(capacity_q, "capacity_q");
    check(r0, "r0");
    check(r1, "r1");
    check(c1, "c1");
}

StateMatrices state_matrices(const EcmParams& params) {
    StateMatrices m;
    m.a.setZero();
    m.a(1, 1) = -1.0 / (params.r1 * params.c1);
    m.b << -1.0 / params.capacity_q, 1.0 / params.c1;
    return m;
}

double ocv(const OcvCurve& curve, double soc) { return curve(soc); }

double terminal_voltage(const EcmParams& params, const BatteryState& state, double current) {
    return params.ocv(state.soc) - state.vc - current * params.r0;
}

BatteryState step(const EcmParams& params, const BatteryState& state, double current, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const double decay = std::exp(-dt / params.time_constant());
    return {state.soc - current * dt / params.capacity_q,
            state.vc * decay + params.r1 * (1.0 - decay) * current};
}

TimeSeries SimulationResult::soc() const {
    std::vector<double> out(states.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = states[k].soc;
    return voltage.with_samples(std::move(out));
}

TimeSeries SimulationResult::vc() const {
    std::vector<double> out(states.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = states[k].vc;
    return voltage.with_samples(std::move(out));
}

SimulationResult simulate(const EcmParams& params, const BatteryState& x0, const TimeSeries& current) {
    if (!std::isfinite(x0.soc) || !std::isfinite(x0.vc))
        throw std::invalid_argument("simulate: initial state must be finite");
    const std::size_t n = current.size();
    std::vector<BatteryState> states;
    states.reserve(n);
    std::vector<double> voltage(n);
    bool violation = false;

    BatteryState x = x0;
    for (std::size_t k = 0; k < n; ++k) {
        states.push_back(x);
        voltage[k] = terminal_voltage(params, x, current[k]);
        violation = violation || !soc_in_range(x.soc);
        if (k + 1 < n) x = step(params, x, current[k], current.dt());
    }
    return {std::move(states), current.with_samples(std::move(voltage)), violation};
}

}  // namespace cpbs
