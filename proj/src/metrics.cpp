#include "cpbs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace cpbs {

double rms(const TimeSeries& a, const TimeSeries& b) {
    require_same_grid(a, b, "rms");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double max_abs_diff(const TimeSeries& a, const TimeSeries& b) {
    require_same_grid(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

bool exceeds_current_limit(const TimeSeries& total_current, double i_max) {
    if (!(i_max > 0.0)) throw std::invalid_argument("i_max must be > 0");
    return std::any_of(total_current.samples().begin(), total_current.samples().end(),
                       [i_max](double i) { return std::abs(i) > i_max; });
}

ScenarioSummary summarize(const TimeSeries& u_nom, const InputAttack& attack,
                          const StealthResult& stealth, std::optional<double> i_max) {
    ScenarioSummary s;
    s.final_soc_nominal = stealth.nominal_states.back().soc;
    s.final_soc_attacked = stealth.plant_states.back().soc;
    s.residual_rms = stealth.residual_rms;
    s.residual_max = stealth.residual_max;
    s.attack_energy = attack.attack_energy();
    if (i_max) s.i_max_violated = exceeds_current_limit(add(u_nom, attack.u_a), *i_max);
    return s;
}

KaSweep sweep_ka(const MaskingScenario& scenario, std::span<const double> ka_values, bool parallel) {
    if (ka_values.empty()) throw std::invalid_argument("sweep_ka: no k_a values");
    std::vector<double> gains(ka_values.begin(), ka_values.end());
    std::sort(gains.begin(), gains.end());

    auto evaluate = [&scenario](double k_a) {
        return feedback_output_attack(scenario.adversary, scenario.plant, scenario.x0,
                                      scenario.u_nom, scenario.u_a, k_a)
            .residual_rms;
    };

    KaSweep sweep;
    sweep.rows.resize(gains.size());
    if (parallel && gains.size() > 1) {
        std::vector<std::future<double>> jobs;
        jobs.reserve(gains.size());
        for (double k_a : gains) jobs.push_back(std::async(std::launch::async, evaluate, k_a));
        for (std::size_t i = 0; i < gains.size(); ++i) sweep.rows[i] = {gains[i], jobs[i].get()};
    } else {
        for (std::size_t i = 0; i < gains.size(); ++i) sweep.rows[i] = {gains[i], evaluate(gains[i])};
    }

    for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
        const auto& cand = sweep.rows[i];
        const auto& best = sweep.rows[sweep.argmin];
        if (cand.residual_rms < best.residual_rms ||
            (cand.residual_rms == best.residual_rms && std::abs(cand.k_a) < std::abs(best.k_a))) {
            sweep.argmin = i;
        }
    }
    return sweep;
}

}  // namespace cpbs
