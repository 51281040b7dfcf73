#include "cpbs/time_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cpbs/errors.hpp"
#include "cpbs/io.hpp"

namespace cpbs {

TimeSeries::TimeSeries(double t0, double dt, std::vector<double> samples)
    : t0_(t0), dt_(dt), samples_(std::move(samples)) {
    if (!std::isfinite(t0_)) throw std::invalid_argument("TimeSeries: t0 must be finite");
    if (!(dt_ > 0.0) || !std::isfinite(dt_))
        throw std::invalid_argument("TimeSeries: dt must be finite and > 0");
    if (samples_.empty()) throw std::invalid_argument("TimeSeries: no samples");
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        if (!std::isfinite(samples_[k]))
            throw std::invalid_argument("TimeSeries: non-finite sample at index " +
                                        std::to_string(k));
    }
}

double TimeSeries::value_at(double t) const {
    const double pos = (t - t0_) / dt_;
    const double last = static_cast<double>(samples_.size() - 1);
    // Allow a little rounding slack at both ends.
    if (pos < -1e-9 || pos > last + 1e-9) {
        throw std::out_of_range("TimeSeries::value_at: t = " + format_double(t) +
                                " outside [" + format_double(t0_) + ", " +
                                format_double(end_time()) + "]");
    }
    if (samples_.size() == 1) return samples_[0];
    const double clamped = std::clamp(pos, 0.0, last);
    auto k = static_cast<std::size_t>(std::floor(clamped));
    if (k >= samples_.size() - 1) k = samples_.size() - 2;
    const double frac = clamped - static_cast<double>(k);
    if (frac == 0.0) return samples_[k];
    return samples_[k] + frac * (samples_[k + 1] - samples_[k]);
}

TimeSeries TimeSeries::with_samples(std::vector<double> samples) const {
    if (samples.size() != samples_.size())
        throw std::invalid_argument("TimeSeries::with_samples: length mismatch");
    return {t0_, dt_, std::move(samples)};
}

TimeSeries TimeSeries::zeros_like(const TimeSeries& grid) {
    return {grid.t0(), grid.dt(), std::vector<double>(grid.size(), 0.0)};
}

bool same_grid(const TimeSeries& a, const TimeSeries& b) {
    return a.t0() == b.t0() && a.dt() == b.dt() && a.size() == b.size();
}

namespace {

std::string describe_grid(const TimeSeries& s) {
    return "{t0=" + format_double(s.t0()) + ", dt=" + format_double(s.dt()) +
           ", n=" + std::to_string(s.size()) + "}";
}

}  // namespace

void require_same_grid(const TimeSeries& a, const TimeSeries& b, std::string_view what) {
    if (!same_grid(a, b)) {
        throw std::invalid_argument(std::string(what) + ": grid mismatch " + describe_grid(a) +
                                    " vs " + describe_grid(b));
    }
}

TimeSeries add(const TimeSeries& a, const TimeSeries& b) {
    require_same_grid(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] + b[k];
    return a.with_samples(std::move(out));
}

TimeSeries subtract(const TimeSeries& a, const TimeSeries& b) {
    require_same_grid(a, b, "subtract");
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] - b[k];
    return a.with_samples(std::move(out));
}

namespace {

double parse_cell(std::string_view cell, std::size_t row, const std::filesystem::path& path) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.remove_suffix(1);
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ConfigError(path.string() + ": row " + std::to_string(row) +
                          ": non-numeric cell '" + std::string(cell) + "'");
    }
    return value;
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, double target_dt) {
    if (!(target_dt > 0.0)) throw std::invalid_argument("load_csv: target_dt must be > 0");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file " + path.string());

    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ConfigError(path.string() + ": row " + std::to_string(row) +
                              ": expected two columns time_s,value");
        }
        const std::string_view view(line);
        const double t = parse_cell(view.substr(0, comma), row, path);
        const double v = parse_cell(view.substr(comma + 1), row, path);
        if (!times.empty() && !(t > times.back())) {
            throw ConfigError(path.string() + ": row " + std::to_string(row) +
                              ": time not strictly increasing");
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) {
        throw ConfigError(path.string() + ": need at least 2 data rows, found " +
                          std::to_string(times.size()));
    }

    const double t_first = times.front();
    const double span = times.back() - t_first;
    const auto n = static_cast<std::size_t>(std::floor(span / target_dt + 1e-9)) + 1;
    std::vector<double> out(n);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t_first + static_cast<double>(k) * target_dt;
        while (j + 2 < times.size() && times[j + 1] <= t) ++j;
        const double t_lo = times[j];
        const double t_hi = times[j + 1];
        double frac = (t - t_lo) / (t_hi - t_lo);
        frac = std::clamp(frac, 0.0, 1.0);
        out[k] = frac == 0.0 ? values[j] : values[j] + frac * (values[j + 1] - values[j]);
    }
    return {t_first, target_dt, std::move(out)};
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series) {
    std::vector<double> t(series.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = series.time(k);
    const std::vector<double> v(series.samples().begin(), series.samples().end());
    write_table_csv(path, {"time_s", "value"}, {t, v});
}

ProfileKind parse_profile_kind(std::string_view name) {
    if (name == "constant") return ProfileKind::constant;
    if (name == "sin_mix") return ProfileKind::sin_mix;
    if (name == "pulse_train") return ProfileKind::pulse_train;
    throw ConfigError("unknown profile kind '" + std::string(name) +
                      "' (expected constant, sin_mix or pulse_train)");
}

std::string_view to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::constant: return "constant";
        case ProfileKind::sin_mix: return "sin_mix";
        case ProfileKind::pulse_train: return "pulse_train";
    }
    return "unknown";
}

namespace {

// 53-bit uniform in [0, 1) from the raw engine output; portable across
// standard libraries, unlike uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

TimeSeries synthetic_profile(ProfileKind kind, double amplitude, double bias, double duration,
                             double dt, std::uint64_t seed) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("synthetic_profile: dt must be > 0");
    if (!(duration > dt) || !std::isfinite(duration))
        throw std::invalid_argument("synthetic_profile: duration must exceed dt");
    if (!std::isfinite(amplitude) || !std::isfinite(bias))
        throw std::invalid_argument("synthetic_profile: amplitude and bias must be finite");

    const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
    std::vector<double> out(n, bias);
    std::mt19937_64 rng(seed);

    switch (kind) {
        case ProfileKind::constant:
            break;
        case ProfileKind::sin_mix: {
            constexpr double periods[3] = {300.0, 120.0, 45.0};
            constexpr double weights[3] = {0.5, 0.3, 0.2};
            double phase[3];
            for (double& p : phase) p = kTwoPi * unit_uniform(rng);
            for (std::size_t k = 0; k < n; ++k) {
                const double t = static_cast<double>(k) * dt;
                double mix = 0.0;
                for (int i = 0; i < 3; ++i) mix += weights[i] * std::sin(kTwoPi * t / periods[i] + phase[i]);
                out[k] += amplitude * mix;
            }
            break;
        }
        case ProfileKind::pulse_train: {
            constexpr double period = 60.0;
            std::vector<double> heights;
            for (std::size_t k = 0; k < n; ++k) {
                const double t = static_cast<double>(k) * dt;
                const auto cycle = static_cast<std::size_t>(std::floor(t / period + 1e-12));
                while (heights.size() <= cycle) heights.push_back(0.5 + unit_uniform(rng));
                const double phase = t - static_cast<double>(cycle) * period;
                const double sign = phase < 0.5 * period - 1e-9 ? 1.0 : -1.0;
                out[k] += amplitude * heights[cycle] * sign;
            }
            break;
        }
    }
    return {0.0, dt, std::move(out)};
}

}  // namespace cpbs
