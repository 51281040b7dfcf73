#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpbs {

/// Uniformly sampled scalar signal: sample k sits at t0 + k * dt.
class TimeSeries {
public:
    TimeSeries(double t0, double dt, std::vector<double> samples);

    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }
    [[nodiscard]] double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
    [[nodiscard]] double end_time() const { return time(samples_.size() - 1); }

    [[nodiscard]] double operator[](std::size_t k) const { return samples_[k]; }
    [[nodiscard]] std::span<const double> samples() const { return samples_; }
    [[nodiscard]] double back() const { return samples_.back(); }

    /// Linear interpolation; t must lie in [t0, end_time()] up to rounding.
    [[nodiscard]] double value_at(double t) const;

    /// Same grid, new samples.
    [[nodiscard]] TimeSeries with_samples(std::vector<double> samples) const;

    [[nodiscard]] static TimeSeries zeros_like(const TimeSeries& grid);

    bool operator==(const TimeSeries&) const = default;

private:
    double t0_;
    double dt_;
    std::vector<double> samples_;
};

[[nodiscard]] bool same_grid(const TimeSeries& a, const TimeSeries& b);

/// Throws std::invalid_argument naming both grids when they differ.
void require_same_grid(const TimeSeries& a, const TimeSeries& b, std::string_view what);

[[nodiscard]] TimeSeries add(const TimeSeries& a, const TimeSeries& b);
[[nodiscard]] TimeSeries subtract(const TimeSeries& a, const TimeSeries& b);

/// Reads a `time_s,value` CSV and resamples it onto a uniform grid starting at
/// the first timestamp. Errors name the offending row (1-based, header = row 1).
[[nodiscard]] TimeSeries load_csv(const std::filesystem::path& path, double target_dt);

void write_csv(const std::filesystem::path& path, const TimeSeries& series);

enum class ProfileKind { constant, sin_mix, pulse_train };

[[nodiscard]] ProfileKind parse_profile_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(ProfileKind kind);

/**
 * Deterministic drive-cycle stand-ins.
 *
 *  - constant:    bias everywhere.
 *  - sin_mix:     bias + amplitude * (0.5 sin(2 pi t / 300 + p1)
 *                 + 0.3 sin(2 pi t / 120 + p2) + 0.2 sin(2 pi t / 45 + p3)),
 *                 phases drawn from the seed.
 *  - pulse_train: bias + amplitude * h_j * (+1 for the first half of each 60 s
 *                 period, -1 for the second), h_j in [0.5, 1.5] drawn per period.
 *
 * Both dynamic kinds have zero mean over any whole number of their periods, so
 * the bias alone sets the net charge moved over a 1800 s multiple.
 */
[[nodiscard]] TimeSeries synthetic_profile(ProfileKind kind, double amplitude, double bias,
                                           double duration, double dt, std::uint64_t seed);

}  // namespace cpbs
