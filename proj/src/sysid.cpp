#include "cpbs/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cpbs/io.hpp"

namespace cpbs {

namespace {

struct SocPoint {
    double soc;
    double volts;
};

// Coulomb-counted SoC per sample, ZOH-consistent with simulate().
std::vector<double> coulomb_soc(const TimeSeries& current, double soc0, double capacity_q,
                                bool charging, std::string_view label) {
    std::vector<double> soc(current.size());
    double charge = 0.0;
    for (std::size_t k = 0; k < current.size(); ++k) {
        soc[k] = soc0 - charge * current.dt() / capacity_q;
        if (k + 1 < current.size()) {
            const double i = current[k];
            if ((charging && i > 0.0) || (!charging && i < 0.0)) {
                throw std::invalid_argument(std::string(label) +
                                            ": coulomb-counted SoC is not monotone (current " +
                                            format_double(i) + " A at t = " +
                                            format_double(current.time(k)) + " s)");
            }
            charge += i;
        }
    }
    return soc;
}

// Bin samples by SoC and average both coordinates within each bin.
std::vector<SocPoint> bin_by_soc(const std::vector<double>& soc, const TimeSeries& voltage,
                                 std::size_t bins) {
    std::vector<double> soc_sum(bins, 0.0), v_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t k = 0; k < soc.size(); ++k) {
        if (!(soc[k] >= 0.0 && soc[k] <= 1.0)) continue;
        auto b = static_cast<std::size_t>(soc[k] * static_cast<double>(bins));
        b = std::min(b, bins - 1);
        soc_sum[b] += soc[k];
        v_sum[b] += voltage[k];
        ++count[b];
    }
    std::vector<SocPoint> out;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const auto c = static_cast<double>(count[b]);
        out.push_back({soc_sum[b] / c, v_sum[b] / c});
    }
    return out;
}

double interpolate(const std::vector<SocPoint>& pts, double soc) {
    if (soc <= pts.front().soc) return pts.front().volts;
    if (soc >= pts.back().soc) return pts.back().volts;
    const auto it = std::upper_bound(pts.begin(), pts.end(), soc,
                                     [](double s, const SocPoint& p) { return s < p.soc; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (hi.soc == lo.soc) return lo.volts;
    return lo.volts + (soc - lo.soc) / (hi.soc - lo.soc) * (hi.volts - lo.volts);
}

// Pool-adjacent-violators: least-squares non-decreasing fit, equal weights.
std::vector<double> isotonic(const std::vector<double>& y) {
    struct Block {
        double mean;
        std::size_t size;
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
            const Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const auto n = static_cast<double>(prev.size + top.size);
            prev.mean = (prev.mean * static_cast<double>(prev.size) +
                         top.mean * static_cast<double>(top.size)) / n;
            prev.size += top.size;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) out.insert(out.end(), b.size, b.mean);
    return out;
}

// Least-squares line through the grid points within `window` of one edge
// (at least the two outermost), evaluated at soc. Slope is kept >= 0.
double edge_extrapolate(const std::vector<double>& grid, const std::vector<double>& values,
                        double soc, bool low_edge, double window) {
    const std::size_t m = grid.size();
    const double edge = low_edge ? grid.front() : grid.back();
    std::size_t n = 0;
    while (n < m && (n < 2 || std::abs(grid[low_edge ? n : m - 1 - n] - edge) <= window)) ++n;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = low_edge ? i : m - 1 - i;
        sx += grid[j];
        sy += values[j];
        sxx += grid[j] * grid[j];
        sxy += grid[j] * values[j];
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom <= 0.0) return low_edge ? values.front() : values.back();
    const double slope = std::max(0.0, (nn * sxy - sx * sy) / denom);
    const double intercept = (sy - slope * sx) / nn;
    return intercept + slope * soc;
}

}  // namespace

OcvExtraction extract_ocv(const CurrentVoltageLog& charge, const CurrentVoltageLog& discharge,
                          double capacity_q, std::size_t n_breakpoints,
                          std::optional<double> r0_guess) {
    require_same_grid(charge.current, charge.voltage, "extract_ocv (charge sweep)");
    require_same_grid(discharge.current, discharge.voltage, "extract_ocv (discharge sweep)");
    if (!(capacity_q > 0.0)) throw std::invalid_argument("extract_ocv: capacity must be > 0");
    if (n_breakpoints < 2) throw std::invalid_argument("extract_ocv: need at least 2 breakpoints");

    OcvExtraction result{OcvCurve({0.0, 1.0}, {0.0, 1.0}), 0.0, {}};

    if (r0_guess) {
        double i_max = 0.0;
        for (const auto* log : {&charge, &discharge})
            for (double i : log->current.samples()) i_max = std::max(i_max, std::abs(i));
        const double drop = i_max * *r0_guess;
        if (drop > 0.010) {
            result.warnings.push_back("sweep current too large for OCV extraction: max|I| * r0 = " +
                                      format_double(drop * 1e3) + " mV > 10 mV");
        }
    }

    const auto soc_c = coulomb_soc(charge.current, 0.0, capacity_q, true, "charge sweep");
    const auto soc_d = coulomb_soc(discharge.current, 1.0, capacity_q, false, "discharge sweep");

    auto bins_for = [](std::size_t samples) {
        return std::clamp<std::size_t>(samples / 8, 10, 1000);
    };
    const auto pts_c = bin_by_soc(soc_c, charge.voltage, bins_for(soc_c.size()));
    const auto pts_d = bin_by_soc(soc_d, discharge.voltage, bins_for(soc_d.size()));
    if (pts_c.size() < 2 || pts_d.size() < 2)
        throw std::invalid_argument("extract_ocv: sweeps cover too little of [0, 1]");

    const double lo = std::max(pts_c.front().soc, pts_d.front().soc);
    const double hi = std::min(pts_c.back().soc, pts_d.back().soc);
    result.soc_span = hi - lo;
    if (!(result.soc_span >= 0.9)) {
        throw std::invalid_argument("extract_ocv: insufficient SoC span " +
                                    format_double(std::max(0.0, result.soc_span)) +
                                    " covered by both sweeps (need >= 0.9)");
    }

    const std::size_t m = std::max(pts_c.size(), pts_d.size());
    std::vector<double> grid(m), avg(m);
    for (std::size_t j = 0; j < m; ++j) {
        grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
        avg[j] = 0.5 * (interpolate(pts_c, grid[j]) + interpolate(pts_d, grid[j]));
    }
    const std::vector<double> mono = isotonic(avg);
    const std::vector<SocPoint> fine = [&] {
        std::vector<SocPoint> p(m);
        for (std::size_t j = 0; j < m; ++j) p[j] = {grid[j], mono[j]};
        return p;
    }();

    constexpr double edge_window = 0.02;
    constexpr double min_step = 1e-6;  // [V], keeps the curve strictly increasing
    std::vector<double> soc_bp(n_breakpoints), volts(n_breakpoints);
    for (std::size_t i = 0; i < n_breakpoints; ++i) {
        const double s = i + 1 == n_breakpoints
                             ? 1.0
                             : static_cast<double>(i) / static_cast<double>(n_breakpoints - 1);
        soc_bp[i] = s;
        if (s < lo) {
            volts[i] = edge_extrapolate(grid, mono, s, true, edge_window);
        } else if (s > hi) {
            volts[i] = edge_extrapolate(grid, mono, s, false, edge_window);
        } else {
            volts[i] = interpolate(fine, s);
        }
        if (i > 0) volts[i] = std::max(volts[i], volts[i - 1] + min_step);
    }
    result.curve = OcvCurve(std::move(soc_bp), std::move(volts));
    return result;
}

FitParam parse_fit_param(std::string_view name) {
    if (name == "r0" || name == "r0_ohm") return FitParam::r0;
    if (name == "r1" || name == "r1_ohm") return FitParam::r1;
    if (name == "c1" || name == "c1_farad") return FitParam::c1;
    if (name == "capacity_q" || name == "capacity_As") return FitParam::capacity_q;
    throw std::invalid_argument("unknown fit parameter '" + std::string(name) +
                                "' (expected r0, r1, c1 or capacity_q)");
}

std::string_view to_string(FitParam p) {
    switch (p) {
        case FitParam::r0: return "r0";
        case FitParam::r1: return "r1";
        case FitParam::c1: return "c1";
        case FitParam::capacity_q: return "capacity_q";
    }
    return "unknown";
}

double voltage_rmse(const EcmParams& params, const CurrentVoltageLog& data, const BatteryState& x0) {
    require_same_grid(data.current, data.voltage, "voltage_rmse");
    const TimeSeries sim = simulate(params, x0, data.current).voltage;
    double sum = 0.0;
    for (std::size_t k = 0; k < sim.size(); ++k) {
        const double d = sim[k] - data.voltage[k];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(sim.size()));
}

namespace {

template <typename Params>
auto& field(Params& p, FitParam which) {
    switch (which) {
        case FitParam::r0: return p.r0;
        case FitParam::r1: return p.r1;
        case FitParam::c1: return p.c1;
        case FitParam::capacity_q: return p.capacity_q;
    }
    return p.r0;
}

using Point = std::vector<double>;

struct Vertex {
    Point x;
    double f;
};

}  // namespace

FitReport fit_rc(const EcmParams& initial, const CurrentVoltageLog& data, const BatteryState& x0,
                 const std::set<FitParam>& frozen, const FitOptions& options) {
    initial.validate();
    require_same_grid(data.current, data.voltage, "fit_rc");

    std::vector<FitParam> free;
    for (FitParam p : {FitParam::r0, FitParam::r1, FitParam::c1, FitParam::capacity_q})
        if (!frozen.contains(p)) free.push_back(p);

    auto params_at = [&](const Point& x) {
        EcmParams p = initial;
        for (std::size_t i = 0; i < free.size(); ++i) field(p, free[i]) = std::exp(x[i]);
        return p;
    };
    auto objective = [&](const Point& x) {
        const EcmParams p = params_at(x);
        try {
            p.validate();
            const double f = voltage_rmse(p, data, x0);
            return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
        } catch (const std::invalid_argument&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Point start(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) start[i] = std::log(field(initial, free[i]));

    FitReport report{initial, objective(start), 0, false, {}};
    constexpr double already_exact = 1e-12;  // [V]
    if (free.empty() || report.rmse <= already_exact) {
        report.converged = true;
        return report;
    }

    const std::size_t dim = free.size();
    Vertex best{start, report.rmse};

    auto converged = [&](const std::vector<Vertex>& simplex) {
        const double lo = simplex.front().f;
        const double hi = simplex.back().f;
        return std::isfinite(hi) && hi - lo <= options.relative_tolerance * lo + 1e-15;
    };

    // Nelder-Mead with a fresh simplex around the incumbent after each convergence;
    // stop once a restart no longer improves the incumbent by the tolerance.
    constexpr double initial_step = 0.2;  // log units, about 22 %
    while (report.iterations < options.max_iterations) {
        std::vector<Vertex> simplex{best};
        for (std::size_t i = 0; i < dim; ++i) {
            Point x = best.x;
            x[i] += initial_step;
            simplex.push_back({x, objective(x)});
        }
        const double restart_from = best.f;
        bool local_converged = false;

        while (report.iterations < options.max_iterations) {
            std::sort(simplex.begin(), simplex.end(),
                      [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
            if (converged(simplex)) {
                local_converged = true;
                break;
            }
            ++report.iterations;

            Point centroid(dim, 0.0);
            for (std::size_t v = 0; v < dim; ++v)
                for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(dim);
            auto along = [&](double t) {
                Point p(dim);
                for (std::size_t i = 0; i < dim; ++i)
                    p[i] = centroid[i] + t * (simplex.back().x[i] - centroid[i]);
                return p;
            };

            Vertex& worst = simplex.back();
            const Point xr = along(-1.0);
            const double fr = objective(xr);
            if (fr < simplex.front().f) {
                const Point xe = along(-2.0);
                const double fe = objective(xe);
                worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            } else if (fr < simplex[dim - 1].f) {
                worst = {xr, fr};
            } else {
                const bool outside = fr < worst.f;
                const Point xc = along(outside ? -0.5 : 0.5);
                const double fc = objective(xc);
                if (fc < (outside ? fr : worst.f)) {
                    worst = {xc, fc};
                } else {
                    for (std::size_t v = 1; v <= dim; ++v) {
                        for (std::size_t i = 0; i < dim; ++i)
                            simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
                        simplex[v].f = objective(simplex[v].x);
                    }
                }
            }

            for (const auto& v : simplex)
                if (v.f < best.f) best = v;
            report.best_rmse_history.push_back(best.f);
            if (best.f <= already_exact) break;
        }

        const bool stalled = restart_from - best.f <= options.relative_tolerance * best.f;
        if (best.f <= already_exact || (local_converged && stalled)) {
            report.converged = true;
            break;
        }
        if (!local_converged) break;
    }

    report.fitted = params_at(best.x);
    report.rmse = best.f;
    return report;
}

}  // namespace cpbs
