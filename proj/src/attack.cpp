#include "cpbs/attack.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cpbs/errors.hpp"
#include "cpbs/io.hpp"

namespace cpbs {

namespace {

void check_weight_matrix(const Eigen::Matrix2d& m, const char* name) {
    if (!m.allFinite()) throw std::invalid_argument(std::string("AttackWeights: ") + name + " not finite");
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-12)
        throw std::invalid_argument(std::string("AttackWeights: ") + name + " not symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument(std::string("AttackWeights: ") + name +
                                    " not positive semidefinite");
}

}  // namespace

void AttackWeights::validate() const {
    check_weight_matrix(q1, "q1");
    check_weight_matrix(q2, "q2");
    if (!std::isfinite(r) || !(r > 0.0)) throw std::invalid_argument("AttackWeights: r must be > 0");
}

AttackWeights AttackWeights::diagonal(Eigen::Vector2d q1_diag, Eigen::Vector2d q2_diag, double r) {
    AttackWeights w;
    w.q1 = q1_diag.asDiagonal();
    w.q2 = q2_diag.asDiagonal();
    w.r = r;
    return w;
}

AttackWeights AttackWeights::scenario_default() {
    return diagonal({1e7, 0.0}, {1e3, 0.0}, 1.0);
}

ReferenceShape parse_reference_shape(std::string_view name) {
    if (name == "linear_ramp") return ReferenceShape::linear_ramp;
    if (name == "hold_target") return ReferenceShape::hold_target;
    throw std::invalid_argument("unknown reference shape '" + std::string(name) +
                                "' (expected linear_ramp or hold_target)");
}

void ReferenceTrajectory::validate() const {
    if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0))
        throw std::invalid_argument("ReferenceTrajectory: need finite tf > t0");
    if (!(soc_start >= 0.0 && soc_start <= 1.0) || !(soc_target >= 0.0 && soc_target <= 1.0))
        throw std::invalid_argument("ReferenceTrajectory: soc values must lie in [0, 1]");
}

Eigen::Vector2d ReferenceTrajectory::at(double t) const {
    if (shape == ReferenceShape::hold_target) return {soc_target, 0.0};
    const double frac = std::clamp((t - t0) / (tf - t0), 0.0, 1.0);
    if (frac == 1.0) return {soc_target, 0.0};
    return {soc_start + frac * (soc_target - soc_start), 0.0};
}

std::vector<Eigen::Vector2d> build_reference(const ReferenceTrajectory& ref,
                                             std::span<const double> times) {
    ref.validate();
    std::vector<Eigen::Vector2d> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(ref.at(t));
    return out;
}

RiccatiSolution::RiccatiSolution(double t0, double dt, std::vector<Eigen::Matrix2d> s,
                                 std::vector<Eigen::Vector2d> v)
    : t0_(t0), dt_(dt), s_(std::move(s)), v_(std::move(v)) {
    if (s_.empty() || s_.size() != v_.size())
        throw std::invalid_argument("RiccatiSolution: S and V must be nonempty and equal length");
    if (!(dt_ > 0.0)) throw std::invalid_argument("RiccatiSolution: dt must be > 0");
}

RiccatiSolution::Bracket RiccatiSolution::bracket(double t) const {
    const double pos = (t - t0_) / dt_;
    const double last = static_cast<double>(size() - 1);
    if (!(pos >= -1e-9 && pos <= last + 1e-9)) {
        throw std::out_of_range("RiccatiSolution: t = " + format_double(t) + " outside [" +
                                format_double(t0_) + ", " + format_double(tf()) + "]");
    }
    if (size() == 1) return {0, 0.0};
    const double clamped = std::clamp(pos, 0.0, last);
    auto k = static_cast<std::size_t>(std::floor(clamped));
    if (k >= size() - 1) k = size() - 2;
    return {k, clamped - static_cast<double>(k)};
}

Eigen::Matrix2d RiccatiSolution::s_at(double t) const {
    const auto [k, frac] = bracket(t);
    if (frac == 0.0) return s_[k];
    return s_[k] + frac * (s_[k + 1] - s_[k]);
}

Eigen::Vector2d RiccatiSolution::v_at(double t) const {
    const auto [k, frac] = bracket(t);
    if (frac == 0.0) return v_[k];
    return v_[k] + frac * (v_[k + 1] - v_[k]);
}

void RiccatiSolution::write_csv(const std::filesystem::path& path) const {
    std::vector<std::vector<double>> cols(6, std::vector<double>(size()));
    for (std::size_t k = 0; k < size(); ++k) {
        cols[0][k] = time(k);
        cols[1][k] = s_[k](0, 0);
        cols[2][k] = s_[k](0, 1);
        cols[3][k] = s_[k](1, 1);
        cols[4][k] = v_[k](0);
        cols[5][k] = v_[k](1);
    }
    write_table_csv(path, {"t", "s11", "s12", "s22", "v1", "v2"}, cols);
}

RiccatiSolution solve_riccati(const EcmParams& params, const AttackWeights& weights,
                              const ReferenceTrajectory& ref, const TimeSeries& u_nom) {
    params.validate();
    weights.validate();
    ref.validate();
    const double slack = 1e-9 * std::max(1.0, std::abs(ref.tf - ref.t0));
    if (u_nom.t0() < ref.t0 - slack || u_nom.end_time() > ref.tf + slack) {
        throw std::invalid_argument("solve_riccati: grid [" + format_double(u_nom.t0()) + ", " +
                                    format_double(u_nom.end_time()) +
                                    "] not within reference window [" + format_double(ref.t0) +
                                    ", " + format_double(ref.tf) + "]");
    }

    const auto [a, b] = state_matrices(params);
    const Eigen::Matrix2d at = a.transpose();
    const Eigen::Matrix2d bbr = b * b.transpose() / weights.r;
    const Eigen::Matrix2d& q2 = weights.q2;

    auto s_rate = [&](const Eigen::Matrix2d& s) -> Eigen::Matrix2d {
        return -(s * a + at * s - s * bbr * s + q2);
    };
    auto v_rate = [&](const Eigen::Matrix2d& s, const Eigen::Vector2d& v, double u,
                      const Eigen::Vector2d& xr) -> Eigen::Vector2d {
        return -(at * v - s * bbr * v - s * b * u + q2 * xr);
    };

    const std::size_t n = u_nom.size();
    const double dt = u_nom.dt();
    std::vector<Eigen::Matrix2d> s(n);
    std::vector<Eigen::Vector2d> v(n);
    s[n - 1] = weights.q1;
    v[n - 1] = weights.q1 * ref.at(u_nom.end_time());

    const double h = -dt;
    for (std::size_t k = n - 1; k > 0; --k) {
        const double t = u_nom.time(k);
        const double t_mid = t + 0.5 * h;
        const double u_hi = u_nom[k];
        const double u_mid = 0.5 * (u_nom[k] + u_nom[k - 1]);
        const double u_lo = u_nom[k - 1];
        const Eigen::Vector2d xr_hi = ref.at(t);
        const Eigen::Vector2d xr_mid = ref.at(t_mid);
        const Eigen::Vector2d xr_lo = ref.at(u_nom.time(k - 1));

        const Eigen::Matrix2d& s0 = s[k];
        const Eigen::Vector2d& v0 = v[k];
        const Eigen::Matrix2d k1 = s_rate(s0);
        const Eigen::Vector2d l1 = v_rate(s0, v0, u_hi, xr_hi);
        const Eigen::Matrix2d s2 = s0 + 0.5 * h * k1;
        const Eigen::Vector2d v2 = v0 + 0.5 * h * l1;
        const Eigen::Matrix2d k2 = s_rate(s2);
        const Eigen::Vector2d l2 = v_rate(s2, v2, u_mid, xr_mid);
        const Eigen::Matrix2d s3 = s0 + 0.5 * h * k2;
        const Eigen::Vector2d v3 = v0 + 0.5 * h * l2;
        const Eigen::Matrix2d k3 = s_rate(s3);
        const Eigen::Vector2d l3 = v_rate(s3, v3, u_mid, xr_mid);
        const Eigen::Matrix2d s4 = s0 + h * k3;
        const Eigen::Vector2d v4 = v0 + h * l3;
        const Eigen::Matrix2d k4 = s_rate(s4);
        const Eigen::Vector2d l4 = v_rate(s4, v4, u_lo, xr_lo);

        Eigen::Matrix2d s_next = s0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // S is symmetric in exact arithmetic; drop the rounding asymmetry.
        const double off = 0.5 * (s_next(0, 1) + s_next(1, 0));
        s_next(0, 1) = off;
        s_next(1, 0) = off;
        const Eigen::Vector2d v_next = v0 + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);

        if (!s_next.allFinite() || !v_next.allFinite()) {
            throw NumericalError("solve_riccati: non-finite S/V at t = " +
                                 format_double(u_nom.time(k - 1)));
        }
        s[k - 1] = s_next;
        v[k - 1] = v_next;
    }
    return {u_nom.t0(), dt, std::move(s), std::move(v)};
}

namespace {

double feedback(const Eigen::Matrix2d& s, const Eigen::Vector2d& v, const Eigen::Vector2d& b,
                double r, const Eigen::Vector2d& x) {
    const double u = -b.dot(s * x - v) / r;
    return u == 0.0 ? 0.0 : u;  // no negative zeros in outputs
}

}  // namespace

double attack_current(const RiccatiSolution& riccati, const Eigen::Vector2d& b, double r,
                      const BatteryState& x, double t) {
    return feedback(riccati.s_at(t), riccati.v_at(t), b, r, x.vector());
}

double InputAttack::attack_energy() const {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < u_a.size(); ++k) sum += u_a[k] * u_a[k];
    return sum * u_a.dt();
}

InputAttack synthesize_input_attack(const EcmParams& params, const AttackWeights& weights,
                                    const ReferenceTrajectory& ref, const TimeSeries& u_nom,
                                    const BatteryState& x0) {
    if (!std::isfinite(x0.soc) || !std::isfinite(x0.vc))
        throw std::invalid_argument("synthesize_input_attack: initial state must be finite");
    RiccatiSolution riccati = solve_riccati(params, weights, ref, u_nom);
    const Eigen::Vector2d b = state_matrices(params).b;

    const std::size_t n = u_nom.size();
    std::vector<double> u_a(n);
    std::vector<BatteryState> states;
    states.reserve(n);
    bool violation = false;

    BatteryState x = x0;
    for (std::size_t k = 0; k < n; ++k) {
        states.push_back(x);
        violation = violation || !soc_in_range(x.soc);
        u_a[k] = feedback(riccati.s(k), riccati.v(k), b, weights.r, x.vector());
        if (!std::isfinite(u_a[k]))
            throw NumericalError("synthesize_input_attack: non-finite attack current at t = " +
                                 format_double(u_nom.time(k)));
        if (k + 1 < n) x = step(params, x, u_nom[k] + u_a[k], u_nom.dt());
    }
    return {u_nom.with_samples(std::move(u_a)), std::move(states), std::move(riccati), violation};
}

}  // namespace cpbs
