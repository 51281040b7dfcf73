#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <vector>

#include "cpbs/ecm.hpp"
#include "cpbs/time_series.hpp"

namespace cpbs {

/// Weights of the adversary's quadratic cost
///   1/2 e(tf)' Q1 e(tf) + 1/2 int e' Q2 e dt + 1/2 int r u_a^2 dt,  e = x - x_ref.
struct AttackWeights {
    Eigen::Matrix2d q1 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d q2 = Eigen::Matrix2d::Zero();
    double r = 1.0;

    /// Symmetric to 1e-12, eigenvalues >= -1e-12, r > 0; throws std::invalid_argument.
    void validate() const;

    [[nodiscard]] static AttackWeights diagonal(Eigen::Vector2d q1_diag, Eigen::Vector2d q2_diag,
                                                double r);

    /// SoC-only tracking weights used by the shipped scenarios.
    [[nodiscard]] static AttackWeights scenario_default();
};

enum class ReferenceShape { linear_ramp, hold_target };

[[nodiscard]] ReferenceShape parse_reference_shape(std::string_view name);

/// Adversary's target trajectory; the vc component is always 0.
struct ReferenceTrajectory {
    double soc_start = 0.0;
    double soc_target = 0.0;
    double t0 = 0.0;
    double tf = 0.0;
    ReferenceShape shape = ReferenceShape::linear_ramp;

    void validate() const;
    [[nodiscard]] Eigen::Vector2d at(double t) const;
};

[[nodiscard]] std::vector<Eigen::Vector2d> build_reference(const ReferenceTrajectory& ref,
                                                           std::span<const double> times);

/// S(t) and V(t) on the attack grid; costate lambda = S x - V.
class RiccatiSolution {
public:
    RiccatiSolution(double t0, double dt, std::vector<Eigen::Matrix2d> s,
                    std::vector<Eigen::Vector2d> v);

    [[nodiscard]] std::size_t size() const { return s_.size(); }
    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
    [[nodiscard]] double tf() const { return time(size() - 1); }

    [[nodiscard]] const Eigen::Matrix2d& s(std::size_t k) const { return s_[k]; }
    [[nodiscard]] const Eigen::Vector2d& v(std::size_t k) const { return v_[k]; }

    /// Linear interpolation between grid points; throws std::out_of_range outside the grid.
    [[nodiscard]] Eigen::Matrix2d s_at(double t) const;
    [[nodiscard]] Eigen::Vector2d v_at(double t) const;

    /// Columns t, s11, s12, s22, v1, v2.
    void write_csv(const std::filesystem::path& path) const;

private:
    struct Bracket {
        std::size_t k;
        double frac;
    };
    [[nodiscard]] Bracket bracket(double t) const;

    double t0_;
    double dt_;
    std::vector<Eigen::Matrix2d> s_;
    std::vector<Eigen::Vector2d> v_;
};

/**
 * Backward sweep of
 *   S' = -(S A + A' S - S B r^-1 B' S + Q2),            S(tf) = Q1
 *   V' = -(A' V - S B r^-1 B' V - S B u_nom + Q2 x_ref), V(tf) = Q1 x_ref(tf)
 * with classic RK4 on the u_nom grid. u_nom and x_ref are linearly
 * interpolated at the half steps. Throws NumericalError on blow-up.
 */
[[nodiscard]] RiccatiSolution solve_riccati(const EcmParams& params, const AttackWeights& weights,
                                            const ReferenceTrajectory& ref, const TimeSeries& u_nom);

/// u_a = -(1/r) b' (S(t) x - V(t)).
[[nodiscard]] double attack_current(const RiccatiSolution& riccati, const Eigen::Vector2d& b,
                                    double r, const BatteryState& x, double t);

struct InputAttack {
    TimeSeries u_a;
    std::vector<BatteryState> states;  ///< adversary-model trajectory under u_nom + u_a
    RiccatiSolution riccati;
    bool soc_violation = false;

    [[nodiscard]] double attack_energy() const;  ///< sum u_a^2 dt over applied samples
};

/**
 * Closed-loop realization along the adversary's own model: at every sample
 * u_a[k] is evaluated from the model state x_k and the model advances under
 * u_nom[k] + u_a[k].
 */
[[nodiscard]] InputAttack synthesize_input_attack(const EcmParams& params,
                                                  const AttackWeights& weights,
                                                  const ReferenceTrajectory& ref,
                                                  const TimeSeries& u_nom, const BatteryState& x0);

}  // namespace cpbs
