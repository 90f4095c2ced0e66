#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "slicematch/distances.hpp"
#include "slicematch/measure.hpp"
#include "slicematch/slicing.hpp"

namespace slicematch {

/// x -> a x + b with scalar a.
struct ScaleShift {
    double a = 1.0;
    Eigen::VectorXd b;

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return a * x + b; }
};

/// x -> P diag(lambda) P^T x + b: an independent scale per frame axis.
struct AxisScaling {
    OrthoMatrix p;
    Eigen::VectorXd lambda;
    Eigen::VectorXd b;

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        return p.matrix() * (lambda.asDiagonal() * (p.matrix().transpose() * x)) + b;
    }
};

enum class DistanceKind { w2, sw2 };

struct SwConfig {
    int num_directions = 256;
    std::uint64_t seed = 0;
};

struct RegistrationReport {
    std::variant<ScaleShift, AxisScaling> map;
    double objective = 0.0;  // squared distance of the registered source to the target
    DistanceKind distance_kind = DistanceKind::w2;
    bool nonpositive_scale = false;  // closed form returned a scale <= 0 (kept, not clamped)
    std::optional<double> scale_std_error;      // sw2 only
    std::optional<double> objective_std_error;  // sw2 only

    [[nodiscard]] const ScaleShift& scale_shift() const { return std::get<ScaleShift>(map); }
    [[nodiscard]] const AxisScaling& axis_scaling() const { return std::get<AxisScaling>(map); }
};

/// Best translation: b = E(eta) - E(sigma), the same for both distances.
RegistrationReport register_translation(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                        DistanceKind kind = DistanceKind::w2,
                                        const SwConfig& sw = {});

/// Closed-form scale and shift:
///   a = (0.5 (M2(eta) + M2(sigma) - D^2) - E(sigma) . E(eta))
///       / (M2(sigma) - ||E(sigma)||^2),   b = E(eta) - a E(sigma),
/// where D^2 is the exact squared distance for kind w2 and n * SW2^2 for
/// kind sw2. The objective is recomputed directly as D^2(S#sigma, eta).
/// Throws degenerate_error when sigma has zero centered second moment.
RegistrationReport register_scale_shift(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                        DistanceKind kind = DistanceKind::w2,
                                        const SwConfig& sw = {});

/// Distance in L^2(sigma) between the scale-shift registrations toward mu
/// and toward the slice-matched target U(sigma, mu, P), both computed
/// directly, next to its closed form
///   (W2^2(sigma, mu) - sum_i W2^2(sigma^{theta_i}, mu^{theta_i}))
///   / (2 sqrt(M2(sigma) - ||E(sigma)||^2)).
struct GapReport {
    double closed_form = 0.0;
    double direct = 0.0;
    ScaleShift to_target;   // registration toward mu
    ScaleShift to_matched;  // registration toward U(sigma, mu, P)
};

GapReport registration_gap(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                           const OrthoMatrix& p);

/// Per-axis least squares fit of S(x) = P diag(lambda) P^T x + b to the
/// exact assignment map from sigma onto eta:
///   lambda_i = cov(theta_i . x, theta_i . T(x)) / var(theta_i . x),
///   b = E(eta) - P diag(lambda) P^T E(sigma).
RegistrationReport register_axis_scaling(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                         const OrthoMatrix& p);

/// Axis-scale gap toward the slice-matched target: lambda~_i - lambda_i
/// computed directly, next to the closed form
///   (int |theta_i . (T(x) - x)|^2 dsigma - W2^2(sigma^{theta_i}, mu^{theta_i}))
///   / (2 var(theta_i . x));
/// each entry is nonnegative.
struct AxisGapReport {
    Eigen::VectorXd lambda_diff;
    Eigen::VectorXd closed_form;
};

AxisGapReport axis_scaling_gap(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                               const OrthoMatrix& p);

/// Mean scale-shift registration toward U(sigma, mu, P) over Haar frames,
/// reported next to the single SW2-based registration toward mu.
struct HaarScaleShiftSummary {
    double mean_a = 0.0;
    double se_a = 0.0;
    Eigen::VectorXd mean_b;
    Eigen::VectorXd se_b;
    double sw_a = 0.0;
    double sw_a_std_error = 0.0;
    Eigen::VectorXd sw_b;
    int num_matrices = 0;
    std::uint64_t seed = 0;
};

HaarScaleShiftSummary haar_mean_scale_shift(const DiscreteMeasure& sigma,
                                            const DiscreteMeasure& mu, int num_matrices,
                                            const SwConfig& sw, std::uint64_t seed);

}  // namespace slicematch
