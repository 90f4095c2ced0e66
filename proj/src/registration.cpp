#include "slicematch/registration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicematch/errors.hpp"
#include "slicematch/ot1d.hpp"
#include "slicematch/rng.hpp"
#include "slicematch/slicematch.hpp"

namespace slicematch {

namespace {

double centered_variance(const Moments& mo, const char* who) {
    const double var = mo.second_moment - mo.mean.squaredNorm();
    if (!(var > 1e-14 * std::max(1.0, mo.second_moment))) {
        throw degenerate_error(std::string(who) +
                               ": source has (near) zero centered second moment");
    }
    return var;
}

// Single-pass sample variance shifted by the first sample. The shift keeps
// near-constant streams from losing their tiny spread to cancellation.
class VarianceAccumulator {
  public:
    void add(double x) {
        if (count_ == 0) anchor_ = x;
        ++count_;
        const double d = x - anchor_;
        dsum_ += d;
        dsumsq_ += d * d;
    }

    double sample_variance() const {
        if (count_ < 2) return 0.0;
        const double n = static_cast<double>(count_);
        return std::max(0.0, (dsumsq_ - dsum_ * dsum_ / n) / (n - 1.0));
    }

  private:
    long count_ = 0;
    double anchor_ = 0.0;
    double dsum_ = 0.0;
    double dsumsq_ = 0.0;
};

// D^2(S#sigma, eta) for the requested distance; sw2 draws use child stream 1
// of the config seed so they stay independent from the fitting estimate.
void recompute_objective(RegistrationReport& report, const DiscreteMeasure& sigma,
                         const DiscreteMeasure& eta, const PointMap& map, DistanceKind kind,
                         const SwConfig& sw) {
    const DiscreteMeasure pushed = pushforward(sigma, map);
    if (kind == DistanceKind::w2) {
        report.objective = w2_exact_squared(pushed, eta);
    } else {
        const Sw2Estimate est =
            sw2(pushed, eta, sw.num_directions, Rng(sw.seed).fork_seed(1));
        report.objective = static_cast<double>(sigma.dim()) * est.value_squared;
        report.objective_std_error =
            static_cast<double>(sigma.dim()) * est.value_squared_std_error;
    }
}

}  // namespace

RegistrationReport register_translation(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                        DistanceKind kind, const SwConfig& sw) {
    if (sigma.dim() != eta.dim()) {
        throw std::invalid_argument("register_translation: dimension mismatch");
    }
    ScaleShift s;
    s.a = 1.0;
    s.b = moments(eta).mean - moments(sigma).mean;

    RegistrationReport report;
    report.map = s;
    report.distance_kind = kind;
    recompute_objective(report, sigma, eta, s, kind, sw);
    return report;
}

RegistrationReport register_scale_shift(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                        DistanceKind kind, const SwConfig& sw) {
    if (sigma.dim() != eta.dim()) {
        throw std::invalid_argument("register_scale_shift: dimension mismatch");
    }
    const Moments ms = moments(sigma);
    const Moments me = moments(eta);
    const double var = centered_variance(ms, "register_scale_shift");

    double d2 = 0.0;
    std::optional<double> d2_se;
    if (kind == DistanceKind::w2) {
        d2 = w2_exact_squared(sigma, eta);
    } else {
        const Sw2Estimate est = sw2(sigma, eta, sw.num_directions, sw.seed);
        d2 = static_cast<double>(sigma.dim()) * est.value_squared;
        d2_se = static_cast<double>(sigma.dim()) * est.value_squared_std_error;
    }

    ScaleShift s;
    s.a = (0.5 * (me.second_moment + ms.second_moment - d2) - ms.mean.dot(me.mean)) / var;
    s.b = me.mean - s.a * ms.mean;

    RegistrationReport report;
    report.map = s;
    report.distance_kind = kind;
    report.nonpositive_scale = !(s.a > 0.0);
    if (d2_se) report.scale_std_error = *d2_se / (2.0 * var);
    recompute_objective(report, sigma, eta, s, kind, sw);
    return report;
}

GapReport registration_gap(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                           const OrthoMatrix& p) {
    const RegistrationReport to_target = register_scale_shift(sigma, mu, DistanceKind::w2);
    const DiscreteMeasure matched = apply_operator(sigma, mu, p);
    const RegistrationReport to_matched = register_scale_shift(sigma, matched, DistanceKind::w2);

    GapReport gap;
    gap.to_target = to_target.scale_shift();
    gap.to_matched = to_matched.scale_shift();

    const Moments ms = moments(sigma);
    const double var = centered_variance(ms, "registration_gap");
    gap.closed_form = (w2_exact_squared(sigma, mu) - sliced_residual(sigma, mu, p)) /
                      (2.0 * std::sqrt(var));

    const double da = gap.to_matched.a - gap.to_target.a;
    const Eigen::VectorXd db = gap.to_matched.b - gap.to_target.b;
    double acc = 0.0;
    for (int j = 0; j < sigma.size(); ++j) {
        acc += sigma.weights()[j] * (da * sigma.points().col(j) + db).squaredNorm();
    }
    gap.direct = std::sqrt(acc);
    return gap;
}

namespace {

// Exact assignment pairing: column j of the result is the eta atom matched
// to sigma atom j.
Eigen::MatrixXd assignment_images(const DiscreteMeasure& sigma, const DiscreteMeasure& eta) {
    const int m = sigma.size();
    Eigen::MatrixXd cost(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            cost(i, j) = (sigma.points().col(i) - eta.points().col(j)).squaredNorm();
        }
    }
    const std::vector<int> match = min_cost_assignment(cost);
    Eigen::MatrixXd images(sigma.dim(), m);
    for (int i = 0; i < m; ++i) images.col(i) = eta.points().col(match[static_cast<std::size_t>(i)]);
    return images;
}

void require_assignment_instance(const DiscreteMeasure& sigma, const DiscreteMeasure& eta) {
    if (sigma.dim() != eta.dim()) {
        throw unsupported_instance("register_axis_scaling: dimension mismatch");
    }
    if (sigma.size() != eta.size() || !sigma.uniform_weights() || !eta.uniform_weights()) {
        throw unsupported_instance(
            "register_axis_scaling: needs equal-size uniform clouds for the exact pairing");
    }
    if (sigma.size() > W2Options{}.max_size) {
        throw unsupported_instance("register_axis_scaling: atom count exceeds the solver cap");
    }
}

}  // namespace

RegistrationReport register_axis_scaling(const DiscreteMeasure& sigma, const DiscreteMeasure& eta,
                                         const OrthoMatrix& p) {
    require_assignment_instance(sigma, eta);
    if (p.dim() != sigma.dim()) {
        throw std::invalid_argument("register_axis_scaling: frame dimension mismatch");
    }
    const int n = sigma.dim();
    const Moments ms = moments(sigma);
    const Moments me = moments(eta);
    const Eigen::MatrixXd images = assignment_images(sigma, eta);

    Eigen::VectorXd lambda(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd axis = p.matrix().col(i);
        const Eigen::RowVectorXd sx = axis.transpose() * sigma.points();
        const Eigen::RowVectorXd sy = axis.transpose() * images;
        const double es = axis.dot(ms.mean);
        const double ee = axis.dot(me.mean);
        double cov = 0.0;
        double var = 0.0;
        for (int j = 0; j < sigma.size(); ++j) {
            cov += sigma.weights()[j] * sx[j] * sy[j];
            var += sigma.weights()[j] * sx[j] * sx[j];
        }
        cov -= es * ee;
        var -= es * es;
        if (!(var > 1e-14 * std::max(1.0, ms.second_moment))) {
            throw degenerate_error("register_axis_scaling: axis " + std::to_string(i) +
                                   " has (near) zero centered second moment");
        }
        lambda[i] = cov / var;
    }

    AxisScaling s{p, lambda, Eigen::VectorXd()};
    s.b = me.mean - p.matrix() * (lambda.asDiagonal() * (p.matrix().transpose() * ms.mean));

    RegistrationReport report;
    report.map = s;
    report.distance_kind = DistanceKind::w2;
    report.nonpositive_scale = (lambda.array() <= 0.0).any();
    recompute_objective(report, sigma, eta, s, DistanceKind::w2, SwConfig{});
    return report;
}

AxisGapReport axis_scaling_gap(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                               const OrthoMatrix& p) {
    require_assignment_instance(sigma, mu);
    const int n = sigma.dim();
    const Moments ms = moments(sigma);

    const RegistrationReport toward_mu = register_axis_scaling(sigma, mu, p);
    const DiscreteMeasure matched = apply_operator(sigma, mu, p);
    const RegistrationReport toward_matched = register_axis_scaling(sigma, matched, p);

    AxisGapReport gap;
    gap.lambda_diff =
        toward_matched.axis_scaling().lambda - toward_mu.axis_scaling().lambda;

    const Eigen::MatrixXd images = assignment_images(sigma, mu);
    gap.closed_form.resize(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd axis = p.matrix().col(i);
        const Eigen::RowVectorXd sx = axis.transpose() * sigma.points();
        const Eigen::RowVectorXd sy = axis.transpose() * images;
        const double es = axis.dot(ms.mean);
        double displacement = 0.0;
        double var = 0.0;
        for (int j = 0; j < sigma.size(); ++j) {
            const double d = sy[j] - sx[j];
            displacement += sigma.weights()[j] * d * d;
            var += sigma.weights()[j] * sx[j] * sx[j];
        }
        var -= es * es;
        const double w2sq = w2_1d_squared(project(sigma, Direction(axis)),
                                          project(mu, Direction(axis)));
        gap.closed_form[i] = (displacement - w2sq) / (2.0 * var);
    }
    return gap;
}

HaarScaleShiftSummary haar_mean_scale_shift(const DiscreteMeasure& sigma,
                                            const DiscreteMeasure& mu, int num_matrices,
                                            const SwConfig& sw, std::uint64_t seed) {
    if (num_matrices < 1) {
        throw std::invalid_argument("haar_mean_scale_shift: needs at least one frame");
    }
    const int n = sigma.dim();
    Rng rng(seed);

    double sum_a = 0.0;
    VarianceAccumulator acc_a;
    Eigen::VectorXd sum_b = Eigen::VectorXd::Zero(n);
    std::vector<VarianceAccumulator> acc_b(static_cast<std::size_t>(n));
    for (int r = 0; r < num_matrices; ++r) {
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        const DiscreteMeasure matched = apply_operator(sigma, mu, p);
        const RegistrationReport rep = register_scale_shift(sigma, matched, DistanceKind::w2);
        const ScaleShift& s = rep.scale_shift();
        sum_a += s.a;
        acc_a.add(s.a);
        sum_b += s.b;
        for (int i = 0; i < n; ++i) acc_b[static_cast<std::size_t>(i)].add(s.b[i]);
    }

    HaarScaleShiftSummary out;
    out.num_matrices = num_matrices;
    out.seed = seed;
    const double rd = static_cast<double>(num_matrices);
    out.mean_a = sum_a / rd;
    out.mean_b = sum_b / rd;
    out.se_a = std::sqrt(acc_a.sample_variance() / rd);
    out.se_b.resize(n);
    for (int i = 0; i < n; ++i) {
        out.se_b[i] = std::sqrt(acc_b[static_cast<std::size_t>(i)].sample_variance() / rd);
    }

    const RegistrationReport sw_rep = register_scale_shift(sigma, mu, DistanceKind::sw2, sw);
    out.sw_a = sw_rep.scale_shift().a;
    out.sw_a_std_error = sw_rep.scale_std_error.value_or(0.0);
    out.sw_b = sw_rep.scale_shift().b;
    return out;
}

}  // namespace slicematch
