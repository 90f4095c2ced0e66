#include "slicematch/slicematch.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "slicematch/distances.hpp"
#include "slicematch/errors.hpp"
#include "slicematch/io.hpp"

namespace slicematch {

namespace {

// Fixed-order scalar dot product. Frame coordinates must come out bitwise
// identical between map construction and map evaluation, or a coordinate
// sitting exactly on a CDF jump could read the neighboring quantile; SIMD
// dot kernels round differently depending on operand alignment.
double frame_dot(const double* axis, const double* x, Eigen::Index n) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += axis[i] * x[i];
    return acc;
}

// Column values of P^T X as a plain vector, for Cdf1D construction.
std::vector<double> frame_coords(const Eigen::MatrixXd& pts, const Eigen::VectorXd& axis) {
    std::vector<double> out(static_cast<std::size_t>(pts.cols()));
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
        out[static_cast<std::size_t>(j)] = frame_dot(axis.data(), pts.col(j).data(), pts.rows());
    }
    return out;
}

}  // namespace

SingleSliceMap::SingleSliceMap(Direction theta, SliceMap1D line)
    : theta_(std::move(theta)), line_(std::move(line)) {}

Eigen::VectorXd SingleSliceMap::operator()(const Eigen::VectorXd& x) const {
    const double t = frame_dot(theta_.vec().data(), x.data(), x.size());
    return x + (line_(t) - t) * theta_.vec();
}

MatrixSliceMap::MatrixSliceMap(OrthoMatrix p, std::vector<SliceMap1D> components)
    : p_(std::move(p)), comps_(std::move(components)) {
    if (comps_.size() != static_cast<std::size_t>(p_.dim())) {
        throw std::invalid_argument("MatrixSliceMap: one component per frame column required");
    }
}

Eigen::VectorXd MatrixSliceMap::operator()(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd& p = p_.matrix();
    Eigen::VectorXd y(p.cols());
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
        const double t = frame_dot(p.col(i).data(), x.data(), p.rows());
        y[i] = comps_[static_cast<std::size_t>(i)](t);
    }
    return p * y;
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.size() < 2) {
        throw std::invalid_argument("PiecewiseLinear: needs at least two matched breakpoints");
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i])) {
            throw std::invalid_argument("PiecewiseLinear: non-finite breakpoint");
        }
        if (i > 0 && (xs_[i] <= xs_[i - 1] || ys_[i] <= ys_[i - 1])) {
            throw std::invalid_argument("PiecewiseLinear: breakpoints must be strictly increasing");
        }
    }
}

double PiecewiseLinear::operator()(double x) const {
    const std::size_t n = xs_.size();
    if (x <= xs_.front()) {
        const double s = (ys_[1] - ys_[0]) / (xs_[1] - xs_[0]);
        return ys_.front() + s * (x - xs_.front());
    }
    if (x >= xs_.back()) {
        const double s = (ys_[n - 1] - ys_[n - 2]) / (xs_[n - 1] - xs_[n - 2]);
        return ys_.back() + s * (x - xs_.back());
    }
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + t * (ys_[i] - ys_[i - 1]);
}

CompatibleMap::CompatibleMap(OrthoMatrix p, std::vector<PiecewiseLinear> components)
    : p_(std::move(p)), comps_(std::move(components)) {
    if (comps_.size() != static_cast<std::size_t>(p_.dim())) {
        throw std::invalid_argument("CompatibleMap: one component per frame column required");
    }
}

Eigen::VectorXd CompatibleMap::operator()(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd& p = p_.matrix();
    Eigen::VectorXd y(p.cols());
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
        const double t = frame_dot(p.col(i).data(), x.data(), p.rows());
        y[i] = comps_[static_cast<std::size_t>(i)](t);
    }
    return p * y;
}

Eigen::VectorXd eval_compatible(const CompatibleMap& map, const Eigen::VectorXd& x) {
    return map(x);
}

SingleSliceMap single_slice_map(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                                const Direction& theta) {
    if (sigma.dim() != mu.dim() || sigma.dim() != theta.dim()) {
        throw std::invalid_argument("single_slice_map: dimension mismatch");
    }
    Cdf1D src(frame_coords(sigma.points(), theta.vec()), sigma.weights());
    Cdf1D dst(frame_coords(mu.points(), theta.vec()), mu.weights());
    return SingleSliceMap(theta, SliceMap1D(std::move(src), std::move(dst)));
}

MatrixSliceMap matrix_slice_map(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                                const OrthoMatrix& p) {
    if (sigma.dim() != mu.dim() || sigma.dim() != p.dim()) {
        throw std::invalid_argument("matrix_slice_map: dimension mismatch");
    }
    std::vector<SliceMap1D> comps;
    comps.reserve(static_cast<std::size_t>(p.dim()));
    for (int i = 0; i < p.dim(); ++i) {
        Cdf1D src(frame_coords(sigma.points(), p.matrix().col(i)), sigma.weights());
        Cdf1D dst(frame_coords(mu.points(), p.matrix().col(i)), mu.weights());
        comps.emplace_back(std::move(src), std::move(dst));
    }
    return MatrixSliceMap(p, std::move(comps));
}

DiscreteMeasure apply_operator(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                               const OrthoMatrix& p) {
    const MatrixSliceMap map = matrix_slice_map(sigma, mu, p);
    return pushforward(sigma, map);
}

double sliced_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                       const OrthoMatrix& p) {
    if (sigma.dim() != mu.dim() || sigma.dim() != p.dim()) {
        throw std::invalid_argument("sliced_residual: dimension mismatch");
    }
    double acc = 0.0;
    for (int i = 0; i < p.dim(); ++i) {
        Cdf1D src(frame_coords(sigma.points(), p.matrix().col(i)), sigma.weights());
        Cdf1D dst(frame_coords(mu.points(), p.matrix().col(i)), mu.weights());
        acc += w2_1d_squared(src, dst);
    }
    return acc;
}

double sliced_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                       const Direction& theta) {
    if (sigma.dim() != mu.dim() || sigma.dim() != theta.dim()) {
        throw std::invalid_argument("sliced_residual: dimension mismatch");
    }
    Cdf1D src(frame_coords(sigma.points(), theta.vec()), sigma.weights());
    Cdf1D dst(frame_coords(mu.points(), theta.vec()), mu.weights());
    return w2_1d_squared(src, dst);
}

double compatible_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                           const CompatibleMap& map, const OrthoMatrix& p) {
    if ((map.frame().matrix() - p.matrix()).norm() > 1e-10) {
        throw std::invalid_argument(
            "compatible_residual: map frame differs from the comparison frame");
    }
    const DiscreteMeasure pushed = pushforward(sigma, map);
    return sliced_residual(pushed, mu, p);
}

StepSchedule::StepSchedule(Kind kind, double param, int max_steps)
    : kind_(kind), param_(param), max_steps_(max_steps) {
    if (max_steps_ < 0) throw std::invalid_argument("StepSchedule: negative step budget");
    if (!(param_ > 0.0) || param_ > 1.0) {
        throw std::invalid_argument("StepSchedule: step sizes must stay in (0, 1]");
    }
}

StepSchedule StepSchedule::parse(const std::string& text, int max_steps) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("StepSchedule: expected rule:value, e.g. const:1.0");
    }
    const std::string rule = text.substr(0, colon);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
        throw std::invalid_argument("StepSchedule: cannot parse step value in '" + text + "'");
    }
    if (rule == "const") return StepSchedule(Kind::constant, value, max_steps);
    if (rule == "harmonic") return StepSchedule(Kind::harmonic, value, max_steps);
    throw std::invalid_argument("StepSchedule: unknown rule '" + rule + "'");
}

double StepSchedule::gamma(int k) const {
    if (k < 0) throw std::invalid_argument("StepSchedule: negative step index");
    return kind_ == Kind::constant ? param_ : param_ / static_cast<double>(k + 1);
}

void IterationTrace::write_jsonl(std::ostream& os) const {
    for (const TraceEntry& e : entries) {
        os << "{\"k\":" << e.k << ",\"gamma\":" << fmt_double(e.gamma)
           << ",\"sliced_residual\":" << fmt_double(e.sliced_residual) << ",\"mean\":[";
        for (Eigen::Index i = 0; i < e.mean.size(); ++i) {
            if (i > 0) os << ',';
            os << fmt_double(e.mean[i]);
        }
        os << "],\"m2\":" << fmt_double(e.m2) << ",\"w2_exact\":";
        if (e.w2_exact) {
            os << fmt_double(*e.w2_exact);
        } else {
            os << "null";
        }
        os << ",\"seed\":" << e.step_seed << "}\n";
    }
}

IterateResult iterate(const DiscreteMeasure& sigma0, const DiscreteMeasure& mu,
                      const StepSchedule& schedule, const IterateOptions& options) {
    if (sigma0.dim() != mu.dim()) throw std::invalid_argument("iterate: dimension mismatch");
    const int n = sigma0.dim();
    const Rng root(options.seed);

    DiscreteMeasure cur = sigma0;
    IterationTrace trace;
    trace.seed = options.seed;

    for (int k = 0;; ++k) {
        TraceEntry entry;
        entry.k = k;
        entry.gamma = schedule.gamma(k);
        entry.step_seed = root.fork_seed(static_cast<std::uint64_t>(k));
        const Moments mo = moments(cur);
        entry.mean = mo.mean;
        entry.m2 = mo.second_moment;

        Rng step(entry.step_seed);
        PointMap blend;
        if (options.sampler == SamplerKind::matrix) {
            const OrthoMatrix p = sample_haar_orthogonal(step, n);
            entry.sliced_residual = sliced_residual(cur, mu, p);
            const MatrixSliceMap map = matrix_slice_map(cur, mu, p);
            const double g = entry.gamma;
            blend = [map, g](const Eigen::VectorXd& x) {
                return ((1.0 - g) * x + g * map(x)).eval();
            };
        } else {
            const Direction theta = sample_direction(step, n);
            entry.sliced_residual = sliced_residual(cur, mu, theta);
            const SingleSliceMap map = single_slice_map(cur, mu, theta);
            const double g = entry.gamma;
            blend = [map, g](const Eigen::VectorXd& x) {
                return ((1.0 - g) * x + g * map(x)).eval();
            };
        }

        if (options.record_w2) {
            try {
                entry.w2_exact = w2_exact(cur, mu);
            } catch (const unsupported_instance&) {
                entry.w2_exact = std::nullopt;
            }
        }
        trace.entries.push_back(std::move(entry));

        const double resid = trace.entries.back().sliced_residual;
        if ((options.tol > 0.0 && resid < options.tol) || k == schedule.max_steps()) break;
        cur = pushforward(cur, blend);
    }
    return IterateResult{std::move(cur), std::move(trace)};
}

}  // namespace slicematch
