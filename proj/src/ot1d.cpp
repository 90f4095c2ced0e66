#include "slicematch/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace slicematch {

Cdf1D::Cdf1D(const DiscreteMeasure& nu) {
    if (nu.dim() != 1) throw std::invalid_argument("Cdf1D: measure must be one-dimensional");
    std::vector<double> values(nu.points().row(0).begin(), nu.points().row(0).end());
    build(values, nu.weights());
}

Cdf1D::Cdf1D(const std::vector<double>& values, const Eigen::VectorXd& weights) {
    if (values.size() != static_cast<std::size_t>(weights.size()) || values.empty()) {
        throw std::invalid_argument("Cdf1D: support/weight size mismatch");
    }
    build(values, weights);
}

void Cdf1D::build(const std::vector<double>& values, const Eigen::VectorXd& weights) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    sup_.reserve(m);
    cum_.reserve(m);
    double running = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double v = values[order[k]];
        const double w = weights[static_cast<Eigen::Index>(order[k])];
        if (w == 0.0) continue;
        running += w;
        if (!sup_.empty() && sup_.back() == v) {
            cum_.back() = running;
        } else {
            sup_.push_back(v);
            cum_.push_back(running);
        }
    }
    if (sup_.empty()) throw std::invalid_argument("Cdf1D: no atom carries positive weight");
    cum_.back() = 1.0;
}

double Cdf1D::cdf(double t) const {
    const auto it = std::upper_bound(sup_.begin(), sup_.end(), t);
    if (it == sup_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - sup_.begin()) - 1];
}

double Cdf1D::quantile(double q) const {
    if (!(q > 0.0) || q > 1.0) {
        throw std::invalid_argument("quantile: level must lie in (0, 1]");
    }
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
    return sup_[static_cast<std::size_t>(it - cum_.begin())];
}

double Cdf1D::quantile_clamped(double q) const {
    if (q <= cum_.front()) return sup_.front();
    if (q >= 1.0) return sup_.back();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
    return sup_[static_cast<std::size_t>(it - cum_.begin())];
}

SliceMap1D::SliceMap1D(Cdf1D source, Cdf1D destination)
    : src_(std::move(source)), dst_(std::move(destination)) {}

double cdf(const DiscreteMeasure& nu, double t) { return Cdf1D(nu).cdf(t); }

double quantile(const DiscreteMeasure& nu, double q) { return Cdf1D(nu).quantile(q); }

SliceMap1D ot_map_1d(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1) {
    return SliceMap1D(Cdf1D(sigma1), Cdf1D(mu1));
}

double w2_1d_squared(const Cdf1D& a, const Cdf1D& b) {
    const auto& as = a.support();
    const auto& ac = a.cum_weights();
    const auto& bs = b.support();
    const auto& bc = b.cum_weights();
    std::size_t i = 0;
    std::size_t j = 0;
    double acc = 0.0;
    double prev = 0.0;
    while (i < as.size() && j < bs.size()) {
        const double q = std::min(ac[i], bc[j]);
        const double d = as[i] - bs[j];
        acc += (q - prev) * d * d;
        prev = q;
        if (ac[i] <= q) ++i;
        if (bc[j] <= q) ++j;
    }
    return acc;
}

double w2_1d_squared(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1) {
    return w2_1d_squared(Cdf1D(sigma1), Cdf1D(mu1));
}

double w2_1d(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1) {
    return std::sqrt(w2_1d_squared(sigma1, mu1));
}

}  // namespace slicematch
