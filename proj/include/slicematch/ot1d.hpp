#pragma once

#include <vector>

#include "slicematch/measure.hpp"

namespace slicematch {

/// Sorted support with strictly increasing cumulative weights.
/// Ties in the input are ordered by original index, equal support values are
/// collapsed into one entry, zero-weight atoms are dropped, and the final
/// cumulative weight is pinned to exactly 1.
class Cdf1D {
public:
    explicit Cdf1D(const DiscreteMeasure& nu);  // requires nu.dim() == 1
    Cdf1D(const std::vector<double>& values, const Eigen::VectorXd& weights);

    /// Right-continuous CDF: F(t) = sum of weights of atoms <= t.
    [[nodiscard]] double cdf(double t) const;

    /// Left-continuous quantile: inf { t : F(t) >= q }. Requires q in (0, 1].
    [[nodiscard]] double quantile(double q) const;

    /// quantile extended to all of R: q <= 0 maps to the first support
    /// point, q > 1 to the last.
    [[nodiscard]] double quantile_clamped(double q) const;

    [[nodiscard]] const std::vector<double>& support() const { return sup_; }
    [[nodiscard]] const std::vector<double>& cum_weights() const { return cum_; }

private:
    void build(const std::vector<double>& values, const Eigen::VectorXd& weights);

    std::vector<double> sup_;
    std::vector<double> cum_;
};

/// Monotone transport map between two measures on R, evaluated as
/// quantile(destination, cdf(source, x)); total and nondecreasing on R.
class SliceMap1D {
public:
    SliceMap1D(Cdf1D source, Cdf1D destination);

    [[nodiscard]] double operator()(double x) const {
        return dst_.quantile_clamped(src_.cdf(x));
    }

    [[nodiscard]] const Cdf1D& source() const { return src_; }
    [[nodiscard]] const Cdf1D& destination() const { return dst_; }

private:
    Cdf1D src_;
    Cdf1D dst_;
};

double cdf(const DiscreteMeasure& nu, double t);
double quantile(const DiscreteMeasure& nu, double q);

/// Monotone transport map from sigma1 to mu1 (both on R).
SliceMap1D ot_map_1d(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1);

/// Squared quadratic transport distance on R: exact piecewise-constant
/// quadrature of |Q_mu - Q_sigma|^2 over the merged cumulative-weight
/// breakpoints.
double w2_1d_squared(const Cdf1D& sigma1, const Cdf1D& mu1);
double w2_1d_squared(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1);

double w2_1d(const DiscreteMeasure& sigma1, const DiscreteMeasure& mu1);

}  // namespace slicematch
