#pragma once

#include <cstdint>
#include <vector>

#include "slicematch/measure.hpp"
#include "slicematch/slicing.hpp"

namespace slicematch {

struct W2Options {
    int max_size = 512;  // assignment solver size cap
};

/// Exact minimum-cost assignment on a square cost matrix (shortest
/// augmenting paths with potentials, O(m^3)); returns the matched column
/// for each row.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Exact quadratic transport distance between two uniform clouds of equal
/// size. Throws unsupported_instance for unequal sizes, non-uniform
/// weights, or clouds above the size cap.
double w2_exact(const DiscreteMeasure& sigma, const DiscreteMeasure& mu, const W2Options& = {});
double w2_exact_squared(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                        const W2Options& = {});

/// Monte-Carlo estimate of the sliced quadratic distance.
struct Sw2Estimate {
    double value = 0.0;       // sqrt of the mean squared 1-D distance
    int num_directions = 0;
    double std_error = 0.0;   // delta-method standard error of value
    std::uint64_t seed = 0;
    double value_squared = 0.0;
    double value_squared_std_error = 0.0;
};

Sw2Estimate sw2(const DiscreteMeasure& sigma, const DiscreteMeasure& mu, int num_directions,
                std::uint64_t seed);

/// Mean of the frame residual sum_i W2^2(sigma^{theta_i}, mu^{theta_i})
/// over Haar-sampled orthogonal frames.
struct HaarResidualEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int num_matrices = 0;
    std::uint64_t seed = 0;
};

HaarResidualEstimate haar_sliced_expectation(const DiscreteMeasure& sigma,
                                             const DiscreteMeasure& mu, int num_matrices,
                                             std::uint64_t seed);

}  // namespace slicematch
