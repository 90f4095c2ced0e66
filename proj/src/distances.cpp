#include "slicematch/distances.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "slicematch/errors.hpp"
#include "slicematch/ot1d.hpp"

namespace slicematch {

namespace {

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

}  // namespace

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols() || cost.rows() < 1) {
        throw std::invalid_argument("min_cost_assignment: cost matrix must be square");
    }
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();

    // 1-indexed potentials/links; p[j] is the row matched to column j.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
    return row_to_col;
}

namespace {

void require_exact_instance(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                            const W2Options& opts) {
    if (sigma.dim() != mu.dim()) {
        throw unsupported_instance("w2_exact: dimension mismatch between the two measures");
    }
    if (sigma.size() != mu.size()) {
        throw unsupported_instance(
            "w2_exact: supports only equal atom counts (got " + std::to_string(sigma.size()) +
            " vs " + std::to_string(mu.size()) + ")");
    }
    if (!sigma.uniform_weights() || !mu.uniform_weights()) {
        throw unsupported_instance("w2_exact: supports only uniform weights");
    }
    if (sigma.size() > opts.max_size) {
        throw unsupported_instance("w2_exact: atom count " + std::to_string(sigma.size()) +
                                   " exceeds the solver cap " + std::to_string(opts.max_size));
    }
}

}  // namespace

double w2_exact_squared(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                        const W2Options& opts) {
    require_exact_instance(sigma, mu, opts);
    const int m = sigma.size();
    Eigen::MatrixXd cost(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            cost(i, j) = (sigma.points().col(i) - mu.points().col(j)).squaredNorm();
        }
    }
    const std::vector<int> match = min_cost_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
    return total / static_cast<double>(m);
}

double w2_exact(const DiscreteMeasure& sigma, const DiscreteMeasure& mu, const W2Options& opts) {
    return std::sqrt(w2_exact_squared(sigma, mu, opts));
}

Sw2Estimate sw2(const DiscreteMeasure& sigma, const DiscreteMeasure& mu, int num_directions,
                std::uint64_t seed) {
    if (sigma.dim() != mu.dim()) throw std::invalid_argument("sw2: dimension mismatch");
    if (num_directions < 1) throw std::invalid_argument("sw2: needs at least one direction");

    Rng rng(seed);
    const int n = sigma.dim();
    double sum = 0.0;
    VarianceAccumulator acc;
    std::vector<double> sv(static_cast<std::size_t>(sigma.size()));
    std::vector<double> mv(static_cast<std::size_t>(mu.size()));
    for (int l = 0; l < num_directions; ++l) {
        const Direction theta = sample_direction(rng, n);
        Eigen::Map<Eigen::RowVectorXd>(sv.data(), sigma.size()) =
            theta.vec().transpose() * sigma.points();
        Eigen::Map<Eigen::RowVectorXd>(mv.data(), mu.size()) =
            theta.vec().transpose() * mu.points();
        const double d2 = w2_1d_squared(Cdf1D(sv, sigma.weights()), Cdf1D(mv, mu.weights()));
        sum += d2;
        acc.add(d2);
    }

    Sw2Estimate est;
    est.num_directions = num_directions;
    est.seed = seed;
    const double ld = static_cast<double>(num_directions);
    est.value_squared = sum / ld;
    est.value_squared_std_error = std::sqrt(acc.sample_variance() / ld);
    est.value = std::sqrt(est.value_squared);
    est.std_error = est.value > 0.0 ? est.value_squared_std_error / (2.0 * est.value) : 0.0;
    return est;
}

HaarResidualEstimate haar_sliced_expectation(const DiscreteMeasure& sigma,
                                             const DiscreteMeasure& mu, int num_matrices,
                                             std::uint64_t seed) {
    if (sigma.dim() != mu.dim()) {
        throw std::invalid_argument("haar_sliced_expectation: dimension mismatch");
    }
    if (num_matrices < 1) {
        throw std::invalid_argument("haar_sliced_expectation: needs at least one frame");
    }
    Rng rng(seed);
    const int n = sigma.dim();
    double sum = 0.0;
    VarianceAccumulator acc;
    std::vector<double> sv(static_cast<std::size_t>(sigma.size()));
    std::vector<double> mv(static_cast<std::size_t>(mu.size()));
    for (int r = 0; r < num_matrices; ++r) {
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        double resid = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::Map<Eigen::RowVectorXd>(sv.data(), sigma.size()) =
                p.matrix().col(i).transpose() * sigma.points();
            Eigen::Map<Eigen::RowVectorXd>(mv.data(), mu.size()) =
                p.matrix().col(i).transpose() * mu.points();
            resid += w2_1d_squared(Cdf1D(sv, sigma.weights()), Cdf1D(mv, mu.weights()));
        }
        sum += resid;
        acc.add(resid);
    }
    HaarResidualEstimate est;
    est.num_matrices = num_matrices;
    est.seed = seed;
    const double rd = static_cast<double>(num_matrices);
    est.mean = sum / rd;
    est.std_error = std::sqrt(acc.sample_variance() / rd);
    return est;
}

}  // namespace slicematch
