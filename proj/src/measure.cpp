#include "slicematch/measure.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "slicematch/errors.hpp"

namespace slicematch {

double neumaier_sum(const Eigen::VectorXd& v) {
    double sum = 0.0;
    double comp = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v[i];
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

Direction::Direction(Eigen::VectorXd v) : v_(std::move(v)) {
    if (v_.size() == 0) throw std::invalid_argument("Direction: empty vector");
    if (!v_.allFinite()) throw std::invalid_argument("Direction: non-finite entry");
    if (std::abs(v_.norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("Direction: norm deviates from 1 by more than 1e-12");
    }
}

Direction Direction::normalized(const Eigen::VectorXd& v) {
    const double n = v.norm();
    if (!(n > 1e-300)) throw std::invalid_argument("Direction: cannot normalize near-zero vector");
    return Direction(v / n);
}

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.cols() < 1) throw std::invalid_argument("DiscreteMeasure: needs at least one atom");
    if (points_.rows() < 1) throw std::invalid_argument("DiscreteMeasure: needs dimension >= 1");
    if (weights_.size() != points_.cols()) {
        throw std::invalid_argument("DiscreteMeasure: weight count does not match atom count");
    }
    if (!points_.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite coordinate");
    if (!weights_.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite weight");
    if ((weights_.array() < 0.0).any()) {
        throw std::invalid_argument("DiscreteMeasure: negative weight");
    }
    const double raw = neumaier_sum(weights_);
    if (std::abs(raw - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "DiscreteMeasure: weights sum to " + std::to_string(raw) +
            ", more than 1e-6 away from 1");
    }
    weights_ /= raw;
    // Fold the remaining rounding residual into the largest weight so the
    // sum-to-1 invariant holds at 1e-12 for any atom count.
    Eigen::Index imax = 0;
    weights_.maxCoeff(&imax);
    weights_[imax] += 1.0 - neumaier_sum(weights_);
    if (std::abs(neumaier_sum(weights_) - 1.0) > 1e-12) {
        throw std::invalid_argument("DiscreteMeasure: weight normalization failed");
    }
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd points) {
    const Eigen::Index m = points.cols();
    if (m < 1) throw std::invalid_argument("DiscreteMeasure: needs at least one atom");
    return DiscreteMeasure(std::move(points), Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)));
}

bool DiscreteMeasure::uniform_weights(double tol) const {
    const double w = 1.0 / static_cast<double>(size());
    return ((weights_.array() - w).abs() <= tol).all();
}

DiscreteMeasure project(const DiscreteMeasure& sigma, const Direction& theta) {
    if (theta.dim() != sigma.dim()) {
        throw std::invalid_argument("project: direction dimension does not match measure");
    }
    Eigen::MatrixXd support(1, sigma.size());
    support.row(0) = theta.vec().transpose() * sigma.points();
    return DiscreteMeasure(std::move(support), sigma.weights());
}

Moments moments(const DiscreteMeasure& sigma) {
    Moments out;
    out.mean = sigma.points() * sigma.weights();
    out.second_moment = sigma.points().colwise().squaredNorm().dot(sigma.weights().transpose());
    return out;
}

DiscreteMeasure pushforward(const DiscreteMeasure& sigma, const PointMap& map) {
    Eigen::MatrixXd imgs(sigma.dim(), sigma.size());
    for (int j = 0; j < sigma.size(); ++j) {
        Eigen::VectorXd y = map(sigma.points().col(j));
        if (y.size() != sigma.dim()) {
            throw std::invalid_argument("pushforward: map changed the dimension");
        }
        imgs.col(j) = y;
    }
    return DiscreteMeasure(std::move(imgs), sigma.weights());
}

DiscreteMeasure from_image(const IntensityGrid& grid) {
    if (grid.height < 1 || grid.width < 1 ||
        grid.values.size() != static_cast<std::size_t>(grid.height) * grid.width) {
        throw std::invalid_argument("from_image: inconsistent grid dimensions");
    }
    double total = 0.0;
    for (double v : grid.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("from_image: intensities must be finite and nonnegative");
        }
        total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("from_image: all pixels are zero");

    std::vector<double> xs, ys, ws;
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            const double v = grid.at(i, j);
            if (v == 0.0) continue;
            xs.push_back(static_cast<double>(j));
            ys.push_back(static_cast<double>(grid.height - 1 - i));
            ws.push_back(v / total);
        }
    }
    const Eigen::Index m = static_cast<Eigen::Index>(ws.size());
    Eigen::MatrixXd pts(2, m);
    Eigen::VectorXd w(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        pts(0, k) = xs[static_cast<std::size_t>(k)];
        pts(1, k) = ys[static_cast<std::size_t>(k)];
        w[k] = ws[static_cast<std::size_t>(k)];
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

IntensityGrid render_to_grid(const DiscreteMeasure& sigma, int height, int width) {
    if (sigma.dim() != 2) throw std::invalid_argument("render_to_grid: measure must be planar");
    if (height < 1 || width < 1) throw std::invalid_argument("render_to_grid: empty grid");
    std::vector<double> mass(static_cast<std::size_t>(height) * width, 0.0);
    for (int k = 0; k < sigma.size(); ++k) {
        const long j = std::lround(sigma.points()(0, k));
        const long i = static_cast<long>(height) - 1 - std::lround(sigma.points()(1, k));
        if (i < 0 || i >= height || j < 0 || j >= width) continue;
        mass[static_cast<std::size_t>(i) * width + j] += sigma.weights()[k];
    }
    double peak = 0.0;
    for (double m : mass) peak = std::max(peak, m);
    IntensityGrid out;
    out.height = height;
    out.width = width;
    out.values.resize(mass.size(), 0.0);
    if (peak > 0.0) {
        for (std::size_t k = 0; k < mass.size(); ++k) {
            out.values[k] = std::round(255.0 * mass[k] / peak);
        }
    }
    return out;
}

}  // namespace slicematch
