#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace slicematch {

/// Unit vector in R^n. Construction requires | ||v|| - 1 | <= 1e-12.
class Direction {
public:
    explicit Direction(Eigen::VectorXd v);

    /// Normalizes v; rejects vectors with near-zero norm.
    static Direction normalized(const Eigen::VectorXd& v);

    [[nodiscard]] const Eigen::VectorXd& vec() const { return v_; }
    [[nodiscard]] int dim() const { return static_cast<int>(v_.size()); }

private:
    Eigen::VectorXd v_;
};

struct Moments {
    Eigen::VectorXd mean;
    double second_moment = 0.0;  // E ||x||^2, always >= ||mean||^2
};

/// Finitely supported probability measure on R^n: m weighted atoms,
/// weights nonnegative and summing to 1 within 1e-12. Immutable.
/// Duplicate atoms are kept as distinct entries, never merged.
class DiscreteMeasure {
public:
    /// points: n x m, one column per atom. weights: length m, raw sum must
    /// be within 1e-6 of 1 (tolerates file round-off); rescaled to sum 1.
    DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

    /// Uniform weights 1/m.
    static DiscreteMeasure uniform(Eigen::MatrixXd points);

    [[nodiscard]] int dim() const { return static_cast<int>(points_.rows()); }
    [[nodiscard]] int size() const { return static_cast<int>(points_.cols()); }
    [[nodiscard]] const Eigen::MatrixXd& points() const { return points_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
    [[nodiscard]] bool uniform_weights(double tol = 1e-12) const;

private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

using PointMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Projection sigma^theta: support x_i . theta in input order, weights unchanged.
DiscreteMeasure project(const DiscreteMeasure& sigma, const Direction& theta);

Moments moments(const DiscreteMeasure& sigma);

/// Image measure T#sigma: atoms T(x_i), weights unchanged, no merging.
DiscreteMeasure pushforward(const DiscreteMeasure& sigma, const PointMap& map);

/// Row-major grid of nonnegative intensities, height x width.
struct IntensityGrid {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // values[i * width + j]

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * width + j]; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * width + j]; }
};

/// Measure on R^2 from a grayscale grid: pixel (i, j) becomes the point
/// (j, height-1-i) so the image is upright in standard axes; weight is
/// proportional to intensity; zero pixels are dropped. Errors if every
/// pixel is zero.
DiscreteMeasure from_image(const IntensityGrid& grid);

/// Bins atom mass onto an height x width grid by nearest pixel (inverse of
/// the from_image point convention); atoms outside the grid are dropped.
/// Intensities are scaled so the heaviest pixel is 255.
IntensityGrid render_to_grid(const DiscreteMeasure& sigma, int height, int width);

// Compensated (Neumaier) summation; exact enough to validate weight sums.
double neumaier_sum(const Eigen::VectorXd& v);

}  // namespace slicematch
