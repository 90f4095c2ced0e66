#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slicematch/measure.hpp"
#include "slicematch/ot1d.hpp"
#include "slicematch/slicing.hpp"

namespace slicematch {

/// x + (t(x . theta) - x . theta) theta: moves points along theta by the
/// 1-D transport map t, leaves the orthogonal complement untouched.
class SingleSliceMap {
public:
    SingleSliceMap(Direction theta, SliceMap1D line);

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
    [[nodiscard]] const Direction& direction() const { return theta_; }
    [[nodiscard]] const SliceMap1D& line() const { return line_; }

private:
    Direction theta_;
    SliceMap1D line_;
};

/// sum_i t_i(x . theta_i) theta_i over the orthonormal columns theta_i of P:
/// every coordinate in the P frame is transported by its own 1-D map.
class MatrixSliceMap {
public:
    MatrixSliceMap(OrthoMatrix p, std::vector<SliceMap1D> components);

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
    [[nodiscard]] const OrthoMatrix& frame() const { return p_; }
    [[nodiscard]] const std::vector<SliceMap1D>& components() const { return comps_; }

private:
    OrthoMatrix p_;
    std::vector<SliceMap1D> comps_;
};

/// Strictly increasing piecewise-linear function given by breakpoints;
/// outside the breakpoint range it extrapolates with the end segment slope.
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] const std::vector<double>& xs() const { return xs_; }
    [[nodiscard]] const std::vector<double>& ys() const { return ys_; }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

/// Member of the compatible family for frame P: sum_i f_i(x . theta_i) theta_i
/// with every f_i strictly increasing.
class CompatibleMap {
public:
    CompatibleMap(OrthoMatrix p, std::vector<PiecewiseLinear> components);

    [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
    [[nodiscard]] const OrthoMatrix& frame() const { return p_; }
    [[nodiscard]] const std::vector<PiecewiseLinear>& components() const { return comps_; }

private:
    OrthoMatrix p_;
    std::vector<PiecewiseLinear> comps_;
};

Eigen::VectorXd eval_compatible(const CompatibleMap& map, const Eigen::VectorXd& x);

SingleSliceMap single_slice_map(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                                const Direction& theta);

MatrixSliceMap matrix_slice_map(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                                const OrthoMatrix& p);

/// The slice-matching operator U(sigma, mu, P): pushforward of sigma under
/// the matrix slice map.
DiscreteMeasure apply_operator(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                               const OrthoMatrix& p);

/// sum_i W2^2(sigma^{theta_i}, mu^{theta_i}) over the columns of P.
double sliced_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                       const OrthoMatrix& p);

/// Single-direction residual W2^2(sigma^theta, mu^theta).
double sliced_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                       const Direction& theta);

/// sum_i W2^2((T#sigma)^{theta_i}, mu^{theta_i}) for a compatible T. The
/// frame p must coincide with T's own frame.
double compatible_residual(const DiscreteMeasure& sigma, const DiscreteMeasure& mu,
                           const CompatibleMap& map, const OrthoMatrix& p);

/// Step sizes for the iterative scheme; gamma(k) must lie in (0, 1] for
/// every k, so constant needs 0 < value <= 1 and harmonic c/(k+1) needs
/// 0 < c <= 1.
class StepSchedule {
public:
    enum class Kind { constant, harmonic };

    StepSchedule(Kind kind, double param, int max_steps);

    /// Parses "const:0.5" or "harmonic:1.0".
    static StepSchedule parse(const std::string& text, int max_steps);

    [[nodiscard]] double gamma(int k) const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double param() const { return param_; }
    [[nodiscard]] int max_steps() const { return max_steps_; }

private:
    Kind kind_;
    double param_;
    int max_steps_;
};

enum class SamplerKind { matrix, single };

struct TraceEntry {
    int k = 0;
    double gamma = 0.0;
    double sliced_residual = 0.0;
    Eigen::VectorXd mean;
    double m2 = 0.0;
    std::optional<double> w2_exact;
    std::uint64_t step_seed = 0;
};

struct IterationTrace {
    std::uint64_t seed = 0;
    std::vector<TraceEntry> entries;

    /// One JSON object per line with fixed keys
    /// k, gamma, sliced_residual, mean, m2, w2_exact, seed.
    void write_jsonl(std::ostream& os) const;
};

struct IterateOptions {
    SamplerKind sampler = SamplerKind::matrix;
    std::uint64_t seed = 0;
    double tol = 1e-10;        // early stop when residual < tol; 0 disables
    bool record_w2 = false;    // exact W2(sigma_k, mu) per entry when supported
};

struct IterateResult {
    DiscreteMeasure final;
    IterationTrace trace;
};

/// sigma_{k+1} = ((1 - gamma_k) id + gamma_k T_k)#sigma_k with a freshly
/// sampled frame (or direction) per step; step k draws from child stream k
/// of the seed. The residual is evaluated against the step's directions
/// before pushing and recorded; the scheme stops once it drops below tol
/// or after max_steps pushes.
IterateResult iterate(const DiscreteMeasure& sigma0, const DiscreteMeasure& mu,
                      const StepSchedule& schedule, const IterateOptions& options);

}  // namespace slicematch
