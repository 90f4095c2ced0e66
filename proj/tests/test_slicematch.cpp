#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "slicematch/distances.hpp"
#include "slicematch/registration.hpp"
#include "slicematch/slicematch.hpp"

using namespace slicematch;

namespace {

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

PointMap shift_by(const Eigen::VectorXd& b) {
    return [b](const Eigen::VectorXd& x) { return (x + b).eval(); };
}

PointMap affine(double a, const Eigen::VectorXd& b) {
    return [a, b](const Eigen::VectorXd& x) { return (a * x + b).eval(); };
}

CompatibleMap random_compatible(Rng& rng, const OrthoMatrix& p) {
    return oracle::random_compatible(rng, p);
}

PiecewiseLinear identity_pl() { return PiecewiseLinear({0.0, 1.0}, {0.0, 1.0}); }

double weighted_map_gap_sq(const DiscreteMeasure& sigma, const PointMap& f, const PointMap& g) {
    double acc = 0.0;
    for (int j = 0; j < sigma.size(); ++j) {
        const Eigen::VectorXd x = sigma.points().col(j);
        acc += sigma.weights()[j] * (f(x) - g(x)).squaredNorm();
    }
    return acc;
}

}  // namespace

TEST_CASE("single-slice map corrects only the sliced coordinate") {
    Rng rng(301);
    const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 3, 14);
    const DiscreteMeasure mu = oracle::random_weighted_cloud(rng, 3, 10, 1.4);
    const Direction theta = sample_direction(rng, 3);
    const SingleSliceMap map = single_slice_map(sigma, mu, theta);

    for (int j = 0; j < sigma.size(); ++j) {
        const Eigen::VectorXd x = sigma.points().col(j);
        const Eigen::VectorXd d = map(x) - x;
        // Residual after removing the theta component.
        CHECK((d - theta.vec().dot(d) * theta.vec()).norm() <= 1e-12);
    }

    CHECK_THROWS_AS(single_slice_map(sigma, oracle::random_cloud(rng, 2, 5), theta),
                    std::invalid_argument);
}

TEST_CASE("single-slice map on an identical target is the identity on support") {
    Rng rng(303);
    const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 2, 9);
    const Direction theta = sample_direction(rng, 2);
    const SingleSliceMap map = single_slice_map(sigma, sigma, theta);
    for (int j = 0; j < sigma.size(); ++j) {
        const Eigen::VectorXd x = sigma.points().col(j);
        CHECK((map(x) - x).norm() <= 1e-12);
    }
}

TEST_CASE("single-slice map recovers the sliced component of a shift") {
    Rng rng(307);
    for (int t = 0; t < 10; ++t) {
        const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 3, 12);
        const Eigen::VectorXd b = random_vector(rng, 3);
        const DiscreteMeasure mu = pushforward(sigma, shift_by(b));
        const Direction theta = sample_direction(rng, 3);
        const SingleSliceMap map = single_slice_map(sigma, mu, theta);
        const double along = theta.vec().dot(b);
        for (int j = 0; j < sigma.size(); ++j) {
            const Eigen::VectorXd x = sigma.points().col(j);
            CHECK((map(x) - (x + along * theta.vec())).norm() <= 1e-12);
        }
    }
}

TEST_CASE("one-dimensional single-slice map reduces to the line map") {
    Rng rng(311);
    const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 1, 8);
    const DiscreteMeasure mu = oracle::random_weighted_cloud(rng, 1, 6);
    const Direction e(Eigen::VectorXd::Ones(1));
    const SingleSliceMap map = single_slice_map(sigma, mu, e);
    const SliceMap1D line = ot_map_1d(sigma, mu);
    for (int g = -20; g <= 20; ++g) {
        const double x = 0.2 * g;
        Eigen::VectorXd v(1);
        v[0] = x;
        CHECK(map(v)[0] == doctest::Approx(line(x)).epsilon(1e-14));
    }
}

TEST_CASE("piecewise-linear breakpoints are validated") {
    CHECK_THROWS_AS(PiecewiseLinear({0.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 1.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 0.0}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 1.0}, {2.0, 1.0}), std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(PiecewiseLinear({0.0, inf}, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("piecewise-linear evaluation interpolates and extrapolates by end slopes") {
    const PiecewiseLinear f({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0});
    CHECK(f(0.0) == 0.0);
    CHECK(f(1.0) == 2.0);
    CHECK(f(2.0) == 3.0);
    CHECK(f(0.5) == 1.0);
    CHECK(f(1.5) == 2.5);
    CHECK(f(-1.0) == -2.0);  // left slope 2
    CHECK(f(3.0) == 4.0);    // right slope 1
}

TEST_CASE("compatible map evaluates coordinatewise in its frame") {
    const OrthoMatrix id(Eigen::MatrixXd::Identity(2, 2));
    const CompatibleMap t(id, {PiecewiseLinear({0.0, 1.0}, {0.0, 2.0}),
                               PiecewiseLinear({0.0, 1.0}, {1.0, 2.0})});
    const Eigen::VectorXd out = eval_compatible(t, Eigen::Vector2d(3.0, -2.0));
    CHECK(out[0] == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-14));

    const CompatibleMap ident(id, {identity_pl(), identity_pl()});
    const Eigen::VectorXd kept = ident(Eigen::Vector2d(0.3, -7.5));
    CHECK(kept[0] == 0.3);
    CHECK(kept[1] == -7.5);

    CHECK_THROWS_AS(CompatibleMap(id, {identity_pl()}), std::invalid_argument);
}

TEST_CASE("compatible map commutes with its frame projections") {
    Rng rng(313);
    for (int t = 0; t < 10; ++t) {
        const OrthoMatrix p = sample_haar_orthogonal(rng, 3);
        const CompatibleMap map = random_compatible(rng, p);
        const Eigen::VectorXd x = random_vector(rng, 3, 2.0);
        const Eigen::VectorXd y = map(x);
        for (int i = 0; i < 3; ++i) {
            const double want = map.components()[static_cast<std::size_t>(i)](
                p.column(i).vec().dot(x));
            CHECK(std::abs(p.column(i).vec().dot(y) - want) <= 1e-10);
        }
    }
}

TEST_CASE("matrix-slice map recovers scale-shift targets under any frame") {
    Rng rng(317);
    for (double a : {0.5, 1.0, 1.6}) {
        for (int n : {2, 3}) {
            const DiscreteMeasure sigma = oracle::random_cloud(rng, n, 16, 1.5);
            const Eigen::VectorXd b = random_vector(rng, n, 2.0);
            const DiscreteMeasure mu = pushforward(sigma, affine(a, b));
            for (int t = 0; t < 5; ++t) {
                const OrthoMatrix p = sample_haar_orthogonal(rng, n);
                const MatrixSliceMap map = matrix_slice_map(sigma, mu, p);
                for (int j = 0; j < sigma.size(); ++j) {
                    const Eigen::VectorXd x = sigma.points().col(j);
                    CHECK((map(x) - (a * x + b)).norm() < 1e-9);
                }
                CHECK(w2_exact(apply_operator(sigma, mu, p), mu) < 1e-9);
            }
        }
    }

    // Weighted sources recover affine targets as well: the cumulative weight
    // profiles coincide slice by slice.
    const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 2, 11);
    const Eigen::VectorXd b = random_vector(rng, 2);
    const DiscreteMeasure mu = pushforward(sigma, affine(1.6, b));
    const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
    const MatrixSliceMap map = matrix_slice_map(sigma, mu, p);
    for (int j = 0; j < sigma.size(); ++j) {
        const Eigen::VectorXd x = sigma.points().col(j);
        CHECK((map(x) - (1.6 * x + b)).norm() < 1e-9);
    }
}

TEST_CASE("matrix-slice map recovers compatible targets over their own frame") {
    Rng rng(331);
    for (int t = 0; t < 10; ++t) {
        const int n = 2 + (t % 2);
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        const CompatibleMap target = random_compatible(rng, p);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, n, 12, 1.5);
        const DiscreteMeasure mu = pushforward(sigma, [&](const Eigen::VectorXd& x) {
            return target(x);
        });
        const MatrixSliceMap map = matrix_slice_map(sigma, mu, p);
        for (int j = 0; j < sigma.size(); ++j) {
            const Eigen::VectorXd x = sigma.points().col(j);
            CHECK((map(x) - target(x)).norm() < 1e-9);
        }
        CHECK(oracle::measures_equal(apply_operator(sigma, mu, p), mu, rng));
    }
}

TEST_CASE("operator output matches every slice of the target") {
    Rng rng(337);
    for (int t = 0; t < 10; ++t) {
        const int n = 2 + (t % 3);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, n, 32);
        const DiscreteMeasure mu = oracle::random_cloud(rng, n, 32, 1.7, 0.4);
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        const DiscreteMeasure matched = apply_operator(sigma, mu, p);
        for (int i = 0; i < n; ++i) {
            CHECK(w2_1d(project(matched, p.column(i)), project(mu, p.column(i))) < 1e-10);
        }
    }
}

TEST_CASE("operator output matches the target's first two moments") {
    Rng rng(347);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + (t % 4);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, n, 64, 1.3);
        const DiscreteMeasure mu = oracle::random_cloud(rng, n, 64, 2.0, -0.6);
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        const Moments got = moments(apply_operator(sigma, mu, p));
        const Moments want = moments(mu);
        CHECK((got.mean - want.mean).norm() < 1e-10);
        CHECK(std::abs(got.second_moment - want.second_moment) <
              1e-9 * (1.0 + want.second_moment));
    }
}

TEST_CASE("operator on an identical target returns the source distribution") {
    Rng rng(349);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 6);
    const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
    const DiscreteMeasure out = apply_operator(sigma, sigma, p);
    CHECK(oracle::brute_force_w2sq(out, sigma) < 1e-20);
}

TEST_CASE("sliced residual worked values") {
    Rng rng(353);
    const DiscreteMeasure sigma = oracle::random_weighted_cloud(rng, 4, 13);
    const OrthoMatrix p = sample_haar_orthogonal(rng, 4);
    CHECK(sliced_residual(sigma, sigma, p) == 0.0);

    const Eigen::VectorXd b = random_vector(rng, 4, 1.5);
    const DiscreteMeasure mu = pushforward(sigma, shift_by(b));
    CHECK(sliced_residual(sigma, mu, p) == doctest::Approx(b.squaredNorm()).epsilon(1e-11));

    const Direction theta = sample_direction(rng, 4);
    const double one = sliced_residual(sigma, mu, theta);
    CHECK(one == doctest::Approx(w2_1d_squared(project(sigma, theta), project(mu, theta)))
                     .epsilon(1e-12));
}

TEST_CASE("sliced residual equals the squared distance to the matched measure") {
    Rng rng(359);
    for (int t = 0; t < 25; ++t) {
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 6, 1.2);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 6, 1.8, 0.5);
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const DiscreteMeasure matched = apply_operator(sigma, mu, p);
        const double direct = oracle::brute_force_w2sq(sigma, matched);
        CHECK(std::abs(direct - sliced_residual(sigma, mu, p)) < 1e-8);
    }
}

TEST_CASE("compatible residual equals the deviation from the matrix-slice map") {
    Rng rng(367);
    for (int t = 0; t < 10; ++t) {
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 24, 1.4);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 24, 1.1, 0.8);
        const CompatibleMap s = random_compatible(rng, p);
        const MatrixSliceMap tp = matrix_slice_map(sigma, mu, p);
        const double gap = weighted_map_gap_sq(
            sigma, [&](const Eigen::VectorXd& x) { return s(x); },
            [&](const Eigen::VectorXd& x) { return tp(x); });
        CHECK(compatible_residual(sigma, mu, s, p) == doctest::Approx(gap).epsilon(1e-9));
    }

    // Small instances admit a third route through the assignment solver.
    for (int t = 0; t < 10; ++t) {
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 6, 1.4);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 6, 1.1, 0.8);
        const CompatibleMap s = random_compatible(rng, p);
        const DiscreteMeasure pushed =
            pushforward(sigma, [&](const Eigen::VectorXd& x) { return s(x); });
        const double direct = oracle::brute_force_w2sq(pushed, apply_operator(sigma, mu, p));
        CHECK(std::abs(compatible_residual(sigma, mu, s, p) - direct) < 1e-8);
    }
}

TEST_CASE("compatible residual of the identity map is the sliced residual") {
    Rng rng(373);
    const OrthoMatrix p = sample_haar_orthogonal(rng, 3);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 3, 20);
    const DiscreteMeasure mu = oracle::random_cloud(rng, 3, 20, 1.5);
    const CompatibleMap ident(p, {identity_pl(), identity_pl(), identity_pl()});
    CHECK(compatible_residual(sigma, mu, ident, p) ==
          doctest::Approx(sliced_residual(sigma, mu, p)).epsilon(1e-9));

    const OrthoMatrix other = sample_haar_orthogonal(rng, 3);
    CHECK_THROWS_AS(compatible_residual(sigma, mu, ident, other), std::invalid_argument);
}

TEST_CASE("the matrix-slice map minimizes the compatible residual") {
    // Interpolating the matched per-axis values gives a compatible map that
    // agrees with the matrix-slice map on the support, so its residual is 0.
    Rng rng(379);
    const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 10);
    const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 10, 1.3, -0.2);
    const MatrixSliceMap tp = matrix_slice_map(sigma, mu, p);

    std::vector<PiecewiseLinear> comps;
    for (int i = 0; i < 2; ++i) {
        const Cdf1D src(project(sigma, p.column(i)));
        std::vector<double> xs = src.support();
        std::vector<double> ys(xs.size());
        const SliceMap1D& line = tp.components()[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = line(xs[k]);
        comps.emplace_back(std::move(xs), std::move(ys));
    }
    const CompatibleMap interp(p, std::move(comps));
    CHECK(compatible_residual(sigma, mu, interp, p) < 1e-18);

    const CompatibleMap off = random_compatible(rng, p);
    CHECK(compatible_residual(sigma, mu, off, p) >= 0.0);
}

TEST_CASE("operator is invariant to scale-shift changes of the source") {
    Rng rng(383);
    for (int t = 0; t < 10; ++t) {
        const int m = (t % 2 == 0) ? 6 : 64;
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, m);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, m, 1.5, 0.3);
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const double a = 0.3 + 2.0 * rng.uniform01();
        const Eigen::VectorXd b = random_vector(rng, 2);
        const DiscreteMeasure moved = pushforward(sigma, affine(a, b));
        CHECK(oracle::measures_equal(apply_operator(moved, mu, p),
                                     apply_operator(sigma, mu, p), rng));
    }
}

TEST_CASE("operator is equivariant to scale-shift changes of the target") {
    Rng rng(389);
    for (int t = 0; t < 10; ++t) {
        const int m = (t % 2 == 0) ? 6 : 64;
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, m);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, m, 1.5, 0.3);
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const double a = 0.3 + 2.0 * rng.uniform01();
        const Eigen::VectorXd b = random_vector(rng, 2);
        const PointMap s = affine(a, b);
        const DiscreteMeasure lhs = apply_operator(sigma, pushforward(mu, s), p);
        const DiscreteMeasure rhs = pushforward(apply_operator(sigma, mu, p), s);
        CHECK(oracle::measures_equal(lhs, rhs, rng));
    }
}

TEST_CASE("operator is invariant and equivariant for compatible maps over its frame") {
    Rng rng(397);
    for (int t = 0; t < 10; ++t) {
        const int m = (t % 2 == 0) ? 6 : 64;
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, m);
        const DiscreteMeasure mu = oracle::random_cloud(rng, 2, m, 1.4, -0.5);
        const CompatibleMap s = random_compatible(rng, p);
        const PointMap sf = [&](const Eigen::VectorXd& x) { return s(x); };

        CHECK(oracle::measures_equal(apply_operator(pushforward(sigma, sf), mu, p),
                                     apply_operator(sigma, mu, p), rng));

        const DiscreteMeasure lhs = apply_operator(sigma, pushforward(mu, sf), p);
        const DiscreteMeasure rhs = pushforward(apply_operator(sigma, mu, p), sf);
        CHECK(oracle::measures_equal(lhs, rhs, rng));
    }
}

TEST_CASE("slice maps are stable in the frame within the Lipschitz bound") {
    Rng rng(401);
    int trials = 0;
    double worst_ratio = 0.0;
    while (trials < 20) {
        const int n = 2 + (trials % 2);
        const DiscreteMeasure sigma = oracle::random_cloud(rng, n, 16, 1.5);
        const DiscreteMeasure mu = oracle::random_cloud(rng, n, 16, 1.5, 0.5);
        const OrthoMatrix p = sample_haar_orthogonal(rng, n);
        const OrthoMatrix q = (trials % 2 == 0)
                                  ? sample_haar_orthogonal(rng, n)
                                  : oracle::small_rotation_of(p, rng, 0.05);
        std::vector<Direction> axes;
        for (int i = 0; i < n; ++i) {
            axes.push_back(p.column(i));
            axes.push_back(q.column(i));
        }
        const double lhat = oracle::max_slope_estimate(sigma, mu, rng, 64, axes);
        const double c = std::max(moments(sigma).second_moment, moments(mu).second_moment);
        const double bound =
            (3.0 * lhat + 1.0) * c * (p.matrix() - q.matrix()).norm();

        const MatrixSliceMap tp = matrix_slice_map(sigma, mu, p);
        const MatrixSliceMap tq = matrix_slice_map(sigma, mu, q);
        const double lhs = std::sqrt(weighted_map_gap_sq(
            sigma, [&](const Eigen::VectorXd& x) { return tp(x); },
            [&](const Eigen::VectorXd& x) { return tq(x); }));
        CHECK(lhs <= bound);
        if (bound > 0.0) worst_ratio = std::max(worst_ratio, lhs / bound);
        ++trials;
    }
    MESSAGE("largest observed gap/bound ratio: ", worst_ratio);
}

TEST_CASE("one operator step lands within twice the best scale-shift fit") {
    Rng rng(409);
    for (int t = 0; t < 20; ++t) {
        const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 8, 1.2);
        // Target: a scale-shift image distorted by a mild compatible map.
        const double a = 0.5 + rng.uniform01();
        const Eigen::VectorXd b = random_vector(rng, 2);
        const double eps = (t % 2 == 0) ? 0.01 : 0.1;
        const OrthoMatrix frame = sample_haar_orthogonal(rng, 2);
        const CompatibleMap wiggle = random_compatible(rng, frame);
        const DiscreteMeasure mu = pushforward(sigma, [&](const Eigen::VectorXd& x) {
            const Eigen::VectorXd base = a * x + b;
            return (base + eps * (wiggle(base) - base).cwiseMin(1.0).cwiseMax(-1.0)).eval();
        });
        const OrthoMatrix p = sample_haar_orthogonal(rng, 2);
        const double best = std::sqrt(register_scale_shift(sigma, mu).objective);
        CHECK(w2_exact(apply_operator(sigma, mu, p), mu) <= 2.0 * best + 1e-9);
    }
}

TEST_CASE("step schedules validate their parameters and parse from text") {
    CHECK_THROWS_AS(StepSchedule(StepSchedule::Kind::constant, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule(StepSchedule::Kind::constant, 1.5, 4), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule(StepSchedule::Kind::harmonic, -0.1, 4), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule(StepSchedule::Kind::constant, 0.5, -1), std::invalid_argument);

    const StepSchedule c = StepSchedule::parse("const:0.5", 9);
    CHECK(c.kind() == StepSchedule::Kind::constant);
    CHECK(c.gamma(0) == 0.5);
    CHECK(c.gamma(7) == 0.5);
    CHECK(c.max_steps() == 9);

    const StepSchedule h = StepSchedule::parse("harmonic:1.0", 3);
    CHECK(h.gamma(0) == 1.0);
    CHECK(h.gamma(1) == 0.5);
    CHECK(h.gamma(3) == 0.25);

    CHECK_THROWS_AS(StepSchedule::parse("const", 1), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::parse("const:", 1), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::parse("const:0.5x", 1), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::parse("linear:0.5", 1), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::parse("harmonic:2.0", 1), std::invalid_argument);
}

TEST_CASE("iteration stops immediately when the target is already matched") {
    Rng rng(419);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 7);
    IterateOptions opt;
    opt.seed = 42;
    const IterateResult res = iterate(sigma, sigma, StepSchedule::parse("const:1.0", 10), opt);
    REQUIRE(res.trace.entries.size() == 1);
    CHECK(res.trace.entries[0].k == 0);
    CHECK(res.trace.entries[0].sliced_residual == 0.0);
    CHECK((res.final.points() - sigma.points()).norm() == 0.0);
}

TEST_CASE("a full matrix step recovers an affine target") {
    Rng rng(421);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 3, 9);
    const Eigen::VectorXd b = random_vector(rng, 3);
    const DiscreteMeasure mu = pushforward(sigma, affine(1.7, b));
    IterateOptions opt;
    opt.seed = 7;
    opt.record_w2 = true;
    const IterateResult res = iterate(sigma, mu, StepSchedule::parse("const:1.0", 10), opt);
    REQUIRE(res.trace.entries.size() == 2);
    CHECK(res.trace.entries[1].sliced_residual < 1e-10);
    CHECK(w2_exact(res.final, mu) < 1e-9);
    REQUIRE(res.trace.entries[0].w2_exact.has_value());
    CHECK(*res.trace.entries[0].w2_exact == doctest::Approx(w2_exact(sigma, mu)).epsilon(1e-12));
}

TEST_CASE("iteration traces record the schedule, seeds, and moments") {
    Rng rng(431);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 8);
    const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 8, 1.4, 1.0);
    IterateOptions opt;
    opt.seed = 99;
    opt.tol = 0.0;
    const StepSchedule sched = StepSchedule::parse("harmonic:0.8", 5);
    const IterateResult res = iterate(sigma, mu, sched, opt);
    REQUIRE(res.trace.entries.size() == 6);
    const Rng root(99);
    for (int k = 0; k < 6; ++k) {
        const TraceEntry& e = res.trace.entries[static_cast<std::size_t>(k)];
        CHECK(e.k == k);
        CHECK(e.gamma == sched.gamma(k));
        CHECK(e.step_seed == root.fork_seed(static_cast<std::uint64_t>(k)));
        CHECK(e.sliced_residual >= 0.0);
        CHECK_FALSE(e.w2_exact.has_value());
    }
    CHECK(res.trace.entries[0].mean.isApprox(moments(sigma).mean, 1e-14));
    CHECK(res.trace.entries[0].m2 == doctest::Approx(moments(sigma).second_moment));

    // Identical options replay to an identical trajectory.
    const IterateResult rerun = iterate(sigma, mu, sched, opt);
    CHECK((rerun.final.points() - res.final.points()).norm() == 0.0);
}

TEST_CASE("trace serialization emits one complete json object per step") {
    Rng rng(433);
    const DiscreteMeasure sigma = oracle::random_cloud(rng, 2, 6);
    const DiscreteMeasure mu = oracle::random_cloud(rng, 2, 6, 1.2, 0.4);
    IterateOptions opt;
    opt.seed = 5;
    opt.tol = 0.0;
    opt.record_w2 = true;
    const IterateResult res = iterate(sigma, mu, StepSchedule::parse("const:0.7", 3), opt);

    std::ostringstream os;
    res.trace.write_jsonl(os);
    std::istringstream is(os.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        const nlohmann::json obj = nlohmann::json::parse(line);
        CHECK(obj.at("k").get<int>() == static_cast<int>(rows));
        CHECK(obj.at("gamma").get<double>() == doctest::Approx(0.7));
        CHECK(obj.at("sliced_residual").get<double>() >= 0.0);
        CHECK(obj.at("mean").size() == 2);
        CHECK(obj.at("m2").get<double>() > 0.0);
        CHECK(obj.at("w2_exact").is_number());
        CHECK(obj.at("seed").get<std::uint64_t>() ==
              res.trace.entries[rows].step_seed);
        ++rows;
    }
    CHECK(rows == res.trace.entries.size());
}

TEST_CASE("single-slice steps shrink a shift at the expected rate") {
    // For a pure shift target, each single-slice step with gamma = 1 removes
    // the component of the remaining shift along the sampled direction, so
    // E ||b_k||^2 = (1 - 1/n)^k ||b_0||^2.
    Rng seeds(437);
    const int runs = 4000;
    const int kmax = 4;
    const int n = 2;

    Eigen::MatrixXd pts(n, 4);
    pts << 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.5, -0.5;
    const DiscreteMeasure sigma = DiscreteMeasure::uniform(pts);
    const Eigen::VectorXd b0 = Eigen::Vector2d(1.0, -2.0);
    const DiscreteMeasure mu = pushforward(sigma, shift_by(b0));

    StepSchedule sched = StepSchedule::parse("const:1.0", kmax);
    std::vector<double> sums(static_cast<std::size_t>(kmax) + 1, 0.0);
    const Eigen::VectorXd target_mean = moments(mu).mean;
    for (int r = 0; r < runs; ++r) {
        IterateOptions opt;
        opt.sampler = SamplerKind::single;
        opt.seed = seeds.next_u64();
        opt.tol = 0.0;
        const IterateResult res = iterate(sigma, mu, sched, opt);
        REQUIRE(res.trace.entries.size() == static_cast<std::size_t>(kmax) + 1);
        for (int k = 0; k <= kmax; ++k) {
            const double bk =
                (target_mean - res.trace.entries[static_cast<std::size_t>(k)].mean).squaredNorm();
            sums[static_cast<std::size_t>(k)] += bk / b0.squaredNorm();
        }
    }
    for (int k = 0; k <= kmax; ++k) {
        const double mean = sums[static_cast<std::size_t>(k)] / runs;
        const double want = std::pow(1.0 - 1.0 / n, k);
        CHECK(std::abs(mean - want) <= 0.10 * want);
    }
}
