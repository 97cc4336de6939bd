#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include <mtps/cartpole.hpp>
#include <mtps/cost.hpp>
#include <mtps/errors.hpp>
#include <mtps/moment_chain.hpp>

#include "instances.hpp"
#include "oracles.hpp"

using namespace mtps;

namespace {

    using oracle::gh_converged;
    using oracle::linear_cost;

    SaturatingCost angle_cost(std::mt19937_64& rng)
    {
        SaturatingCost c;
        c.angles = {1};
        c.feature_map = oracle::randm(rng, 2, 6, 0.7);
        c.offset = oracle::randn(rng, 2, 0.3);
        c.q = oracle::random_spd(rng, 2, 3.0);
        return c;
    }

    Vec value_vec(const ExpectedCost& e) { return Vec::Constant(1, e.value); }

} // namespace

TEST_CASE("immediate cost is zero at the target and saturates far away")
{
    std::mt19937_64 rng(1);
    SaturatingCost c = linear_cost(rng, 2);
    const Vec target = c.feature_map.partialPivLu().solve(-c.offset);
    CHECK(std::abs(immediate(c, target)) <= 1e-14);
    CHECK(immediate(c, Vec::Constant(2, 1e4)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cart-pole cost is zero upright at the target")
{
    const CartPoleParams p;
    const SaturatingCost c = cartpole::cost(p, 0.3);
    Vec x(4);
    x << 0.3, 0.0, M_PI, 0.0;
    CHECK(std::abs(immediate(c, x)) <= 1e-14);
    x(cartpole::phi) = 3.0 * M_PI;
    CHECK(std::abs(immediate(c, x)) <= 1e-12);
    x(cartpole::phi) = 0.0;
    CHECK(immediate(c, x) > 0.9);
}

TEST_CASE("cart-pole cost with a 0.2 m cart offset")
{
    const CartPoleParams p;
    const SaturatingCost c = cartpole::cost(p, 0.0);
    Vec x(4);
    x << 0.2, 0.0, M_PI, 0.0;
    const double v = immediate(c, x);
    CHECK(v >= 0.25);
    CHECK(v <= 0.45);
}

TEST_CASE("zero covariance reduces to the immediate cost")
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const SaturatingCost c = rep % 2 ? angle_cost(rng) : linear_cost(rng, 4);
        const Vec m = oracle::randn(rng, 4);
        CHECK(std::abs(expected(c, m, Mat::Zero(4, 4)).value - immediate(c, m)) <= 1e-12);
    }
}

TEST_CASE("one-dimensional closed form")
{
    const double a = 8.0;
    SaturatingCost c;
    c.feature_map = Mat::Identity(1, 1);
    c.offset = Vec::Constant(1, -0.4);
    c.q = Mat::Constant(1, 1, 2.0 * a);
    for (double s : {0.0, 0.01, 0.1, 1.0}) {
        const double v = expected(c, Vec::Constant(1, 0.4), Mat::Constant(1, 1, s)).value;
        CHECK(v == doctest::Approx(1.0 - 1.0 / std::sqrt(1.0 + 2.0 * a * s)).epsilon(1e-13));
    }
    CHECK(expected(c, Vec::Constant(1, 0.4), Mat::Constant(1, 1, 1e14)).value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("expected cost matches Gauss-Hermite quadrature")
{
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index d = rep % 2 ? 2 : 1;
        const SaturatingCost c = linear_cost(rng, d);
        const Vec m = oracle::randn(rng, d, 0.7);
        const Mat s = oracle::random_spd(rng, d, 0.3);
        const double closed = expected(c, m, s).value;
        const double quad = gh_converged([&](const Vec& x) { return immediate(c, x); }, m, s);
        worst = std::max(worst, std::abs(closed - quad));
        CHECK(std::abs(closed - quad) <= 1e-8);
    }
    MESSAGE("largest quadrature gap " << worst);
}

TEST_CASE("expected-cost gradients match finite differences")
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 40; ++rep) {
        const bool trig = rep % 4 == 3;
        const Eigen::Index d = trig ? 4 : (rep % 2 ? 2 : 1);
        const SaturatingCost c = trig ? angle_cost(rng) : linear_cost(rng, d);
        const Vec m = oracle::randn(rng, d, 0.7);
        const Mat s = oracle::random_spd(rng, d, 0.3);
        const ExpectedCost e = expected(c, m, s);
        const Mat fd_m = oracle::fd_jacobian([&](const Vec& mm) { return value_vec(expected(c, mm, s)); }, m);
        const Mat fd_s = oracle::fd_jacobian_sym([&](const Mat& ss) { return value_vec(expected(c, m, ss)); }, s);
        CHECK(oracle::grad_close(e.d_mean.transpose(), fd_m, 1e-5, 1e-9));
        CHECK(oracle::grad_close(symmetric_gradient(e.d_cov).transpose(), fd_s, 1e-5, 1e-9));
        CHECK((e.d_cov - e.d_cov.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("expected cost stays in the unit interval")
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        const SaturatingCost c = rep % 2 ? angle_cost(rng) : linear_cost(rng, 4);
        const double v = expected(c, oracle::randn(rng, 4, 2.0), oracle::random_spd(rng, 4, std::pow(10.0, rep % 5 - 2))).value;
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("expected cost at the target is nondecreasing in the variance")
{
    SaturatingCost c;
    c.feature_map = Mat::Identity(1, 1);
    c.offset = Vec::Zero(1);
    c.q = Mat::Constant(1, 1, 16.0);
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const double s = std::pow(10.0, -6.0 + 0.05 * i);
        const double v = expected(c, Vec::Zero(1), Mat::Constant(1, 1, s)).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("singular feature covariance is reported")
{
    CHECK_THROWS_AS(expected_on_features(Mat::Identity(1, 1), Vec::Zero(1), Mat::Constant(1, 1, -1.0)), NumericalDegeneracy);
}
