#include <doctest.h>

#include <cmath>
#include <random>

#include <mtps/moment_chain.hpp>
#include <mtps/trig_moments.hpp>

#include "oracles.hpp"

using namespace mtps;

namespace {

    Vec flatten(const BlockMoments& b, const Mat& s)
    {
        const Mat cross = s * b.cross_factor;
        Vec out(b.mean.size() + b.cov.size() + cross.size());
        out << b.mean, b.cov.reshaped(), cross.reshaped();
        return out;
    }

    void check_against_mc(const TrigSumBlock& block, const Vec& m, const Mat& s, std::uint64_t seed)
    {
        const BlockMoments b = block.forward(m, s);
        const oracle::McMoments mc = oracle::monte_carlo([&](const Vec& x) { return block.evaluate(x); }, m, s, 200000, seed);
        const Mat cross = s * b.cross_factor;
        for (Eigen::Index a = 0; a < b.mean.size(); ++a) {
            CHECK(std::abs(b.mean(a) - mc.mean(a)) <= 4.5 * mc.mean_se(a) + 1e-12);
            for (Eigen::Index c = 0; c < b.mean.size(); ++c)
                CHECK(std::abs(b.cov(a, c) - mc.cov(a, c)) <= 4.5 * mc.cov_se(a, c) + 1e-12);
            for (Eigen::Index i = 0; i < m.size(); ++i)
                CHECK(std::abs(cross(i, a) - mc.cross(i, a)) <= 4.5 * mc.cross_se(i, a) + 1e-12);
        }
    }

} // namespace

TEST_CASE("sin/cos moments agree with Monte-Carlo")
{
    std::mt19937_64 rng(10);
    for (int k = 0; k < 3; ++k) {
        const Eigen::Index n = 1 + k;
        check_against_mc(TrigSumBlock::sin_cos(n), oracle::randn(rng, n, 2.0), oracle::random_spd(rng, n, 0.5), 100 + k);
    }
}

TEST_CASE("sine squash moments agree with Monte-Carlo")
{
    std::mt19937_64 rng(11);
    const Vec umax = Vec::Constant(2, 10.0);
    check_against_mc(TrigSumBlock::sine_squash(umax), oracle::randn(rng, 2, 5.0), oracle::random_spd(rng, 2, 20.0), 7);
}

TEST_CASE("sine squash is bounded with unit-scaled slope 1.5 at the origin")
{
    const Vec umax = Vec::Constant(1, 10.0);
    for (double v = -1000.0; v <= 1000.0; v += 0.37)
        CHECK(std::abs(sine_squash(Vec::Constant(1, v), umax)(0)) <= 10.0);
    const double h = 1e-6;
    const double slope = (sine_squash(Vec::Constant(1, h), umax)(0) - sine_squash(Vec::Constant(1, -h), umax)(0)) / (2 * h);
    CHECK(slope == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(sine_squash(Vec::Constant(1, 10.0 * M_PI / 2), umax)(0) == doctest::Approx(10.0));
}

TEST_CASE("zero covariance reduces to pointwise evaluation")
{
    const TrigSumBlock b = TrigSumBlock::sin_cos(2);
    const Vec m = Eigen::Vector2d(0.3, -2.0);
    const BlockMoments out = b.forward(m, Mat::Zero(2, 2));
    CHECK((out.mean - b.evaluate(m)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(out.cov.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("trig block backward matches finite differences")
{
    std::mt19937_64 rng(12);
    for (int k = 0; k < 5; ++k) {
        const Eigen::Index n = 1 + k % 3;
        const TrigSumBlock block = (k % 2) ? TrigSumBlock::sin_cos(n) : TrigSumBlock::sine_squash(Vec::Constant(n, 3.0));
        const Vec m = oracle::randn(rng, n);
        const Mat s = oracle::random_spd(rng, n, 0.3);
        MomentChain chain(m, s);
        std::vector<int> idx(n);
        for (Eigen::Index i = 0; i < n; ++i)
            idx[i] = static_cast<int>(i);
        const Eigen::Index start = chain.append(block, idx);
        const MomentJacobians jac = output_jacobians(chain, n, start, block.output_dim(), 0);

        const Mat fd_m = oracle::fd_jacobian([&](const Vec& x) { return flatten(block.forward(x, s), s); }, m);
        const Mat fd_s = oracle::fd_jacobian_sym([&](const Mat& x) { return flatten(block.forward(m, x), x); }, s);
        CHECK(oracle::grad_close(jac.d_mean, fd_m, 1e-5, 1e-8));
        CHECK(oracle::grad_close(jac.d_cov, fd_s, 1e-5, 1e-8));
    }
}
