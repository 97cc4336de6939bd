#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <mtps/errors.hpp>
#include <mtps/optimizer.hpp>

#include "oracles.hpp"

using namespace mtps;

namespace {

    double rosenbrock(const Vec& x, Vec& g)
    {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    }

    void check_monotone(const MinimizeResult& r)
    {
        for (std::size_t i = 1; i < r.trace.size(); ++i)
            CHECK(r.trace[i].f < r.trace[i - 1].f);
    }

} // namespace

TEST_CASE("isotropic quadratic is solved exactly")
{
    std::mt19937_64 rng(1);
    const Vec c = oracle::randn(rng, 6);
    const Objective f = [&](const Vec& x, Vec& g) {
        g = x - c;
        return 0.5 * g.squaredNorm();
    };
    const MinimizeResult r = minimize(f, Vec::Zero(6));
    CHECK((r.x - c).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(static_cast<int>(r.trace.size()) - 1 <= 6 + 2);
    CHECK(r.converged);
}

TEST_CASE("ill-conditioned quadratic")
{
    std::mt19937_64 rng(2);
    const Mat a = oracle::random_spd(rng, 8, 1.0) + Vec::LinSpaced(8, 0.0, 50.0).asDiagonal().toDenseMatrix();
    const Vec c = oracle::randn(rng, 8);
    const Objective f = [&](const Vec& x, Vec& g) {
        const Vec d = x - c;
        g = a * d;
        return 0.5 * d.dot(g);
    };
    MinimizeOptions o;
    o.grad_tol = 1e-11;
    const MinimizeResult r = minimize(f, Vec::Zero(8), o);
    CHECK((r.x - c).cwiseAbs().maxCoeff() <= 1e-8);
    check_monotone(r);
}

TEST_CASE("Rosenbrock from the standard start")
{
    MinimizeOptions o;
    o.grad_tol = 1e-10;
    o.max_iters = 500;
    const Vec x0 = (Vec(2) << -1.2, 1.0).finished();
    const MinimizeResult r = minimize(rosenbrock, x0, o);
    CHECK(r.f <= 1e-8);
    CHECK((r.x - Vec::Ones(2)).norm() <= 1e-3);
    check_monotone(r);
}

TEST_CASE("limited-memory path solves Rosenbrock")
{
    MinimizeOptions o;
    o.grad_tol = 1e-10;
    o.max_iters = 1000;
    o.lbfgs_threshold = 1;
    const Vec x0 = (Vec(2) << -1.2, 1.0).finished();
    const MinimizeResult r = minimize(rosenbrock, x0, o);
    CHECK(r.f <= 1e-8);
    check_monotone(r);
}

TEST_CASE("a NaN cliff returns the best point with a warning")
{
    // Minimum at x = 2 lies beyond a cliff at x = 1.
    const Objective f = [](const Vec& x, Vec& g) {
        g = Vec::Constant(1, 2.0 * (x(0) - 2.0));
        if (x(0) > 1.0)
            return std::numeric_limits<double>::quiet_NaN();
        return (x(0) - 2.0) * (x(0) - 2.0);
    };
    const MinimizeResult r = minimize(f, Vec::Zero(1));
    CHECK(r.warning);
    CHECK(std::isfinite(r.f));
    CHECK(r.f <= 4.0);
    CHECK(r.x(0) <= 1.0);
    check_monotone(r);
}

TEST_CASE("non-finite start is an error")
{
    const Objective f = [](const Vec&, Vec& g) {
        g = Vec::Zero(1);
        return std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(minimize(f, Vec::Zero(1)), OptimizerError);
}

TEST_CASE("identical inputs give identical traces")
{
    const Vec x0 = (Vec(2) << -1.2, 1.0).finished();
    const MinimizeResult a = minimize(rosenbrock, x0);
    const MinimizeResult b = minimize(rosenbrock, x0);
    CHECK(trace_csv(a.trace) == trace_csv(b.trace));
    CHECK(a.x == b.x);
    CHECK(trace_csv(a.trace).rfind("iteration,f,grad_norm,evals\n", 0) == 0);
}

TEST_CASE("the result never exceeds the starting value")
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x0 = oracle::randn(rng, 2, 2.0);
        MinimizeOptions o;
        o.max_iters = 5;
        Vec g;
        const double f0 = rosenbrock(x0, g);
        CHECK(minimize(rosenbrock, x0, o).f <= f0);
    }
}
