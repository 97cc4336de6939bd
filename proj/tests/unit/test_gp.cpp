#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include <mtps/errors.hpp>
#include <mtps/gp.hpp>

#include "oracles.hpp"

using namespace mtps;

namespace {

    // Independent dense implementation: explicit kernel loops, LU inverse and determinant.
    Mat dense_gram(const Mat& x, const GpHyper& h)
    {
        const Eigen::Index n = x.rows();
        Mat k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                double q = 0.0;
                for (Eigen::Index c = 0; c < x.cols(); ++c) {
                    const double l = std::exp(h.log_lengthscales(c));
                    q += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c)) / (l * l);
                }
                k(i, j) = std::exp(2 * h.log_signal_sd) * std::exp(-0.5 * q);
            }
        return k;
    }

    double dense_lml(const Mat& x, const Vec& y, const GpHyper& h)
    {
        Mat k = dense_gram(x, h);
        k.diagonal().array() += std::exp(2 * h.log_noise_sd);
        Eigen::FullPivLU<Mat> lu(k);
        return -0.5 * y.dot(lu.inverse() * y) - 0.5 * std::log(lu.determinant()) - 0.5 * y.size() * std::log(2 * std::numbers::pi);
    }

    GpHyper random_hyper(std::mt19937_64& rng, Eigen::Index e)
    {
        GpHyper h;
        h.log_lengthscales = oracle::randn(rng, e, 0.3);
        h.log_signal_sd = oracle::uniform(rng, -0.5, 0.5);
        h.log_noise_sd = oracle::uniform(rng, -2.5, -1.0);
        return h;
    }

} // namespace

TEST_CASE("log marginal likelihood of a single observation")
{
    GpHyper h;
    h.log_lengthscales = Vec::Zero(1);
    h.log_signal_sd = 0.0;
    h.log_noise_sd = 0.0;
    const double v = log_marginal_likelihood(Mat::Zero(1, 1), Vec::Zero(1), h);
    CHECK(v == doctest::Approx(-0.5 * std::log(2.0) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("log marginal likelihood matches a dense oracle")
{
    std::mt19937_64 rng(20);
    for (int k = 0; k < 10; ++k) {
        const Mat x = oracle::randm(rng, 5, 3);
        const Vec y = oracle::randn(rng, 5);
        const GpHyper h = random_hyper(rng, 3);
        CHECK(std::abs(log_marginal_likelihood(x, y, h) - dense_lml(x, y, h)) <= 1e-10);
    }
}

TEST_CASE("log marginal likelihood gradient matches finite differences")
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 10; ++k) {
        const Mat x = oracle::randm(rng, 10, 2);
        const Vec y = oracle::randn(rng, 10);
        const GpHyper h = random_hyper(rng, 2);
        Vec g;
        log_marginal_likelihood(x, y, h, &g);
        const Mat fd = oracle::fd_jacobian(
            [&](const Vec& p) { return Vec::Constant(1, log_marginal_likelihood(x, y, GpHyper::unpack(p))); }, h.pack());
        CHECK(oracle::max_rel_err(g.transpose(), fd, 1e-3) <= 1e-5);
    }
}

TEST_CASE("fit recovers a noiseless linear function")
{
    std::mt19937_64 rng(22);
    const Mat x = oracle::randm(rng, 30, 2);
    const Vec w = Eigen::Vector2d(0.7, -0.4);
    const Mat y = x * w;
    GpFitOptions opts;
    opts.seed = 5;
    opts.curb = false; // plain likelihood maximization; the barrier would cap the signal-to-noise ratio
    const GpModel model = fit(x, y, opts);
    const Mat xt = oracle::randm(rng, 50, 2, 0.5);
    double se = 0.0;
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        const double err = model.predict_point(xt.row(i).transpose()).mean()(0) - xt.row(i).dot(w);
        se += err * err;
    }
    CHECK(std::sqrt(se / xt.rows()) <= 1e-3);
    CHECK(model.noise_var()(0) <= 1e-4);
}

TEST_CASE("fit with two points interpolates")
{
    Mat x(2, 1);
    x << 0.0, 1.0;
    Mat y(2, 1);
    y << 0.5, -0.3;
    const GpModel model = fit(x, y, GpFitOptions{});
    for (int i = 0; i < 2; ++i) {
        const double sn = std::sqrt(model.noise_var()(0));
        CHECK(std::abs(model.predict_point(x.row(i).transpose()).mean()(0) - y(i, 0)) <= 3 * sn + 1e-9);
    }
    CHECK_THROWS_AS(fit(Mat::Zero(1, 1), Mat::Zero(1, 1), GpFitOptions{}), InvalidInput);
}

TEST_CASE("fit identifies noise from duplicated inputs")
{
    std::mt19937_64 rng(23);
    const int groups = 15;
    const int reps = 4;
    Mat x(groups * reps, 1);
    Mat y(groups * reps, 1);
    double within = 0.0;
    for (int g = 0; g < groups; ++g) {
        const double xi = -3.0 + 6.0 * g / (groups - 1);
        const Vec noise = oracle::randn(rng, reps, 0.2);
        const double nm = noise.mean();
        within += (noise.array() - nm).square().sum();
        for (int r = 0; r < reps; ++r) {
            x(g * reps + r, 0) = xi;
            y(g * reps + r, 0) = std::sin(xi) + noise(r);
        }
    }
    const double sample_var = within / (groups * (reps - 1));
    GpFitOptions opts;
    opts.seed = 1;
    const GpModel model = fit(x, y, opts);
    CHECK(model.noise_var()(0) >= 0.5 * sample_var);
}

TEST_CASE("fit is deterministic given the seed")
{
    std::mt19937_64 rng(24);
    const Mat x = oracle::randm(rng, 20, 2);
    const Mat y = x.col(0).array().sin().matrix();
    GpFitOptions opts;
    opts.seed = 9;
    const GpModel a = fit(x, y, opts);
    const GpModel b = fit(x, y, opts);
    CHECK(a.hyper()[0].pack() == b.hyper()[0].pack());
}

TEST_CASE("curbed fit keeps lengthscales and signal-to-noise bounded")
{
    std::mt19937_64 rng(30);
    const Mat x = oracle::randm(rng, 30, 2);
    const Mat y = x * Vec(Eigen::Vector2d(0.7, -0.4));
    GpFitOptions opts;
    opts.curb = true;
    const GpModel m = fit(x, y, opts);
    const GpHyper& h = m.hyper()[0];
    CHECK(h.log_signal_sd - h.log_noise_sd <= std::log(500.0) * 1.1);
}

TEST_CASE("predict_point matches hand-computed kernel algebra")
{
    Mat x(3, 1);
    x << -1.0, 0.0, 1.5;
    Mat y(3, 1);
    y << 0.2, -0.1, 0.4;
    GpHyper h;
    h.log_lengthscales = Vec::Constant(1, std::log(0.8));
    h.log_signal_sd = std::log(1.3);
    h.log_noise_sd = std::log(0.1);
    const GpModel model(x, y, {h});

    const double z = 0.4;
    Mat k(3, 3);
    Vec ks(3);
    for (int i = 0; i < 3; ++i) {
        ks(i) = 1.69 * std::exp(-0.5 * (x(i, 0) - z) * (x(i, 0) - z) / 0.64);
        for (int j = 0; j < 3; ++j)
            k(i, j) = 1.69 * std::exp(-0.5 * (x(i, 0) - x(j, 0)) * (x(i, 0) - x(j, 0)) / 0.64) + (i == j ? 0.01 : 0.0);
    }
    const Mat kinv = k.inverse();
    const double mean = ks.dot(kinv * y.col(0));
    const double var = 1.69 - ks.dot(kinv * ks) + 0.01;
    const GaussianDist p = model.predict_point(Vec::Constant(1, z));
    CHECK(std::abs(p.mean()(0) - mean) <= 1e-10);
    CHECK(std::abs(p.cov()(0, 0) - var) <= 1e-10);
}

TEST_CASE("predictions at training inputs and far away")
{
    std::mt19937_64 rng(25);
    const Mat x = oracle::randm(rng, 8, 2);
    const Mat y = oracle::randm(rng, 8, 2);
    std::vector<GpHyper> hs;
    for (int a = 0; a < 2; ++a) {
        GpHyper h;
        h.log_lengthscales = Vec::Constant(2, std::log(0.3));
        h.log_signal_sd = std::log(1.0);
        h.log_noise_sd = std::log(1e-3);
        hs.push_back(h);
    }
    const GpModel model(x, y, hs);
    for (int i = 0; i < 8; ++i) {
        const GaussianDist p = model.predict_point(x.row(i).transpose());
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(p.mean()(a) - y(i, a)) <= 3e-3);
        CHECK(p.cov()(0, 1) == 0.0);
    }
    const GaussianDist far = model.predict_point(Vec::Constant(2, 100.0));
    CHECK(far.mean().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(far.cov()(0, 0) == doctest::Approx(1.0 + 1e-6).epsilon(0.01));

    for (int a = 0; a < 2; ++a) {
        const Vec r = model.solve(a, y.col(a));
        Mat k = dense_gram(x, hs[a]);
        k.diagonal().array() += hs[a].noise_var();
        CHECK((k * model.expansion().weights.col(a) - y.col(a)).norm() <= 1e-8 * y.col(a).norm());
        CHECK((r - model.expansion().weights.col(a)).norm() <= 1e-8 * r.norm());
    }
}

TEST_CASE("predictive variance never drops below the noise variance")
{
    std::mt19937_64 rng(26);
    for (int k = 0; k < 10; ++k) {
        const Mat x = oracle::randm(rng, 12, 2);
        const Mat y = oracle::randm(rng, 12, 1);
        const GpHyper h = random_hyper(rng, 2);
        const GpModel model(x, y, {h});
        for (int t = 0; t < 50; ++t) {
            const Vec z = oracle::randn(rng, 2, 1.5);
            CHECK(model.predict_point(z).cov()(0, 0) >= h.noise_var() - 1e-9);
        }
    }
}

TEST_CASE("a new far-away datum barely moves predictions")
{
    std::mt19937_64 rng(27);
    const Mat x = oracle::randm(rng, 10, 1);
    const Mat y = oracle::randm(rng, 10, 1);
    GpHyper h;
    h.log_lengthscales = Vec::Zero(1);
    h.log_signal_sd = 0.0;
    h.log_noise_sd = std::log(0.1);
    const GpModel a(x, y, {h});
    Mat x2(11, 1);
    x2 << x, Mat::Constant(1, 1, 15.0);
    Mat y2(11, 1);
    y2 << y, Mat::Constant(1, 1, 0.8);
    const GpModel b(x2, y2, {h});
    for (double z = -2.0; z <= 2.0; z += 0.25) {
        const double da = a.predict_point(Vec::Constant(1, z)).mean()(0);
        const double db = b.predict_point(Vec::Constant(1, z)).mean()(0);
        CHECK(std::abs(da - db) <= 1e-3);
    }
}

TEST_CASE("model serialization round-trips bit-exactly")
{
    std::mt19937_64 rng(28);
    const Mat x = oracle::randm(rng, 6, 3);
    const Mat y = oracle::randm(rng, 6, 2);
    FeatureMap map;
    map.plain = {0, 1};
    map.angles = {2};
    const GpModel a(x, y, {random_hyper(rng, 3), random_hyper(rng, 3)}, map);
    const json j = model_to_json(a);
    const GpModel b = model_from_json(json::parse(j.dump()));
    CHECK(b.inputs() == a.inputs());
    CHECK(b.targets() == a.targets());
    for (int d = 0; d < 2; ++d)
        CHECK(b.hyper()[d].pack() == a.hyper()[d].pack());
    CHECK(b.input_map().angles == map.angles);
    CHECK(model_to_json(b).dump() == j.dump());

    json broken = j;
    broken.erase("hyper");
    CHECK_THROWS_AS(model_from_json(broken), LoadError);
    json wrong = j;
    wrong["format_version"] = 99;
    CHECK_THROWS_AS(model_from_json(wrong), LoadError);
}

TEST_CASE("dataset accumulates deltas")
{
    TransitionDataset d;
    d.append(Eigen::Vector2d(1, 2), Vec::Constant(1, 0.5), Eigen::Vector2d(1.5, 1.0));
    CHECK(d.size() == 1);
    CHECK(d.targets.row(0).transpose() == Eigen::Vector2d(0.5, -1.0));
    d.validate();
    FeatureMap map;
    map.plain = {0, 2};
    map.angles = {1};
    const Mat z = model_inputs(d, map);
    CHECK(z(0, 0) == 1.0);
    CHECK(z(0, 1) == 0.5);
    CHECK(z(0, 2) == std::sin(2.0));
    CHECK(z(0, 3) == std::cos(2.0));
}
