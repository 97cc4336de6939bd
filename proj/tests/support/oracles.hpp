#ifndef MTPS_TEST_ORACLES_HPP
#define MTPS_TEST_ORACLES_HPP

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace oracle {

    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;

    inline Vec randn(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0)
    {
        std::normal_distribution<double> d(0.0, sd);
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = d(rng);
        return v;
    }

    inline Mat randm(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0)
    {
        std::normal_distribution<double> d(0.0, sd);
        Mat m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i)
                m(i, j) = d(rng);
        return m;
    }

    inline double uniform(std::mt19937_64& rng, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    /// Random SPD matrix with eigenvalues roughly in scale * [0.2, 1.2].
    inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0)
    {
        const Mat a = randm(rng, n, n);
        Mat s = a * a.transpose() / static_cast<double>(n) + 0.2 * Mat::Identity(n, n);
        return scale * s;
    }

    /// Central differences of a vector-valued function.
    inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6)
    {
        const Vec f0 = f(x);
        Mat j(f0.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Vec xp = x;
            Vec xm = x;
            xp(i) += h;
            xm(i) -= h;
            j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
        }
        return j;
    }

    /// Central differences w.r.t. a symmetric matrix, perturbing S(i,j) and S(j,i) together.
    /// Column i + j n of the result.
    inline Mat fd_jacobian_sym(const std::function<Vec(const Mat&)>& f, const Mat& s, double h = 1e-6)
    {
        const Eigen::Index n = s.rows();
        const Vec f0 = f(s);
        Mat j(f0.size(), n * n);
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = 0; r < n; ++r) {
                Mat sp = s;
                Mat sm = s;
                sp(r, c) += h;
                sm(r, c) -= h;
                if (r != c) {
                    sp(c, r) += h;
                    sm(c, r) -= h;
                }
                j.col(r + c * n) = (f(sp) - f(sm)) / (2.0 * h);
            }
        return j;
    }

    /// max |a - b| / max(|b|, floor) elementwise.
    inline double max_rel_err(const Mat& a, const Mat& b, double floor)
    {
        double e = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                e = std::max(e, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
        return e;
    }

    /// Relative error where entries below `abs_tol` in both arrays count as agreeing.
    inline bool grad_close(const Mat& a, const Mat& b, double rel, double abs_tol)
    {
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                const double diff = std::abs(a(i, j) - b(i, j));
                if (diff <= abs_tol)
                    continue;
                if (diff > rel * std::max(std::abs(a(i, j)), std::abs(b(i, j))))
                    return false;
            }
        return true;
    }

    /// Monte-Carlo moments of y = f(x), x ~ N(m, S): mean, covariance, cross-covariance and their standard errors.
    struct McMoments {
        Vec mean, mean_se;
        Mat cov, cov_se;
        Mat cross, cross_se; // cov(x, y)
    };

    inline McMoments monte_carlo(const std::function<Vec(const Vec&)>& f, const Vec& m, const Mat& s, long samples,
        std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        const Eigen::Index e = m.size();
        Mat l = Mat::Zero(e, e);
        Eigen::LLT<Mat> llt(s);
        if (llt.info() == Eigen::Success)
            l = llt.matrixL();
        const Vec y0 = f(m);
        const Eigen::Index d = y0.size();

        Mat xs(e, samples);
        Mat ys(d, samples);
        std::normal_distribution<double> nd(0.0, 1.0);
        Vec z(e);
        for (long k = 0; k < samples; ++k) {
            for (Eigen::Index i = 0; i < e; ++i)
                z(i) = nd(rng);
            xs.col(k) = l * z;
            ys.col(k) = f(m + xs.col(k));
        }
        const double n = static_cast<double>(samples);
        McMoments r;
        r.mean = ys.rowwise().mean();
        const Vec mx = xs.rowwise().mean();
        ys.colwise() -= r.mean;
        xs.colwise() -= mx;
        r.mean_se = (ys.array().square().rowwise().sum() / (n * (n - 1.0))).sqrt().matrix();
        r.cov = ys * ys.transpose() / (n - 1.0);
        r.cross = xs * ys.transpose() / (n - 1.0);
        r.cov_se.resize(d, d);
        r.cross_se.resize(e, d);
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) {
                const Eigen::ArrayXd prod = ys.row(a).array() * ys.row(b).array();
                r.cov_se(a, b) = std::sqrt((prod - prod.mean()).square().sum() / (n - 1.0) / n);
            }
            for (Eigen::Index i = 0; i < e; ++i) {
                const Eigen::ArrayXd prod = xs.row(i).array() * ys.row(a).array();
                r.cross_se(i, a) = std::sqrt((prod - prod.mean()).square().sum() / (n - 1.0) / n);
            }
        }
        return r;
    }

    /// Gauss-Hermite nodes and weights for integrals against N(0, 1) (probabilists' convention).
    inline void gauss_hermite(int n, Vec& nodes, Vec& weights)
    {
        // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
        Mat j = Mat::Zero(n, n);
        for (int i = 1; i < n; ++i) {
            j(i, i - 1) = std::sqrt(static_cast<double>(i));
            j(i - 1, i) = j(i, i - 1);
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(j);
        nodes = es.eigenvalues();
        weights = es.eigenvectors().row(0).transpose().array().square();
    }

} // namespace oracle

#endif
