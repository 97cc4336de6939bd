#include <mtps/cost.hpp>
#include <mtps/errors.hpp>
#include <mtps/moment_chain.hpp>
#include <mtps/trig_moments.hpp>

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace mtps {

    Vec SaturatingCost::features(const Vec& x) const
    {
        const Eigen::Index d = state_dim();
        if (x.size() != d)
            throw InvalidInput("cost: state has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(d));
        Vec aug(feature_map.cols());
        aug.head(d) = x;
        Eigen::Index k = d;
        for (int a : angles) {
            aug(k++) = std::sin(x(a));
            aug(k++) = std::cos(x(a));
        }
        return feature_map * aug + offset;
    }

    void SaturatingCost::validate() const
    {
        const Eigen::Index k = feature_map.rows();
        if (offset.size() != k || q.rows() != k || q.cols() != k)
            throw InvalidInput("cost: feature map, offset and weight disagree in shape");
        if (state_dim() < 1)
            throw InvalidInput("cost: feature map has too few columns");
        for (int a : angles)
            if (a < 0 || a >= state_dim())
                throw InvalidInput("cost: angle index out of range");
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(q), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
            throw InvalidInput("cost: weight matrix is not PSD");
    }

    double immediate(const SaturatingCost& cost, const Vec& x)
    {
        const Vec d = cost.features(x);
        return 1.0 - std::exp(-0.5 * d.dot(cost.q * d));
    }

    ExpectedCost expected_on_features(const Mat& q, const Vec& r, const Mat& s)
    {
        const Eigen::Index k = r.size();
        const Mat a = Mat::Identity(k, k) + s * q;
        const Eigen::PartialPivLU<Mat> lu(a);
        const double det = lu.determinant();
        if (!(det > 0.0) || !std::isfinite(det))
            throw NumericalDegeneracy("expected cost: I + Sigma Q is singular");
        // S1 = Q (I + S Q)^{-1}, symmetric for symmetric S and Q.
        const Mat s1 = symmetrize(q * lu.inverse());
        const Vec s1r = s1 * r;
        const double l = std::exp(-0.5 * r.dot(s1r)) / std::sqrt(det);

        ExpectedCost out;
        out.value = 1.0 - l;
        out.d_mean = l * s1r;
        out.d_cov = 0.5 * l * (s1 - s1r * s1r.transpose());
        return out;
    }

    ExpectedCost expected(const SaturatingCost& cost, const Vec& mean, const Mat& cov)
    {
        const Eigen::Index d = cost.state_dim();
        if (mean.size() != d || cov.rows() != d || cov.cols() != d)
            throw InvalidInput("expected cost: state has dimension " + std::to_string(mean.size()) + ", expected " + std::to_string(d));

        MomentChain chain(mean, cov);
        const TrigSumBlock trig = TrigSumBlock::sin_cos(static_cast<Eigen::Index>(cost.angles.size()));
        if (!cost.angles.empty())
            chain.append(trig, cost.angles);
        chain.affine(cost.feature_map, cost.offset, Mat::Zero(cost.offset.size(), cost.offset.size()));

        const ExpectedCost feat = expected_on_features(cost.q, chain.mean(), chain.cov());
        ExpectedCost out;
        out.value = feat.value;
        chain.backward(feat.d_mean, feat.d_cov, out.d_mean, out.d_cov, nullptr);
        return out;
    }

    ExpectedCost expected(const SaturatingCost& cost, const GaussianDist& state)
    {
        return expected(cost, state.mean(), state.cov());
    }

} // namespace mtps
