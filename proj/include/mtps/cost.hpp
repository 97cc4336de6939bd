#ifndef MTPS_COST_HPP
#define MTPS_COST_HPP

#include <vector>

#include <mtps/gaussian.hpp>

namespace mtps {

    /// c(x) = 1 - exp(-d(x)^T Q d(x) / 2) with d(x) = C [x; sin x_a0; cos x_a0; ...] + offset.
    struct SaturatingCost {
        std::vector<int> angles; ///< state components entering through (sin, cos)
        Mat feature_map; ///< K x (D + 2 |angles|)
        Vec offset; ///< K
        Mat q; ///< K x K, PSD

        Eigen::Index state_dim() const { return feature_map.cols() - 2 * static_cast<Eigen::Index>(angles.size()); }
        Vec features(const Vec& x) const;
        /// Throws InvalidInput on inconsistent shapes or a non-PSD weight.
        void validate() const;
    };

    double immediate(const SaturatingCost& cost, const Vec& x);

    struct ExpectedCost {
        double value = 0.0;
        Vec d_mean;
        /// Symmetric adjoint G: the derivative along a symmetric perturbation E is <G, E>.
        Mat d_cov;
    };

    /// Closed-form E[c(x)] for x ~ N(mean, cov), with gradients.
    /// Throws NumericalDegeneracy if I + Sigma_d Q is singular.
    ExpectedCost expected(const SaturatingCost& cost, const GaussianDist& state);
    ExpectedCost expected(const SaturatingCost& cost, const Vec& mean, const Mat& cov);

    /// Saturating cost on the feature moments directly: 1 - |I + S Q|^{-1/2} exp(-r^T Q (I + S Q)^{-1} r / 2).
    ExpectedCost expected_on_features(const Mat& q, const Vec& r, const Mat& s);

} // namespace mtps

#endif
