#ifndef MTPS_POLICY_HPP
#define MTPS_POLICY_HPP

#include <cstdint>

#include <mtps/gaussian.hpp>
#include <mtps/json_io.hpp>
#include <mtps/kernel_expansion.hpp>
#include <mtps/moment_chain.hpp>

namespace mtps {

    enum class PolicyKind { Affine, Rbf };

    struct PolicyShape {
        PolicyKind kind = PolicyKind::Rbf;
        Eigen::Index input_dim = 0;
        Eigen::Index output_dim = 1;
        Eigen::Index bases = 0; ///< RBF only
        Vec u_max;

        Eigen::Index param_count() const;
    };

    /// Deterministic controller u = squash(v(z)) over the augmented input z.
    ///
    /// Affine: v = A z + b, theta = [vec(A) (column-major); b].
    /// RBF:    v_f = sum_i w_if exp(-(z - c_i)^T Lambda^{-1} (z - c_i) / 2), Lambda = diag(exp(2 log_widths)),
    ///         theta = [vec(centers) (column-major, m x D_in); vec(weights) (m x F); log_widths].
    class Policy {
    public:
        Policy() = default;

        static Policy affine(Mat a, Vec b, Vec u_max);
        static Policy rbf(Mat centers, Mat weights, Vec log_widths, Vec u_max);

        const PolicyShape& shape() const { return _shape; }
        Eigen::Index input_dim() const { return _shape.input_dim; }
        Eigen::Index output_dim() const { return _shape.output_dim; }
        const Vec& u_max() const { return _shape.u_max; }

        const Mat& a() const { return _a; }
        const Vec& b() const { return _b; }
        const Mat& centers() const { return _fn.centers; }
        const Mat& weights() const { return _fn.weights; }
        const Vec& log_widths() const { return _log_widths; }

        Vec pack() const;
        /// Throws InvalidInput if theta has the wrong length.
        static Policy unpack(const Vec& theta, const PolicyShape& shape);

        /// 1 for parameters the weight penalty applies to (RBF weights, affine A), 0 otherwise.
        Vec penalty_mask() const;

        /// Pre-squash output v.
        Vec preliminary(const Vec& z) const;
        /// Saturated control.
        Vec eval(const Vec& z) const;

        /// The RBF network as a deterministic kernel expansion (unit signal variance).
        const KernelExpansion& expansion() const { return _fn; }

    private:
        PolicyShape _shape;
        Mat _a;
        Vec _b;
        Vec _log_widths;
        KernelExpansion _fn;
    };

    /// Pre-squash policy map as a moment block; parameter adjoints are reported in pack() order.
    class PolicyBlock : public MomentBlock {
    public:
        explicit PolicyBlock(const Policy& policy) : _policy(policy) {}

        Eigen::Index input_dim() const override { return _policy.input_dim(); }
        Eigen::Index output_dim() const override { return _policy.output_dim(); }
        Eigen::Index param_count() const override { return _policy.shape().param_count(); }

        BlockMoments forward(const Vec& m, const Mat& s) const override;
        void backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
            Vec& m_bar, Mat& s_bar, Vec* param_bar) const override;

    private:
        const Policy& _policy;
    };

    struct ControlPrediction {
        GaussianDist control;
        Mat cross; ///< cov(z, u), D_in x F
    };

    struct ControlPredictionGrads {
        ControlPrediction value;
        /// output_jacobians() layout: rows [mean; vec(cov); vec(cross)]; columns input moments and theta.
        MomentJacobians jac;
    };

    /// Moments of the saturated control under the augmented-input distribution.
    ControlPrediction predict_control(const Policy& policy, const AugmentedDist& aug);
    ControlPredictionGrads predict_control_with_grads(const Policy& policy, const AugmentedDist& aug);

    /// Distribution the RBF centers are drawn from.
    struct PolicyInitSpec {
        GaussianDist center_dist;
        double weight_scale = 0.1; ///< weights ~ N(0, (weight_scale u_max)^2)
    };

    /// Seeded random initialization: centers from init.center_dist, unit widths, small weights.
    /// Affine policies get A ~ N(0, 0.01^2) entries and b = 0.
    Policy init_random(const PolicyShape& shape, std::uint64_t seed, const PolicyInitSpec& init);

    json policy_to_json(const Policy& p);
    Policy policy_from_json(const json& j);

} // namespace mtps

#endif
