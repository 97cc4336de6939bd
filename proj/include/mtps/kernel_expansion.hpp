#ifndef MTPS_KERNEL_EXPANSION_HPP
#define MTPS_KERNEL_EXPANSION_HPP

#include <vector>

#include <mtps/moment_chain.hpp>

namespace mtps {

    /// f_a(x) = sum_i w_ia * sf2_a * exp(-(x - c_i)^T Lambda_a^{-1} (x - c_i) / 2)
    ///
    /// With `inv_k` filled this is the predictive mean of an SE-ARD GP (w = beta) and the
    /// moments include the GP predictive variance (model uncertainty plus noise); with
    /// `inv_k` empty it is a deterministic RBF expansion.
    struct KernelExpansion {
        Mat centers; ///< n x E
        Mat weights; ///< n x D
        Mat log_lengthscales; ///< D x E
        Vec signal_var; ///< D
        Vec noise_var; ///< D, ignored when deterministic
        std::vector<Mat> inv_k; ///< per output (K + sn2 I)^{-1}

        Eigen::Index input_dim() const { return centers.cols(); }
        Eigen::Index output_dim() const { return weights.cols(); }
        bool deterministic() const { return inv_k.empty(); }
    };

    struct ExpansionAdjoint {
        Mat centers;
        Mat weights;
        Mat log_lengthscales;
    };

    /// Exact mean, covariance and cross-covariance factor for x ~ N(m, S).
    /// Throws NumericalDegeneracy if S + Lambda_a or S Psi + I cannot be factorized.
    BlockMoments expansion_moments(const KernelExpansion& fn, const Vec& m, const Mat& s);

    /// Reverse pass of expansion_moments; `adj` (optional) receives parameter adjoints.
    void expansion_backward(const KernelExpansion& fn, const Vec& m, const Mat& s, const BlockMoments& out,
        const BlockAdjoint& bar, Vec& m_bar, Mat& s_bar, ExpansionAdjoint* adj);

    /// Pointwise mean and (for GP expansions) predictive variance per output.
    void expansion_point(const KernelExpansion& fn, const Vec& x, Vec& mean, Vec* var);

    /// MomentBlock adapter over a KernelExpansion held by reference (no parameter adjoints).
    class ExpansionBlock : public MomentBlock {
    public:
        explicit ExpansionBlock(const KernelExpansion& fn) : _fn(fn) {}

        Eigen::Index input_dim() const override { return _fn.input_dim(); }
        Eigen::Index output_dim() const override { return _fn.output_dim(); }

        BlockMoments forward(const Vec& m, const Mat& s) const override { return expansion_moments(_fn, m, s); }
        void backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
            Vec& m_bar, Mat& s_bar, Vec*) const override
        {
            expansion_backward(_fn, m, s, out, bar, m_bar, s_bar, nullptr);
        }

    private:
        const KernelExpansion& _fn;
    };

} // namespace mtps

#endif
