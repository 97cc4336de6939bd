#ifndef MTPS_TRIG_MOMENTS_HPP
#define MTPS_TRIG_MOMENTS_HPP

#include <vector>

#include <mtps/moment_chain.hpp>

namespace mtps {

    /// coef * sin(freq^T x) or coef * cos(freq^T x)
    struct TrigTerm {
        double coef = 1.0;
        bool is_cos = false;
        Vec freq;
    };

    /// Outputs that are finite sums of sinusoids of linear forms of the input.
    /// Gaussian moments of such outputs are exact:
    ///   E[cos(a^T x)] = exp(-a^T S a / 2) cos(a^T m),  E[sin(a^T x)] = exp(-a^T S a / 2) sin(a^T m)
    /// products reduce to single sinusoids, and cov(x, y) = S E[grad y] (Stein's lemma).
    class TrigSumBlock : public MomentBlock {
    public:
        TrigSumBlock(Eigen::Index input_dim, std::vector<std::vector<TrigTerm>> outputs);

        /// [sin x_0, cos x_0, sin x_1, cos x_1, ...] for an input made of angles only.
        static TrigSumBlock sin_cos(Eigen::Index angle_count);

        /// u_k = u_max_k * (9 sin(v_k / u_max_k) + sin(3 v_k / u_max_k)) / 8
        static TrigSumBlock sine_squash(const Vec& u_max);

        Eigen::Index input_dim() const override { return _input_dim; }
        Eigen::Index output_dim() const override { return static_cast<Eigen::Index>(_outputs.size()); }

        BlockMoments forward(const Vec& m, const Mat& s) const override;
        void backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
            Vec& m_bar, Mat& s_bar, Vec* param_bar) const override;

        /// Pointwise evaluation.
        Vec evaluate(const Vec& x) const;

    private:
        Eigen::Index _input_dim;
        std::vector<std::vector<TrigTerm>> _outputs;
    };

    /// u_max * (9 sin(v / u_max) + sin(3 v / u_max)) / 8, elementwise.
    Vec sine_squash(const Vec& v, const Vec& u_max);

} // namespace mtps

#endif
