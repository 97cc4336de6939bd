#ifndef MTPS_MOMENT_CHAIN_HPP
#define MTPS_MOMENT_CHAIN_HPP

#include <memory>
#include <vector>

#include <mtps/gaussian.hpp>

namespace mtps {

    /// Moments of y = h(x) for Gaussian x ~ N(m, S).
    /// `cross_factor` V is defined by cov(x, y) = S V, which stays well defined for singular S.
    struct BlockMoments {
        Vec mean;
        Mat cov;
        Mat cross_factor;
    };

    /// Adjoints of the block outputs (dL/dmean, dL/dcov, dL/dV).
    struct BlockAdjoint {
        Vec mean;
        Mat cov;
        Mat cross_factor;
    };

    /// A nonlinear map with analytic Gaussian moments and a vector-Jacobian product.
    class MomentBlock {
    public:
        virtual ~MomentBlock() = default;

        virtual Eigen::Index input_dim() const = 0;
        virtual Eigen::Index output_dim() const = 0;
        /// Number of parameters the block reports adjoints for (0 if none).
        virtual Eigen::Index param_count() const { return 0; }

        virtual BlockMoments forward(const Vec& m, const Mat& s) const = 0;

        /// Accumulates dL/dm, dL/dS (symmetric) and, when `param_bar` is non-null, dL/dparams.
        /// `out` is the value previously returned by forward(m, s).
        virtual void backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
            Vec& m_bar, Mat& s_bar, Vec* param_bar) const = 0;
    };

    /// Joint Gaussian grown by affine maps and appended nonlinear blocks, with a reverse pass.
    ///
    /// append(block, idx):  joint <- [joint; y], y = block(joint[idx]),
    ///                      cov(joint, y) = S[:, idx] V
    /// affine(A, c, N):     joint <- A joint + c, cov <- A S A^T + N
    class MomentChain {
    public:
        MomentChain(Vec mean, Mat cov);

        const Vec& mean() const { return _mean; }
        const Mat& cov() const { return _cov; }
        Eigen::Index dim() const { return _mean.size(); }

        /// Returns the index of the first appended output.
        Eigen::Index append(const MomentBlock& block, const std::vector<int>& idx, Eigen::Index param_offset = -1);

        void affine(const Mat& a, const Vec& c, const Mat& added_cov);
        /// Keeps the listed components (a selection affine map).
        void select(const std::vector<int>& idx);

        /// Block moments recorded for the op with the given index (append ops only).
        const BlockMoments& block_output(std::size_t op) const { return _ops.at(op).out; }
        std::size_t op_count() const { return _ops.size(); }

        /// Reverse pass. Takes adjoints of the final joint; returns adjoints of the initial joint.
        /// Block parameter adjoints are accumulated into `param_bar` at each block's offset.
        void backward(const Vec& mean_bar, const Mat& cov_bar, Vec& init_mean_bar, Mat& init_cov_bar, Vec* param_bar) const;

    private:
        struct Op {
            const MomentBlock* block = nullptr; // null for affine ops
            std::vector<int> idx;
            Eigen::Index param_offset = -1;
            Mat a;
            Vec m_in;
            Mat s_in;
            Mat s_cols; // S[:, idx] of the input joint
            BlockMoments out;
        };

        Vec _mean;
        Mat _cov;
        std::vector<Op> _ops;
    };

    /// Jacobians of a slice of a chain's final joint w.r.t. the initial joint and block parameters.
    /// Rows: [mean (k); cov (k x k, column-major); cross with the first `n_in` components (n_in x k, column-major)].
    /// Covariance columns follow the symmetric-perturbation convention: column i + j n_in is the
    /// derivative w.r.t. moving S(i, j) and S(j, i) together.
    struct MomentJacobians {
        Mat d_mean;
        Mat d_cov;
        Mat d_param;
    };

    /// `out_start`, `k`: location of the outputs in the final joint. `param_count` may be 0.
    MomentJacobians output_jacobians(const MomentChain& chain, Eigen::Index n_in, Eigen::Index out_start, Eigen::Index k,
        Eigen::Index param_count);

    /// Turns a symmetric adjoint G into the symmetric-perturbation gradient (2 G off the diagonal), column-major.
    Vec symmetric_gradient(const Mat& g);

    /// Gathers x[idx] and S[idx, idx].
    Vec gather(const Vec& v, const std::vector<int>& idx);
    Mat gather(const Mat& m, const std::vector<int>& idx);

} // namespace mtps

#endif
