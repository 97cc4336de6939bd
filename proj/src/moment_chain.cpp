#include <mtps/errors.hpp>
#include <mtps/moment_chain.hpp>

#include <string>

namespace mtps {

    Vec gather(const Vec& v, const std::vector<int>& idx)
    {
        Vec out(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            out(i) = v(idx[i]);
        return out;
    }

    Mat gather(const Mat& m, const std::vector<int>& idx)
    {
        Mat out(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                out(i, j) = m(idx[i], idx[j]);
        return out;
    }

    MomentChain::MomentChain(Vec mean, Mat cov) : _mean(std::move(mean)), _cov(std::move(cov))
    {
        if (_cov.rows() != _mean.size() || _cov.cols() != _mean.size())
            throw InvalidInput("MomentChain: covariance does not match mean dimension");
    }

    Eigen::Index MomentChain::append(const MomentBlock& block, const std::vector<int>& idx, Eigen::Index param_offset)
    {
        if (static_cast<Eigen::Index>(idx.size()) != block.input_dim())
            throw InvalidInput("MomentChain::append: block expects " + std::to_string(block.input_dim()) + " inputs, got " + std::to_string(idx.size()));
        const Eigen::Index n = dim();
        for (int i : idx)
            if (i < 0 || i >= n)
                throw InvalidInput("MomentChain::append: index out of range");

        Op op;
        op.block = &block;
        op.idx = idx;
        op.param_offset = param_offset;
        op.m_in = gather(_mean, idx);
        op.s_in = gather(_cov, idx);
        op.out = block.forward(op.m_in, op.s_in);

        const Eigen::Index k = op.out.mean.size();
        Mat s_cols(n, idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j)
            s_cols.col(j) = _cov.col(idx[j]);
        Mat cross = s_cols * op.out.cross_factor;
        op.s_cols = std::move(s_cols);

        Vec mean(n + k);
        mean << _mean, op.out.mean;
        Mat cov(n + k, n + k);
        cov.topLeftCorner(n, n) = _cov;
        cov.topRightCorner(n, k) = cross;
        cov.bottomLeftCorner(k, n) = cross.transpose();
        cov.bottomRightCorner(k, k) = symmetrize(op.out.cov);

        _mean = std::move(mean);
        _cov = std::move(cov);
        _ops.push_back(std::move(op));
        return n;
    }

    void MomentChain::affine(const Mat& a, const Vec& c, const Mat& added_cov)
    {
        if (a.cols() != dim() || c.size() != a.rows() || added_cov.rows() != a.rows() || added_cov.cols() != a.rows())
            throw InvalidInput("MomentChain::affine: dimension mismatch");
        Op op;
        op.a = a;
        _mean = a * _mean + c;
        _cov = symmetrize(a * _cov * a.transpose() + added_cov);
        _ops.push_back(std::move(op));
    }

    void MomentChain::select(const std::vector<int>& idx)
    {
        Mat a = Mat::Zero(idx.size(), dim());
        for (std::size_t i = 0; i < idx.size(); ++i)
            a(i, idx[i]) = 1.0;
        affine(a, Vec::Zero(idx.size()), Mat::Zero(idx.size(), idx.size()));
    }

    void MomentChain::backward(const Vec& mean_bar, const Mat& cov_bar, Vec& init_mean_bar, Mat& init_cov_bar, Vec* param_bar) const
    {
        Vec m_bar = mean_bar;
        Mat s_bar = symmetrize(cov_bar);

        for (auto it = _ops.rbegin(); it != _ops.rend(); ++it) {
            const Op& op = *it;
            if (!op.block) {
                m_bar = op.a.transpose() * m_bar;
                s_bar = symmetrize(op.a.transpose() * s_bar * op.a);
                continue;
            }

            const Eigen::Index k = op.out.mean.size();
            const Eigen::Index n = m_bar.size() - k;
            const auto& idx = op.idx;
            const Eigen::Index p = idx.size();

            BlockAdjoint bar;
            bar.mean = m_bar.tail(k);
            bar.cov = symmetrize(s_bar.bottomRightCorner(k, k));
            Mat cross_bar = s_bar.topRightCorner(n, k) + s_bar.bottomLeftCorner(k, n).transpose();

            Vec prev_m_bar = m_bar.head(n);
            Mat prev_s_bar = s_bar.topLeftCorner(n, n);

            // cross = S[:, idx] V
            Mat v_bar = op.s_cols.transpose() * cross_bar;
            Mat cols_bar = cross_bar * op.out.cross_factor.transpose();
            for (Eigen::Index j = 0; j < p; ++j)
                prev_s_bar.col(idx[j]) += cols_bar.col(j);
            bar.cross_factor = std::move(v_bar);

            Vec m_in_bar = Vec::Zero(p);
            Mat s_in_bar = Mat::Zero(p, p);
            if (param_bar && op.param_offset >= 0) {
                Vec local = Vec::Zero(op.block->param_count());
                op.block->backward(op.m_in, op.s_in, op.out, bar, m_in_bar, s_in_bar, &local);
                param_bar->segment(op.param_offset, local.size()) += local;
            }
            else {
                op.block->backward(op.m_in, op.s_in, op.out, bar, m_in_bar, s_in_bar, nullptr);
            }

            for (Eigen::Index i = 0; i < p; ++i) {
                prev_m_bar(idx[i]) += m_in_bar(i);
                for (Eigen::Index j = 0; j < p; ++j)
                    prev_s_bar(idx[i], idx[j]) += s_in_bar(i, j);
            }
            m_bar = std::move(prev_m_bar);
            s_bar = symmetrize(prev_s_bar);
        }
        init_mean_bar = std::move(m_bar);
        init_cov_bar = std::move(s_bar);
    }

    Vec symmetric_gradient(const Mat& g)
    {
        const Mat s = symmetrize(g);
        Mat out = 2.0 * s;
        out.diagonal() = s.diagonal();
        return out.reshaped();
    }

    MomentJacobians output_jacobians(const MomentChain& chain, Eigen::Index n_in, Eigen::Index out_start, Eigen::Index k,
        Eigen::Index param_count)
    {
        const Eigen::Index n = chain.dim();
        const Eigen::Index rows = k + k * k + n_in * k;
        MomentJacobians jac;
        jac.d_mean = Mat::Zero(rows, n_in);
        jac.d_cov = Mat::Zero(rows, n_in * n_in);
        jac.d_param = Mat::Zero(rows, param_count);

        Vec m_bar0;
        Mat s_bar0;
        Vec p_bar(param_count);
        auto run = [&](Eigen::Index row, const Vec& mb, const Mat& sb) {
            p_bar.setZero();
            chain.backward(mb, sb, m_bar0, s_bar0, param_count > 0 ? &p_bar : nullptr);
            jac.d_mean.row(row) = m_bar0.head(n_in).transpose();
            jac.d_cov.row(row) = symmetric_gradient(s_bar0.topLeftCorner(n_in, n_in)).transpose();
            if (param_count > 0)
                jac.d_param.row(row) = p_bar.transpose();
        };

        const Vec zero_m = Vec::Zero(n);
        const Mat zero_s = Mat::Zero(n, n);
        Eigen::Index row = 0;
        for (Eigen::Index a = 0; a < k; ++a) {
            Vec mb = zero_m;
            mb(out_start + a) = 1.0;
            run(row++, mb, zero_s);
        }
        for (Eigen::Index b = 0; b < k; ++b)
            for (Eigen::Index a = 0; a < k; ++a) {
                Mat sb = zero_s;
                sb(out_start + a, out_start + b) = 1.0;
                run(row++, zero_m, sb);
            }
        for (Eigen::Index b = 0; b < k; ++b)
            for (Eigen::Index i = 0; i < n_in; ++i) {
                Mat sb = zero_s;
                sb(i, out_start + b) = 1.0;
                run(row++, zero_m, sb);
            }
        return jac;
    }

} // namespace mtps
