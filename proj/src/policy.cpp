#include <mtps/errors.hpp>
#include <mtps/policy.hpp>
#include <mtps/trig_moments.hpp>

#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace mtps {

    namespace {

        constexpr int format_version = 1;

        void check_u_max(const Vec& u_max, Eigen::Index f)
        {
            if (u_max.size() != f)
                throw InvalidInput("policy: u_max has " + std::to_string(u_max.size()) + " entries, expected " + std::to_string(f));
            if (!(u_max.array() > 0.0).all() || !u_max.allFinite())
                throw InvalidInput("policy: u_max must be positive and finite");
        }

        std::vector<int> all_indices(Eigen::Index n)
        {
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            return idx;
        }

    } // namespace

    Eigen::Index PolicyShape::param_count() const
    {
        if (kind == PolicyKind::Affine)
            return output_dim * input_dim + output_dim;
        return bases * input_dim + bases * output_dim + input_dim;
    }

    Policy Policy::affine(Mat a, Vec b, Vec u_max)
    {
        if (b.size() != a.rows())
            throw InvalidInput("affine policy: b must have one entry per row of A");
        if (!a.allFinite() || !b.allFinite())
            throw InvalidInput("affine policy: non-finite parameters");
        check_u_max(u_max, a.rows());
        Policy p;
        p._shape = {PolicyKind::Affine, a.cols(), a.rows(), 0, std::move(u_max)};
        p._a = std::move(a);
        p._b = std::move(b);
        return p;
    }

    Policy Policy::rbf(Mat centers, Mat weights, Vec log_widths, Vec u_max)
    {
        const Eigen::Index m = centers.rows();
        const Eigen::Index d = centers.cols();
        if (m < 1)
            throw InvalidInput("rbf policy: need at least one basis function");
        if (weights.rows() != m || log_widths.size() != d)
            throw InvalidInput("rbf policy: centers, weights and widths disagree in shape");
        if (!centers.allFinite() || !weights.allFinite() || !log_widths.allFinite())
            throw InvalidInput("rbf policy: non-finite parameters");
        check_u_max(u_max, weights.cols());
        Policy p;
        p._shape = {PolicyKind::Rbf, d, weights.cols(), m, std::move(u_max)};
        p._log_widths = std::move(log_widths);
        p._fn.centers = std::move(centers);
        p._fn.weights = std::move(weights);
        p._fn.log_lengthscales = p._log_widths.transpose().replicate(p._shape.output_dim, 1);
        p._fn.signal_var = Vec::Ones(p._shape.output_dim);
        p._fn.noise_var = Vec::Zero(p._shape.output_dim);
        return p;
    }

    Vec Policy::pack() const
    {
        Vec theta(_shape.param_count());
        if (_shape.kind == PolicyKind::Affine) {
            theta << _a.reshaped(), _b;
        }
        else {
            theta << _fn.centers.reshaped(), _fn.weights.reshaped(), _log_widths;
        }
        return theta;
    }

    Policy Policy::unpack(const Vec& theta, const PolicyShape& shape)
    {
        if (theta.size() != shape.param_count())
            throw InvalidInput("Policy::unpack: theta has length " + std::to_string(theta.size()) + ", expected "
                + std::to_string(shape.param_count()));
        const Eigen::Index d = shape.input_dim;
        const Eigen::Index f = shape.output_dim;
        if (shape.kind == PolicyKind::Affine) {
            Mat a = theta.head(f * d).reshaped(f, d);
            return affine(std::move(a), theta.tail(f), shape.u_max);
        }
        const Eigen::Index m = shape.bases;
        Mat centers = theta.head(m * d).reshaped(m, d);
        Mat weights = theta.segment(m * d, m * f).reshaped(m, f);
        return rbf(std::move(centers), std::move(weights), theta.tail(d), shape.u_max);
    }

    Vec Policy::penalty_mask() const
    {
        Vec mask = Vec::Zero(_shape.param_count());
        const Eigen::Index d = _shape.input_dim;
        const Eigen::Index f = _shape.output_dim;
        if (_shape.kind == PolicyKind::Affine)
            mask.head(f * d).setOnes();
        else
            mask.segment(_shape.bases * d, _shape.bases * f).setOnes();
        return mask;
    }

    Vec Policy::preliminary(const Vec& z) const
    {
        if (z.size() != input_dim())
            throw InvalidInput("policy: input has dimension " + std::to_string(z.size()) + ", expected " + std::to_string(input_dim()));
        if (_shape.kind == PolicyKind::Affine)
            return _a * z + _b;
        Vec v;
        expansion_point(_fn, z, v, nullptr);
        return v;
    }

    Vec Policy::eval(const Vec& z) const { return sine_squash(preliminary(z), u_max()); }

    BlockMoments PolicyBlock::forward(const Vec& m, const Mat& s) const
    {
        if (_policy.shape().kind == PolicyKind::Rbf)
            return expansion_moments(_policy.expansion(), m, s);
        const Mat& a = _policy.a();
        BlockMoments out;
        out.mean = a * m + _policy.b();
        out.cov = symmetrize(a * s * a.transpose());
        out.cross_factor = a.transpose();
        return out;
    }

    void PolicyBlock::backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
        Vec& m_bar, Mat& s_bar, Vec* param_bar) const
    {
        const Eigen::Index d = _policy.input_dim();
        const Eigen::Index f = _policy.output_dim();
        if (_policy.shape().kind == PolicyKind::Affine) {
            const Mat& a = _policy.a();
            const Mat cov_bar = symmetrize(bar.cov);
            m_bar.noalias() += a.transpose() * bar.mean;
            s_bar.noalias() += a.transpose() * cov_bar * a;
            if (param_bar) {
                Mat a_bar = bar.mean * m.transpose() + 2.0 * cov_bar * a * s + bar.cross_factor.transpose();
                param_bar->head(f * d) += a_bar.reshaped();
                param_bar->tail(f) += bar.mean;
            }
            return;
        }
        ExpansionAdjoint adj;
        expansion_backward(_policy.expansion(), m, s, out, bar, m_bar, s_bar, param_bar ? &adj : nullptr);
        if (param_bar) {
            const Eigen::Index nb = _policy.shape().bases;
            param_bar->head(nb * d) += adj.centers.reshaped();
            param_bar->segment(nb * d, nb * f) += adj.weights.reshaped();
            param_bar->tail(d) += adj.log_lengthscales.colwise().sum().transpose();
        }
    }

    namespace {

        struct ControlChain {
            PolicyBlock policy_block;
            TrigSumBlock squash;
            MomentChain chain;
            Eigen::Index u_start = 0;

            ControlChain(const Policy& policy, const AugmentedDist& aug)
                : policy_block(policy), squash(TrigSumBlock::sine_squash(policy.u_max())),
                  chain(aug.joint.mean(), aug.joint.cov())
            {
                const Eigen::Index d = policy.input_dim();
                if (aug.joint.dim() != d)
                    throw InvalidInput("predict_control: augmented input has dimension " + std::to_string(aug.joint.dim())
                        + ", policy expects " + std::to_string(d));
                const Eigen::Index v_start = chain.append(policy_block, all_indices(d), 0);
                std::vector<int> v_idx(policy.output_dim());
                std::iota(v_idx.begin(), v_idx.end(), static_cast<int>(v_start));
                u_start = chain.append(squash, v_idx);
            }

            ControlPrediction value(Eigen::Index d, Eigen::Index f) const
            {
                return {GaussianDist(chain.mean().segment(u_start, f), chain.cov().block(u_start, u_start, f, f)),
                    chain.cov().block(0, u_start, d, f)};
            }
        };

    } // namespace

    ControlPrediction predict_control(const Policy& policy, const AugmentedDist& aug)
    {
        const ControlChain cc(policy, aug);
        return cc.value(policy.input_dim(), policy.output_dim());
    }

    ControlPredictionGrads predict_control_with_grads(const Policy& policy, const AugmentedDist& aug)
    {
        const ControlChain cc(policy, aug);
        ControlPredictionGrads out;
        out.value = cc.value(policy.input_dim(), policy.output_dim());
        out.jac = output_jacobians(cc.chain, policy.input_dim(), cc.u_start, policy.output_dim(), policy.shape().param_count());
        return out;
    }

    Policy init_random(const PolicyShape& shape, std::uint64_t seed, const PolicyInitSpec& init)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        const Eigen::Index d = shape.input_dim;
        const Eigen::Index f = shape.output_dim;
        check_u_max(shape.u_max, f);
        if (shape.kind == PolicyKind::Affine) {
            Mat a(f, d);
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index i = 0; i < f; ++i)
                    a(i, j) = 0.01 * normal(rng);
            return Policy::affine(std::move(a), Vec::Zero(f), shape.u_max);
        }
        if (init.center_dist.dim() != d)
            throw InvalidInput("init_random: center distribution has dimension " + std::to_string(init.center_dist.dim())
                + ", expected " + std::to_string(d));
        // Factor through the eigendecomposition so that singular distributions are allowed.
        Eigen::SelfAdjointEigenSolver<Mat> es(init.center_dist.cov());
        const Mat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        Mat centers(shape.bases, d);
        Vec z(d);
        for (Eigen::Index i = 0; i < shape.bases; ++i) {
            for (Eigen::Index k = 0; k < d; ++k)
                z(k) = normal(rng);
            centers.row(i) = (init.center_dist.mean() + root * z).transpose();
        }
        Mat weights(shape.bases, f);
        for (Eigen::Index j = 0; j < f; ++j)
            for (Eigen::Index i = 0; i < shape.bases; ++i)
                weights(i, j) = init.weight_scale * shape.u_max(j) * normal(rng);
        return Policy::rbf(std::move(centers), std::move(weights), Vec::Zero(d), shape.u_max);
    }

    json policy_to_json(const Policy& p)
    {
        const PolicyShape& s = p.shape();
        return json{{"format_version", format_version}, {"kind", s.kind == PolicyKind::Affine ? "affine" : "rbf"},
            {"input_dim", s.input_dim}, {"output_dim", s.output_dim}, {"bases", s.bases}, {"u_max", vec_to_json(s.u_max)},
            {"theta", vec_to_json(p.pack())}};
    }

    Policy policy_from_json(const json& j)
    {
        if (int_field(j, "format_version") != format_version)
            throw LoadError("field 'format_version' has an unsupported value");
        PolicyShape s;
        const std::string kind = string_field(j, "kind");
        if (kind == "affine")
            s.kind = PolicyKind::Affine;
        else if (kind == "rbf")
            s.kind = PolicyKind::Rbf;
        else
            throw LoadError("field 'kind' must be 'affine' or 'rbf'");
        s.input_dim = int_field(j, "input_dim");
        s.output_dim = int_field(j, "output_dim");
        s.bases = int_field(j, "bases");
        s.u_max = vec_field(j, "u_max");
        try {
            return Policy::unpack(vec_field(j, "theta"), s);
        }
        catch (const InvalidInput& e) {
            throw LoadError(std::string("field 'theta': ") + e.what());
        }
    }

} // namespace mtps
