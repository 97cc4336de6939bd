#include <mtps/errors.hpp>
#include <mtps/trig_moments.hpp>

#include <cmath>

namespace mtps {

    namespace {

        // exp(-a^T S a / 2) * (cos|sin)(a^T m)
        double expect(bool is_cos, const Vec& a, const Vec& m, const Mat& s)
        {
            const double decay = std::exp(-0.5 * a.dot(s * a));
            const double arg = a.dot(m);
            return decay * (is_cos ? std::cos(arg) : std::sin(arg));
        }

        // Adds ebar * d expect(is_cos, a) / d{m, S}.
        void expect_backward(bool is_cos, const Vec& a, const Vec& m, const Mat& s, double ebar, Vec& m_bar, Mat& s_bar)
        {
            if (ebar == 0.0)
                return;
            const double decay = std::exp(-0.5 * a.dot(s * a));
            const double arg = a.dot(m);
            const double value = decay * (is_cos ? std::cos(arg) : std::sin(arg));
            const double dvalue = decay * (is_cos ? -std::sin(arg) : std::cos(arg));
            m_bar += (ebar * dvalue) * a;
            s_bar.noalias() += (-0.5 * ebar * value) * a * a.transpose();
        }

        // trig_t(x) * trig_u(x) = 0.5 * (sign1 * f1((a+b)^T x) + sign2 * f2((a-b)^T x))
        struct ProductExpansion {
            bool sum_is_cos;
            double sum_sign;
            bool diff_is_cos;
            double diff_sign;
        };

        ProductExpansion expand(bool t_cos, bool u_cos)
        {
            if (!t_cos && !u_cos) // sin a sin b = (cos(a-b) - cos(a+b)) / 2
                return {true, -1.0, true, 1.0};
            if (t_cos && u_cos) // cos a cos b = (cos(a-b) + cos(a+b)) / 2
                return {true, 1.0, true, 1.0};
            if (!t_cos && u_cos) // sin a cos b = (sin(a+b) + sin(a-b)) / 2
                return {false, 1.0, false, 1.0};
            // cos a sin b = (sin(a+b) - sin(a-b)) / 2
            return {false, 1.0, false, -1.0};
        }

    } // namespace

    TrigSumBlock::TrigSumBlock(Eigen::Index input_dim, std::vector<std::vector<TrigTerm>> outputs)
        : _input_dim(input_dim), _outputs(std::move(outputs))
    {
        for (const auto& out : _outputs)
            for (const auto& t : out)
                if (t.freq.size() != _input_dim)
                    throw InvalidInput("TrigSumBlock: term frequency has wrong dimension");
    }

    TrigSumBlock TrigSumBlock::sin_cos(Eigen::Index angle_count)
    {
        std::vector<std::vector<TrigTerm>> outputs;
        for (Eigen::Index i = 0; i < angle_count; ++i) {
            Vec e = Vec::Unit(angle_count, i);
            outputs.push_back({TrigTerm{1.0, false, e}});
            outputs.push_back({TrigTerm{1.0, true, e}});
        }
        return TrigSumBlock(angle_count, std::move(outputs));
    }

    TrigSumBlock TrigSumBlock::sine_squash(const Vec& u_max)
    {
        const Eigen::Index f = u_max.size();
        std::vector<std::vector<TrigTerm>> outputs;
        for (Eigen::Index i = 0; i < f; ++i) {
            if (!(u_max(i) > 0.0))
                throw InvalidInput("sine_squash: u_max must be positive");
            Vec e = Vec::Unit(f, i) / u_max(i);
            outputs.push_back({TrigTerm{9.0 * u_max(i) / 8.0, false, e}, TrigTerm{u_max(i) / 8.0, false, 3.0 * e}});
        }
        return TrigSumBlock(f, std::move(outputs));
    }

    Vec TrigSumBlock::evaluate(const Vec& x) const
    {
        Vec y(output_dim());
        for (std::size_t o = 0; o < _outputs.size(); ++o) {
            double v = 0.0;
            for (const auto& t : _outputs[o]) {
                const double arg = t.freq.dot(x);
                v += t.coef * (t.is_cos ? std::cos(arg) : std::sin(arg));
            }
            y(o) = v;
        }
        return y;
    }

    BlockMoments TrigSumBlock::forward(const Vec& m, const Mat& s) const
    {
        const Eigen::Index k = output_dim();
        BlockMoments out;
        out.mean = Vec::Zero(k);
        out.cov = Mat::Zero(k, k);
        out.cross_factor = Mat::Zero(_input_dim, k);

        for (Eigen::Index o = 0; o < k; ++o)
            for (const auto& t : _outputs[o]) {
                out.mean(o) += t.coef * expect(t.is_cos, t.freq, m, s);
                // d/dx sin(a^T x) = a cos(a^T x), d/dx cos(a^T x) = -a sin(a^T x)
                const double grad = t.is_cos ? -expect(false, t.freq, m, s) : expect(true, t.freq, m, s);
                out.cross_factor.col(o) += t.coef * grad * t.freq;
            }

        for (Eigen::Index o = 0; o < k; ++o)
            for (Eigen::Index p = o; p < k; ++p) {
                double second = 0.0;
                for (const auto& t : _outputs[o])
                    for (const auto& u : _outputs[p]) {
                        const ProductExpansion pe = expand(t.is_cos, u.is_cos);
                        second += 0.5 * t.coef * u.coef
                            * (pe.sum_sign * expect(pe.sum_is_cos, t.freq + u.freq, m, s)
                                + pe.diff_sign * expect(pe.diff_is_cos, t.freq - u.freq, m, s));
                    }
                out.cov(o, p) = second - out.mean(o) * out.mean(p);
                out.cov(p, o) = out.cov(o, p);
            }
        return out;
    }

    void TrigSumBlock::backward(const Vec& m, const Mat& s, const BlockMoments& out, const BlockAdjoint& bar,
        Vec& m_bar, Mat& s_bar, Vec*) const
    {
        const Eigen::Index k = output_dim();
        const Mat cov_bar = symmetrize(bar.cov);

        for (Eigen::Index o = 0; o < k; ++o)
            for (Eigen::Index p = o; p < k; ++p) {
                const double w = (o == p) ? cov_bar(o, o) : 2.0 * cov_bar(o, p);
                if (w == 0.0)
                    continue;
                for (const auto& t : _outputs[o])
                    for (const auto& u : _outputs[p]) {
                        const ProductExpansion pe = expand(t.is_cos, u.is_cos);
                        const double c = 0.5 * w * t.coef * u.coef;
                        expect_backward(pe.sum_is_cos, t.freq + u.freq, m, s, c * pe.sum_sign, m_bar, s_bar);
                        expect_backward(pe.diff_is_cos, t.freq - u.freq, m, s, c * pe.diff_sign, m_bar, s_bar);
                    }
            }

        // cov = second - mean mean^T
        const Vec mean_bar = bar.mean - 2.0 * cov_bar * out.mean;

        for (Eigen::Index o = 0; o < k; ++o)
            for (const auto& t : _outputs[o]) {
                expect_backward(t.is_cos, t.freq, m, s, mean_bar(o) * t.coef, m_bar, s_bar);
                const double vbar = t.coef * t.freq.dot(bar.cross_factor.col(o));
                if (t.is_cos)
                    expect_backward(false, t.freq, m, s, -vbar, m_bar, s_bar);
                else
                    expect_backward(true, t.freq, m, s, vbar, m_bar, s_bar);
            }
    }

    Vec sine_squash(const Vec& v, const Vec& u_max)
    {
        Vec u(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double x = v(i) / u_max(i);
            u(i) = u_max(i) * (9.0 * std::sin(x) + std::sin(3.0 * x)) / 8.0;
        }
        return u;
    }

} // namespace mtps
