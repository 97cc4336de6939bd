#include <mtps/errors.hpp>
#include <mtps/kernel_expansion.hpp>

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace mtps {

    namespace {

        struct OutputGeometry {
            Vec lambda; // squared lengthscales
            Vec inv_lambda;
            Mat b_inv; // (S + Lambda)^{-1}
            double log_c = 0.0; // log(sf2 |S Lambda^{-1} + I|^{-1/2})
        };

        OutputGeometry output_geometry(const KernelExpansion& fn, const Mat& s, Eigen::Index a)
        {
            OutputGeometry g;
            g.lambda = (2.0 * fn.log_lengthscales.row(a).transpose()).array().exp();
            g.inv_lambda = g.lambda.cwiseInverse();
            Mat b = s;
            b.diagonal() += g.lambda;
            Eigen::LLT<Mat> llt(b);
            if (llt.info() != Eigen::Success)
                throw NumericalDegeneracy("moment matching: S + Lambda not positive definite for output " + std::to_string(a));
            g.b_inv = llt.solve(Mat::Identity(s.rows(), s.cols()));
            const double logdet_b = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
            const double logdet_lambda = g.lambda.array().log().sum();
            g.log_c = std::log(fn.signal_var(a)) - 0.5 * (logdet_b - logdet_lambda);
            if (!std::isfinite(g.log_c))
                throw NumericalDegeneracy("moment matching: non-finite normalizer for output " + std::to_string(a));
            return g;
        }

        struct PairGeometry {
            Vec psi;
            Mat r_inv; // (S Psi + I)^{-1}
            Mat t; // (S Psi + I)^{-1} S, symmetric
            double logdet_r = 0.0;
        };

        PairGeometry pair_geometry(const Mat& s, const Vec& psi, Eigen::Index a, Eigen::Index b)
        {
            PairGeometry g;
            g.psi = psi;
            const Vec sq = psi.cwiseSqrt();
            // S Psi + I = Psi^{-1/2} (I + Psi^{1/2} S Psi^{1/2}) Psi^{1/2}
            Mat sym = sq.asDiagonal() * s * sq.asDiagonal();
            sym.diagonal().array() += 1.0;
            Eigen::LLT<Mat> llt(sym);
            if (llt.info() != Eigen::Success)
                throw NumericalDegeneracy("moment matching: S Psi + I degenerate for outputs " + std::to_string(a) + "," + std::to_string(b));
            const Mat sym_inv = llt.solve(Mat::Identity(s.rows(), s.cols()));
            g.r_inv = sq.cwiseInverse().asDiagonal() * sym_inv * sq.asDiagonal();
            g.t = symmetrize(g.r_inv * s);
            g.logdet_r = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
            return g;
        }

        // Per-pair intermediates; L(i, j) = E[k_a(x, c_i) k_b(x, c_j)].
        struct PairTerms {
            Mat u, w; // nu Lambda_a^{-1}, nu Lambda_b^{-1}
            Mat ut, wt; // u T, w T
            Mat l;
        };

        void pair_terms(const KernelExpansion& fn, const Mat& nu, const Mat& nu_sq, const OutputGeometry& ga,
            const OutputGeometry& gb, const PairGeometry& pg, Eigen::Index a, Eigen::Index b, PairTerms& pt)
        {
            pt.u = nu * ga.inv_lambda.asDiagonal();
            pt.w = nu * gb.inv_lambda.asDiagonal();
            pt.ut = pt.u * pg.t;
            pt.wt = pt.w * pg.t;
            const Vec alpha = (std::log(fn.signal_var(a)) - 0.5 * (nu_sq * ga.inv_lambda).array()
                + 0.5 * (pt.ut.array() * pt.u.array()).rowwise().sum())
                                  .matrix();
            const Vec gamma = (std::log(fn.signal_var(b)) - 0.5 * (nu_sq * gb.inv_lambda).array()
                + 0.5 * (pt.wt.array() * pt.w.array()).rowwise().sum())
                                  .matrix();
            pt.l.noalias() = pt.ut * pt.w.transpose();
            const double shift = -0.5 * pg.logdet_r;
            for (Eigen::Index j = 0; j < pt.l.cols(); ++j)
                pt.l.col(j) = (pt.l.col(j).array() + alpha.array() + (gamma(j) + shift)).exp().matrix();
        }

    } // namespace

    BlockMoments expansion_moments(const KernelExpansion& fn, const Vec& m, const Mat& s)
    {
        const Eigen::Index e = fn.input_dim();
        const Eigen::Index d = fn.output_dim();
        if (m.size() != e || s.rows() != e || s.cols() != e)
            throw InvalidInput("expansion_moments: input has dimension " + std::to_string(m.size()) + ", expected " + std::to_string(e));

        const Mat nu = fn.centers.rowwise() - m.transpose();
        const Mat nu_sq = nu.array().square().matrix();

        BlockMoments out;
        out.mean.resize(d);
        out.cov.resize(d, d);
        out.cross_factor.resize(e, d);

        std::vector<OutputGeometry> geo;
        geo.reserve(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            geo.push_back(output_geometry(fn, s, a));
            const OutputGeometry& g = geo.back();
            const Vec quad = ((nu * g.b_inv).array() * nu.array()).rowwise().sum();
            const Vec q = (g.log_c - 0.5 * quad.array()).exp();
            const Vec wq = fn.weights.col(a).cwiseProduct(q);
            out.mean(a) = wq.sum();
            out.cross_factor.col(a) = g.b_inv * (nu.transpose() * wq);
        }

        PairTerms pt;
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = a; b < d; ++b) {
                const PairGeometry pg = pair_geometry(s, geo[a].inv_lambda + geo[b].inv_lambda, a, b);
                pair_terms(fn, nu, nu_sq, geo[a], geo[b], pg, a, b, pt);
                double v = fn.weights.col(a).dot(pt.l * fn.weights.col(b)) - out.mean(a) * out.mean(b);
                if (a == b && !fn.deterministic())
                    v += fn.signal_var(a) - (fn.inv_k[a].array() * pt.l.array()).sum() + fn.noise_var(a);
                out.cov(a, b) = v;
                out.cov(b, a) = v;
            }
        return out;
    }

    void expansion_backward(const KernelExpansion& fn, const Vec& m, const Mat& s, const BlockMoments& out,
        const BlockAdjoint& bar, Vec& m_bar, Mat& s_bar, ExpansionAdjoint* adj)
    {
        const Eigen::Index e = fn.input_dim();
        const Eigen::Index d = fn.output_dim();
        const Eigen::Index n = fn.centers.rows();

        const Mat nu = fn.centers.rowwise() - m.transpose();
        const Mat nu_sq = nu.array().square().matrix();
        const Mat cov_bar = symmetrize(bar.cov);

        Mat nu_bar;
        Mat inv_lambda_bar; // D x E adjoint of Lambda^{-1}
        Mat lambda_bar;
        if (adj) {
            adj->centers = Mat::Zero(n, e);
            adj->weights = Mat::Zero(n, d);
            adj->log_lengthscales = Mat::Zero(d, e);
            nu_bar = Mat::Zero(n, e);
            inv_lambda_bar = Mat::Zero(d, e);
            lambda_bar = Mat::Zero(d, e);
        }

        std::vector<OutputGeometry> geo;
        geo.reserve(d);
        for (Eigen::Index a = 0; a < d; ++a)
            geo.push_back(output_geometry(fn, s, a));

        Vec mean_bar = bar.mean;
        Vec nu_colsum_bar = Vec::Zero(e); // sum_i nu_bar_i, for m_bar = -sum_i nu_bar_i

        // Covariance pairs.
        PairTerms pt;
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = a; b < d; ++b) {
                const double sbar = (a == b) ? cov_bar(a, a) : 2.0 * cov_bar(a, b);
                if (sbar == 0.0)
                    continue;
                mean_bar(a) -= sbar * out.mean(b);
                mean_bar(b) -= sbar * out.mean(a);

                const PairGeometry pg = pair_geometry(s, geo[a].inv_lambda + geo[b].inv_lambda, a, b);
                pair_terms(fn, nu, nu_sq, geo[a], geo[b], pg, a, b, pt);

                const auto& beta_a = fn.weights.col(a);
                const auto& beta_b = fn.weights.col(b);
                if (adj) {
                    adj->weights.col(a) += sbar * (pt.l * beta_b);
                    adj->weights.col(b) += sbar * (pt.l.transpose() * beta_a);
                }

                // G = dL/d(exponent) = Lbar o L
                Mat g(n, n);
                const Vec sa = sbar * beta_a;
                if (a == b && !fn.deterministic()) {
                    const Mat& ik = fn.inv_k[a];
                    for (Eigen::Index j = 0; j < n; ++j)
                        g.col(j) = ((sa * beta_b(j) - sbar * ik.col(j)).array() * pt.l.col(j).array()).matrix();
                }
                else {
                    for (Eigen::Index j = 0; j < n; ++j)
                        g.col(j) = (sa * beta_b(j)).cwiseProduct(pt.l.col(j));
                }

                const Vec rho = g * Vec::Ones(n);
                const Vec gam = g.transpose() * Vec::Ones(n);
                const double gsum = rho.sum();
                Mat gw(n, e);
                gw.noalias() = g * pt.w;

                Mat t_bar = pt.u.transpose() * gw;
                t_bar.noalias() += 0.5 * pt.u.transpose() * rho.asDiagonal() * pt.u;
                t_bar.noalias() += 0.5 * pt.w.transpose() * gam.asDiagonal() * pt.w;

                const Mat i_minus_tpsi = Mat::Identity(e, e) - pg.t * pg.psi.asDiagonal();
                s_bar.noalias() += pg.r_inv.transpose() * t_bar * i_minus_tpsi;
                s_bar.noalias() += (-0.5 * gsum) * pg.r_inv.transpose() * pg.psi.asDiagonal();

                // Exponent terms depending on nu: alpha_i, gamma_j and u_i^T T w_j.
                const Vec h = pg.t * (pt.u.transpose() * rho + pt.w.transpose() * gam);
                const Vec sum_u_bar = h; // sum_i u_bar_i
                const Vec sum_w_bar = h; // sum_j w_bar_j
                nu_colsum_bar += geo[a].inv_lambda.cwiseProduct(sum_u_bar) + geo[b].inv_lambda.cwiseProduct(sum_w_bar)
                    - geo[a].inv_lambda.cwiseProduct(nu.transpose() * rho)
                    - geo[b].inv_lambda.cwiseProduct(nu.transpose() * gam);

                if (adj) {
                    const Mat u_bar = rho.asDiagonal() * pt.ut + gw * pg.t;
                    const Mat w_bar = gam.asDiagonal() * pt.wt + (g.transpose() * pt.u) * pg.t;
                    nu_bar += u_bar * geo[a].inv_lambda.asDiagonal() + w_bar * geo[b].inv_lambda.asDiagonal();
                    nu_bar -= rho.asDiagonal() * nu * geo[a].inv_lambda.asDiagonal();
                    nu_bar -= gam.asDiagonal() * nu * geo[b].inv_lambda.asDiagonal();

                    inv_lambda_bar.row(a) += (u_bar.array() * nu.array()).colwise().sum().matrix();
                    inv_lambda_bar.row(b) += (w_bar.array() * nu.array()).colwise().sum().matrix();
                    inv_lambda_bar.row(a) -= 0.5 * (nu_sq.transpose() * rho).transpose();
                    inv_lambda_bar.row(b) -= 0.5 * (nu_sq.transpose() * gam).transpose();

                    // T = (S Psi + I)^{-1} S: dT = -T dPsi T; logdet R: d = tr(T dPsi)
                    const Mat ttt = pg.t * t_bar.transpose() * pg.t;
                    const Vec psi_bar = -ttt.diagonal() - 0.5 * gsum * pg.t.diagonal();
                    inv_lambda_bar.row(a) += psi_bar.transpose();
                    inv_lambda_bar.row(b) += psi_bar.transpose();
                }
            }

        // Means and cross-covariance factors.
        for (Eigen::Index a = 0; a < d; ++a) {
            const OutputGeometry& g = geo[a];
            const Mat nu_binv = nu * g.b_inv;
            const Vec quad = (nu_binv.array() * nu.array()).rowwise().sum();
            const Vec q = (g.log_c - 0.5 * quad.array()).exp();
            const Vec wq = fn.weights.col(a).cwiseProduct(q);
            const Vec v = out.cross_factor.col(a);

            const Vec gvec = g.b_inv * bar.cross_factor.col(a);
            const Vec wq_bar = Vec::Constant(n, mean_bar(a)) + nu * gvec;
            const Vec r = wq_bar.cwiseProduct(wq);
            const double rsum = r.sum();

            Mat contrib = -0.5 * rsum * g.b_inv;
            contrib.noalias() += 0.5 * nu_binv.transpose() * r.asDiagonal() * nu_binv;
            contrib.noalias() -= gvec * v.transpose();
            s_bar += contrib;

            // m_bar += B^{-1} nu^T r - M_a g  ==  -sum_i nu_bar_i
            nu_colsum_bar += -(nu_binv.transpose() * r) + out.mean(a) * gvec;

            if (adj) {
                adj->weights.col(a) += wq_bar.cwiseProduct(q);
                nu_bar += wq * gvec.transpose();
                nu_bar -= r.asDiagonal() * nu_binv;
                lambda_bar.row(a) += contrib.diagonal().transpose() + 0.5 * rsum * g.inv_lambda.transpose();
            }
        }

        m_bar -= nu_colsum_bar;

        if (adj) {
            adj->centers = nu_bar;
            for (Eigen::Index a = 0; a < d; ++a) {
                // Lambda = exp(2 l), Lambda^{-1} = exp(-2 l)
                adj->log_lengthscales.row(a) = 2.0 * lambda_bar.row(a).cwiseProduct(geo[a].lambda.transpose())
                    - 2.0 * inv_lambda_bar.row(a).cwiseProduct(geo[a].inv_lambda.transpose());
            }
        }
    }

    void expansion_point(const KernelExpansion& fn, const Vec& x, Vec& mean, Vec* var)
    {
        const Eigen::Index d = fn.output_dim();
        const Mat nu = fn.centers.rowwise() - x.transpose();
        const Mat nu_sq = nu.array().square().matrix();
        mean.resize(d);
        if (var)
            var->resize(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const Vec inv_lambda = (-2.0 * fn.log_lengthscales.row(a).transpose()).array().exp();
            const Vec k = (std::log(fn.signal_var(a)) - 0.5 * (nu_sq * inv_lambda).array()).exp();
            mean(a) = k.dot(fn.weights.col(a));
            if (var) {
                (*var)(a) = fn.deterministic() ? 0.0 : fn.signal_var(a) - k.dot(fn.inv_k[a] * k) + fn.noise_var(a);
            }
        }
    }

} // namespace mtps
