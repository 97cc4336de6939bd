#include <mtps/errors.hpp>
#include <mtps/gp.hpp>
#include <mtps/optimizer.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Cholesky>

namespace mtps {

    namespace {

        constexpr int format_version = 1;

        // Squared distances scaled per dimension: sum_k (x_ik - x_jk)^2 / l_k^2
        Mat scaled_sq_dist(const Mat& x, const Vec& inv_l2)
        {
            const Mat xs = x * inv_l2.cwiseSqrt().asDiagonal();
            const Vec sq = xs.rowwise().squaredNorm();
            Mat d = -2.0 * xs * xs.transpose();
            d.colwise() += sq;
            d.rowwise() += sq.transpose();
            return d.cwiseMax(0.0);
        }

        Mat kernel(const Mat& x, const GpHyper& h)
        {
            const Vec inv_l2 = (-2.0 * h.log_lengthscales).array().exp();
            return h.signal_var() * (-0.5 * scaled_sq_dist(x, inv_l2)).array().exp().matrix();
        }

        // Cholesky of k + jitter I with jitter escalating 0, 1e-10, ..., 1e-4.
        Eigen::LLT<Mat> factorize(Mat k, double& jitter, const std::string& what)
        {
            jitter = 0.0;
            Eigen::LLT<Mat> llt(k);
            for (double j = 1e-10; llt.info() != Eigen::Success; j *= 10.0) {
                if (j > 1.0001e-4)
                    throw ModelFitError(what + ": Cholesky failed after jitter escalation");
                k.diagonal().array() += j - jitter;
                jitter = j;
                llt.compute(k);
            }
            return llt;
        }

        Vec column_sd(const Mat& x)
        {
            Vec sd(x.cols());
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                const double mean = x.col(c).mean();
                const double var = x.rows() > 1 ? (x.col(c).array() - mean).square().sum() / (x.rows() - 1) : 0.0;
                sd(c) = std::sqrt(var);
            }
            return sd;
        }

        struct Curb {
            Vec log_sd;
            static constexpr double power = 30.0;
            static constexpr double ls_ratio = 100.0;
            static constexpr double snr = 500.0;
        };

        // n * sum_k ((log l_k - log sd_k) / log 100)^p + n * ((log sf - log sn) / log 500)^p
        double curb_penalty(const Curb& c, const GpHyper& h, double n, Vec& grad)
        {
            double pen = 0.0;
            const double p = Curb::power;
            const double lr = std::log(Curb::ls_ratio);
            for (Eigen::Index k = 0; k < h.log_lengthscales.size(); ++k) {
                const double r = (h.log_lengthscales(k) - c.log_sd(k)) / lr;
                pen += n * std::pow(r, p);
                grad(k) += n * p * std::pow(r, p - 1.0) / lr;
            }
            const double ls = std::log(Curb::snr);
            const double r = (h.log_signal_sd - h.log_noise_sd) / ls;
            const Eigen::Index e = h.log_lengthscales.size();
            pen += n * std::pow(r, p);
            grad(e) += n * p * std::pow(r, p - 1.0) / ls;
            grad(e + 1) -= n * p * std::pow(r, p - 1.0) / ls;
            return pen;
        }

    } // namespace

    void TransitionDataset::validate() const
    {
        if (inputs.rows() < 1)
            throw InvalidInput("TransitionDataset: empty");
        if (inputs.rows() != targets.rows() || inputs.cols() != state_dim + control_dim || targets.cols() != state_dim)
            throw InvalidInput("TransitionDataset: inconsistent dimensions");
        if (!inputs.allFinite() || !targets.allFinite())
            throw InvalidInput("TransitionDataset: non-finite entries");
    }

    void TransitionDataset::append(const Vec& x, const Vec& u, const Vec& x_next)
    {
        if (inputs.rows() == 0 && inputs.cols() == 0) {
            state_dim = x.size();
            control_dim = u.size();
            inputs.resize(0, state_dim + control_dim);
            targets.resize(0, state_dim);
        }
        if (x.size() != state_dim || u.size() != control_dim || x_next.size() != state_dim)
            throw InvalidInput("TransitionDataset::append: dimension mismatch");
        const Eigen::Index n = inputs.rows();
        inputs.conservativeResize(n + 1, Eigen::NoChange);
        targets.conservativeResize(n + 1, Eigen::NoChange);
        inputs.row(n) << x.transpose(), u.transpose();
        targets.row(n) = (x_next - x).transpose();
    }

    Vec GpHyper::pack() const
    {
        Vec p(log_lengthscales.size() + 2);
        p << log_lengthscales, log_signal_sd, log_noise_sd;
        return p;
    }

    GpHyper GpHyper::unpack(const Vec& p)
    {
        if (p.size() < 3)
            throw InvalidInput("GpHyper::unpack: vector too short");
        GpHyper h;
        h.log_lengthscales = p.head(p.size() - 2);
        h.log_signal_sd = p(p.size() - 2);
        h.log_noise_sd = p(p.size() - 1);
        return h;
    }

    double GpHyper::signal_var() const { return std::exp(2.0 * log_signal_sd); }
    double GpHyper::noise_var() const { return std::exp(2.0 * log_noise_sd); }

    GpModel::GpModel(Mat inputs, Mat targets, std::vector<GpHyper> hyper, FeatureMap input_map)
        : _inputs(std::move(inputs)), _targets(std::move(targets)), _hyper(std::move(hyper)), _input_map(std::move(input_map))
    {
        const Eigen::Index n = _inputs.rows();
        const Eigen::Index e = _inputs.cols();
        const Eigen::Index d = _targets.cols();
        if (n < 1 || _targets.rows() != n)
            throw InvalidInput("GpModel: inputs and targets must have the same nonzero number of rows");
        if (static_cast<Eigen::Index>(_hyper.size()) != d)
            throw InvalidInput("GpModel: need one hyperparameter set per output");
        for (const auto& h : _hyper)
            if (h.log_lengthscales.size() != e || !h.pack().allFinite())
                throw InvalidInput("GpModel: hyperparameters do not match the input dimension");

        _jitter.resize(d);
        _fn.centers = _inputs;
        _fn.weights.resize(n, d);
        _fn.log_lengthscales.resize(d, e);
        _fn.signal_var.resize(d);
        _fn.noise_var.resize(d);
        _fn.inv_k.resize(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const GpHyper& h = _hyper[a];
            Mat k = kernel(_inputs, h);
            k.diagonal().array() += h.noise_var();
            double jitter = 0.0;
            const Eigen::LLT<Mat> llt = factorize(std::move(k), jitter, "GpModel output " + std::to_string(a));
            _jitter(a) = jitter;
            _fn.weights.col(a) = llt.solve(_targets.col(a));
            _fn.inv_k[a] = llt.solve(Mat::Identity(n, n));
            _fn.log_lengthscales.row(a) = h.log_lengthscales.transpose();
            _fn.signal_var(a) = h.signal_var();
            _fn.noise_var(a) = h.noise_var();
        }
    }

    Vec GpModel::noise_var() const { return _fn.noise_var; }

    GaussianDist GpModel::predict_point(const Vec& z) const
    {
        if (z.size() != input_dim())
            throw InvalidInput("predict_point: input has dimension " + std::to_string(z.size()) + ", expected " + std::to_string(input_dim()));
        Vec mean;
        Vec var;
        expansion_point(_fn, z, mean, &var);
        return GaussianDist(std::move(mean), var.asDiagonal());
    }

    Vec GpModel::solve(Eigen::Index d, const Vec& y) const { return _fn.inv_k.at(d) * y; }

    double log_marginal_likelihood(const Mat& inputs, const Vec& y, const GpHyper& hyper, Vec* grad)
    {
        const Eigen::Index n = inputs.rows();
        const Eigen::Index e = inputs.cols();
        if (y.size() != n || hyper.log_lengthscales.size() != e)
            throw InvalidInput("log_marginal_likelihood: dimension mismatch");

        const Vec inv_l2 = (-2.0 * hyper.log_lengthscales).array().exp();
        const Mat kf = hyper.signal_var() * (-0.5 * scaled_sq_dist(inputs, inv_l2)).array().exp().matrix();
        Mat k = kf;
        k.diagonal().array() += hyper.noise_var();
        double jitter = 0.0;
        const Eigen::LLT<Mat> llt = factorize(std::move(k), jitter, "log_marginal_likelihood");

        const Vec alpha = llt.solve(y);
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);

        if (grad) {
            grad->resize(e + 2);
            Mat w = alpha * alpha.transpose() - llt.solve(Mat::Identity(n, n));
            const Mat wk = w.cwiseProduct(kf);
            for (Eigen::Index c = 0; c < e; ++c) {
                // dK/dlog l_c = K_f o (x_ic - x_jc)^2 / l_c^2
                const Vec xc = inputs.col(c);
                double s = 0.0;
                for (Eigen::Index j = 0; j < n; ++j)
                    s += (wk.col(j).array() * (xc.array() - xc(j)).square()).sum();
                (*grad)(c) = 0.5 * s * inv_l2(c);
            }
            (*grad)(e) = wk.sum();
            (*grad)(e + 1) = w.trace() * hyper.noise_var();
        }
        return value;
    }

    double log_marginal_likelihood(const GpModel& model, Eigen::Index d, Vec* grad)
    {
        return log_marginal_likelihood(model.inputs(), model.targets().col(d), model.hyper().at(d), grad);
    }

    GpModel fit(const Mat& inputs, const Mat& targets, const GpFitOptions& opts, FeatureMap input_map)
    {
        const Eigen::Index n = inputs.rows();
        const Eigen::Index e = inputs.cols();
        const Eigen::Index d = targets.cols();
        if (n < 2)
            throw InvalidInput("fit: need at least two transitions");
        if (targets.rows() != n)
            throw InvalidInput("fit: inputs and targets differ in length");
        if (opts.init && static_cast<Eigen::Index>(opts.init->size()) != d)
            throw InvalidInput("fit: warm start has the wrong number of outputs");

        const Vec in_sd = column_sd(inputs);
        const Vec out_sd = column_sd(targets);
        Curb curb;
        curb.log_sd = in_sd.cwiseMax(1e-6).array().log();

        std::vector<GpHyper> best(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const Vec y = targets.col(a);
            const Objective objective = [&](const Vec& p, Vec& g) {
                const GpHyper h = GpHyper::unpack(p);
                Vec lg;
                double value;
                try {
                    value = -log_marginal_likelihood(inputs, y, h, &lg);
                }
                catch (const ModelFitError&) {
                    g = Vec::Zero(p.size());
                    return std::numeric_limits<double>::quiet_NaN();
                }
                g = -lg;
                if (opts.curb)
                    value += curb_penalty(curb, h, static_cast<double>(n), g);
                return value;
            };

            GpHyper start;
            if (opts.init) {
                start = (*opts.init)[a];
            }
            else {
                start.log_lengthscales = in_sd.array().max(1e-3).log();
                for (Eigen::Index c = 0; c < e; ++c)
                    if (in_sd(c) < 1e-12)
                        start.log_lengthscales(c) = 0.0;
                start.log_signal_sd = std::log(std::max(out_sd(a), 1e-3));
                start.log_noise_sd = start.log_signal_sd - std::log(10.0);
            }

            std::mt19937_64 rng(opts.seed + 7919 * static_cast<std::uint64_t>(a));
            std::normal_distribution<double> normal(0.0, 1.0);
            MinimizeOptions mo;
            mo.max_iters = opts.max_iters;
            double best_value = std::numeric_limits<double>::infinity();
            bool found = false;
            const int starts = std::max(1, opts.restarts);
            for (int r = 0; r < starts; ++r) {
                Vec p0 = start.pack();
                if (r > 0)
                    for (Eigen::Index i = 0; i < p0.size(); ++i)
                        p0(i) += normal(rng);
                try {
                    const MinimizeResult res = minimize(objective, p0, mo);
                    if (res.f < best_value) {
                        best_value = res.f;
                        best[a] = GpHyper::unpack(res.x);
                        found = true;
                    }
                }
                catch (const OptimizerError&) {
                }
            }
            if (!found)
                throw ModelFitError("fit: no restart produced a finite likelihood for output " + std::to_string(a));
        }
        return GpModel(inputs, targets, std::move(best), std::move(input_map));
    }

    Mat model_inputs(const TransitionDataset& data, const FeatureMap& input_map)
    {
        Mat z(data.size(), input_map.dim());
        for (Eigen::Index i = 0; i < data.size(); ++i)
            z.row(i) = input_map.apply(data.inputs.row(i).transpose()).transpose();
        return z;
    }

    GpModel fit(const TransitionDataset& data, const FeatureMap& input_map, const GpFitOptions& opts)
    {
        data.validate();
        return fit(model_inputs(data, input_map), data.targets, opts, input_map);
    }

    void to_json(json& j, const GpHyper& h)
    {
        j = json{{"log_lengthscales", vec_to_json(h.log_lengthscales)}, {"log_signal_sd", h.log_signal_sd}, {"log_noise_sd", h.log_noise_sd}};
    }

    void from_json(const json& j, GpHyper& h)
    {
        h.log_lengthscales = vec_field(j, "log_lengthscales");
        h.log_signal_sd = double_field(j, "log_signal_sd");
        h.log_noise_sd = double_field(j, "log_noise_sd");
    }

    void to_json(json& j, const FeatureMap& f) { j = json{{"plain", f.plain}, {"angles", f.angles}}; }

    void from_json(const json& j, FeatureMap& f)
    {
        try {
            f.plain = require(j, "plain").get<std::vector<int>>();
            f.angles = require(j, "angles").get<std::vector<int>>();
        }
        catch (const json::exception& e) {
            throw LoadError(std::string("feature map: ") + e.what());
        }
    }

    void to_json(json& j, const TransitionDataset& d)
    {
        j = json{{"state_dim", d.state_dim}, {"control_dim", d.control_dim}, {"inputs", mat_to_json(d.inputs)}, {"targets", mat_to_json(d.targets)}};
    }

    void from_json(const json& j, TransitionDataset& d)
    {
        d.state_dim = int_field(j, "state_dim");
        d.control_dim = int_field(j, "control_dim");
        d.inputs = mat_field(j, "inputs");
        d.targets = mat_field(j, "targets");
        if (d.inputs.rows() == 0) {
            d.inputs.resize(0, d.state_dim + d.control_dim);
            d.targets.resize(0, d.state_dim);
        }
        else if (d.inputs.cols() != d.state_dim + d.control_dim || d.targets.cols() != d.state_dim || d.targets.rows() != d.inputs.rows())
            throw LoadError("field 'inputs' or 'targets' has inconsistent dimensions");
    }

    json model_to_json(const GpModel& model)
    {
        json hyper = json::array();
        for (const auto& h : model.hyper())
            hyper.push_back(h);
        return json{{"format_version", format_version}, {"inputs", mat_to_json(model.inputs())}, {"targets", mat_to_json(model.targets())},
            {"hyper", hyper}, {"input_map", model.input_map()}};
    }

    GpModel model_from_json(const json& j)
    {
        if (int_field(j, "format_version") != format_version)
            throw LoadError("field 'format_version' has an unsupported value");
        const json& hj = require(j, "hyper");
        if (!hj.is_array())
            throw LoadError("field 'hyper' is not an array");
        std::vector<GpHyper> hyper;
        for (const auto& e : hj)
            hyper.push_back(e.get<GpHyper>());
        FeatureMap map = require(j, "input_map").get<FeatureMap>();
        try {
            return GpModel(mat_field(j, "inputs"), mat_field(j, "targets"), std::move(hyper), std::move(map));
        }
        catch (const InvalidInput& e) {
            throw LoadError(std::string("model: ") + e.what());
        }
    }

} // namespace mtps
