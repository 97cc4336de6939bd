#ifndef MTPS_GP_HPP
#define MTPS_GP_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <mtps/json_io.hpp>

#include <mtps/features.hpp>
#include <mtps/gaussian.hpp>
#include <mtps/kernel_expansion.hpp>

namespace mtps {

    /// Observed transitions: rows of (state, control) and successor-state deltas.
    struct TransitionDataset {
        Mat inputs; ///< n x (D + F)
        Mat targets; ///< n x D, x_{t+1} - x_t
        Eigen::Index state_dim = 0;
        Eigen::Index control_dim = 0;

        Eigen::Index size() const { return inputs.rows(); }
        void validate() const;
        void append(const Vec& x, const Vec& u, const Vec& x_next);
    };

    /// Log-space SE-ARD hyperparameters of one output.
    struct GpHyper {
        Vec log_lengthscales;
        double log_signal_sd = 0.0;
        double log_noise_sd = -2.0;

        Vec pack() const;
        static GpHyper unpack(const Vec& p);
        double signal_var() const;
        double noise_var() const;
    };

    /// Independent zero-mean SE-ARD GPs, one per output, sharing the training inputs.
    class GpModel {
    public:
        GpModel() = default;
        /// Factorizes K + sn2 I for each output; throws ModelFitError if that fails after jitter.
        GpModel(Mat inputs, Mat targets, std::vector<GpHyper> hyper, FeatureMap input_map = {});

        Eigen::Index input_dim() const { return _inputs.cols(); }
        Eigen::Index output_dim() const { return _targets.cols(); }
        Eigen::Index size() const { return _inputs.rows(); }

        const Mat& inputs() const { return _inputs; }
        const Mat& targets() const { return _targets; }
        const std::vector<GpHyper>& hyper() const { return _hyper; }
        const KernelExpansion& expansion() const { return _fn; }
        /// Jitter added to the diagonal of each output's Gram matrix during factorization.
        const Vec& jitter() const { return _jitter; }
        /// How raw (state, control) rows were mapped to model inputs (informational).
        const FeatureMap& input_map() const { return _input_map; }
        Vec noise_var() const;

        /// Predictive distribution at a model input; outputs are independent.
        GaussianDist predict_point(const Vec& z) const;

        /// Solves (K + sn2 I) x = y for output d (used to check cached weights).
        Vec solve(Eigen::Index d, const Vec& y) const;

    private:
        Mat _inputs;
        Mat _targets;
        std::vector<GpHyper> _hyper;
        FeatureMap _input_map;
        Vec _jitter;
        KernelExpansion _fn;
    };

    /// log p(y_d | X, hyper) and, when `grad` is set, its gradient w.r.t. GpHyper::pack() order.
    /// Throws ModelFitError if the Gram matrix cannot be factorized.
    double log_marginal_likelihood(const Mat& inputs, const Vec& y, const GpHyper& hyper, Vec* grad = nullptr);
    double log_marginal_likelihood(const GpModel& model, Eigen::Index d, Vec* grad = nullptr);

    struct GpFitOptions {
        int restarts = 3;
        int max_iters = 200;
        std::uint64_t seed = 0;
        /// Soft barrier on lengthscales (<= 100 input SDs) and signal-to-noise (<= 500).
        /// Keeps the Gram matrix well conditioned, which the moment-matching variance terms need.
        bool curb = true;
        /// Optional warm start, one entry per output.
        std::optional<std::vector<GpHyper>> init;
    };

    /// Fits hyperparameters by maximizing each output's log marginal likelihood.
    GpModel fit(const Mat& inputs, const Mat& targets, const GpFitOptions& opts, FeatureMap input_map = {});
    GpModel fit(const TransitionDataset& data, const FeatureMap& input_map, const GpFitOptions& opts);

    /// Applies `input_map` to every (state, control) row.
    Mat model_inputs(const TransitionDataset& data, const FeatureMap& input_map);

    void to_json(nlohmann::json& j, const GpHyper& h);
    void from_json(const nlohmann::json& j, GpHyper& h);
    void to_json(nlohmann::json& j, const FeatureMap& f);
    void from_json(const nlohmann::json& j, FeatureMap& f);
    void to_json(nlohmann::json& j, const TransitionDataset& d);
    void from_json(const nlohmann::json& j, TransitionDataset& d);

    nlohmann::json model_to_json(const GpModel& model);
    GpModel model_from_json(const nlohmann::json& j);

} // namespace mtps

#endif
