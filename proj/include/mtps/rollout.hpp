#ifndef MTPS_ROLLOUT_HPP
#define MTPS_ROLLOUT_HPP

#include <functional>
#include <vector>

#include <mtps/cost.hpp>
#include <mtps/features.hpp>
#include <mtps/gp.hpp>
#include <mtps/policy.hpp>

namespace mtps {

    struct RolloutOptions {
        /// Policy input features over raw [x; g(x, eta)]; an empty map means the raw vector itself.
        FeatureMap policy_map;
        /// Draw the task once per episode (eta carried as extra state) instead of at every step.
        bool episode_task_uncertainty = false;
        /// Optional covariance added to the successor state (state_dim x state_dim); empty means none.
        Mat extra_process_noise;
    };

    struct RolloutResult {
        std::vector<GaussianDist> states; ///< t = 0..T
        std::vector<GaussianDist> controls; ///< t = 0..T-1
        std::vector<double> per_step_cost; ///< expected cost of states 1..T (empty without a cost)
    };

    /// Moment-matched cascade: augment with the task, predict the control, propagate through the GP.
    /// The GP input map (model.input_map(), empty = raw) is applied to raw [x; u].
    RolloutResult rollout(const GpModel& model, const Policy& policy, const TaskSpec& task, const GaussianDist& x0, int horizon,
        const RolloutOptions& opts = {}, const SaturatingCost* cost = nullptr);

    /// Sum of expected immediate costs over t = 1..T.
    double expected_long_term_cost(const GpModel& model, const Policy& policy, const TaskSpec& task, const SaturatingCost& cost,
        const GaussianDist& x0, int horizon, const RolloutOptions& opts = {});

    /// J and dJ/dtheta for one task.
    double long_term_cost_with_grad(const GpModel& model, const Policy& policy, const TaskSpec& task, const SaturatingCost& cost,
        const GaussianDist& x0, int horizon, const RolloutOptions& opts, Vec* grad);

    using CostBuilder = std::function<SaturatingCost(const TaskSpec&)>;

    struct ObjectiveValue {
        double value = 0.0;
        Vec grad;
        std::vector<double> per_task;
        double penalty = 0.0;
    };

    struct ObjectiveOptions {
        RolloutOptions rollout;
        /// Weight of the lambda ||w||^2 penalty on the policy weights.
        double penalty = 1e-4;
        /// Evaluate tasks concurrently (results are reduced in task order either way).
        bool parallel = true;
    };

    /// (1/M) sum_i J(theta, eta_i) + penalty, with its exact gradient.
    ObjectiveValue multi_task_objective(const GpModel& model, const Policy& policy, const std::vector<TaskSpec>& tasks,
        const CostBuilder& cost_builder, const GaussianDist& x0, int horizon, const ObjectiveOptions& opts = {});

} // namespace mtps

#endif
