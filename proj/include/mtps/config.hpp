#ifndef MTPS_CONFIG_HPP
#define MTPS_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <mtps/cartpole.hpp>
#include <mtps/json_io.hpp>
#include <mtps/policy.hpp>

namespace mtps {

    /// Evenly spaced values from..to (inclusive) in increments of step.
    struct GridSpec {
        double from = -1.5;
        double to = 1.5;
        double step = 0.1;

        std::vector<double> values() const;
        /// Parses "from:to:step".
        static GridSpec parse(const std::string& text);
    };

    /// How the plant-experience budget of the independent controllers is counted.
    enum class BudgetMode { PerController, Aggregate };

    struct ExperimentConfig {
        static constexpr int current_schema = 1;

        int schema_version = current_schema;
        std::string scenario = "cartpole";
        CartPoleParams plant;
        /// Cost c = 1 - exp(-|d|^2 / (2 width^2)); width 0.25 gives exp(-8 |d|^2).
        double cost_width = 0.25;

        PolicyKind policy_kind = PolicyKind::Rbf;
        int bases = 100;
        double weight_scale = 0.1;
        /// Include the cart position in the policy input.
        bool policy_with_position = false;

        std::vector<double> train_tasks{-1.0, -0.5, 0.0, 0.5, 1.0};
        /// Task standard deviation used during training (0 for the zero-covariance variant).
        double task_sd = 0.1;
        bool episode_task_uncertainty = false;

        int horizon = 35;
        int random_trial_steps = 40;
        int trial_steps = 35;
        int outer_iterations = 19;

        /// Include the cart position in the dynamics-model input.
        bool model_with_position = false;
        int gp_restarts = 2;
        int gp_max_iters = 100;
        /// Training-set cap for the model used in policy search (most recent transitions are kept).
        int gp_max_points = 300;

        int policy_max_iters = 50;
        /// Absolute gradient-norm tolerance of the policy search. The objective starts on the flat
        /// part of the saturating cost, where gradients are far below the relative default.
        double policy_grad_tol = 1e-9;
        double penalty = 1e-4;

        std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

        GridSpec test_grid;
        int eval_rollouts = 100;
        int eval_steps = 35;
        double divergence_threshold = 100.0;
        /// Rollouts per training task used to choose the best checkpoint.
        int selection_rollouts = 10;

        double kappa = 0.0068;
        BudgetMode baseline_budget = BudgetMode::PerController;
        /// Outer iterations per independent controller (PerController) or in total (Aggregate).
        int baseline_iterations = 9;
        int baseline_trial_steps = 40;

        std::string output_dir = "runs";

        /// Throws ConfigError naming the offending entry.
        void validate() const;

        std::vector<TaskSpec> training_tasks() const;
        FeatureMap model_map() const;
        FeatureMap policy_map() const;
        PolicyShape policy_shape() const;
    };

    json config_to_json(const ExperimentConfig& c);
    /// Missing entries take their defaults; unknown entries and a wrong schema_version are errors.
    ExperimentConfig config_from_json(const json& j);
    ExperimentConfig load_config(const std::string& path);

} // namespace mtps

#endif
