#ifndef MTPS_EVALUATION_HPP
#define MTPS_EVALUATION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <mtps/baselines.hpp>
#include <mtps/cartpole.hpp>
#include <mtps/config.hpp>
#include <mtps/json_io.hpp>

namespace mtps {

    /// Force applied at state x when the target is eta.
    using Controller = std::function<double(const Vec& x, double eta)>;

    /// Multi-task policy with the deterministic test task plugged into the augmentation.
    Controller mtps_controller(const Policy& policy, const FeatureMap& policy_map);
    /// Local controller of the nearest training task.
    Controller nn_controller(const LocalPolicyBank& bank);
    /// Gating-weighted combination of all local controllers.
    Controller gating_controller(const LocalPolicyBank& bank);

    struct EvalOptions {
        CartPoleParams plant;
        double cost_width = 0.25;
        int rollouts = 100;
        int steps = 35;
        std::uint64_t seed = 0;
        double divergence_threshold = 100.0;
        /// Number of trailing steps summarized separately (swing-up success).
        int final_window = 10;
        bool parallel = true;
    };

    EvalOptions eval_options(const ExperimentConfig& config, std::uint64_t seed);

    struct RolloutRecord {
        /// Mean immediate cost over steps 1..T.
        double mean_cost = 0.0;
        /// Mean immediate cost over the last final_window steps.
        double final_cost = 0.0;
        bool diverged = false;
    };

    struct TaskEvaluation {
        double eta = 0.0;
        double mean = 0.0;
        /// Standard error of the mean over rollouts.
        double se = 0.0;
        int diverged = 0;
        std::vector<RolloutRecord> rollouts;
    };

    struct EvaluationTable {
        std::vector<TaskEvaluation> tasks;
        /// Mean over test tasks of the per-task mean cost.
        double grand_mean = 0.0;
    };

    /// Plant rollouts from sampled initial states; a diverged rollout costs 1 for every remaining step.
    /// Throws InvalidInput for an empty task list or zero rollouts.
    EvaluationTable evaluate(const Controller& controller, const std::vector<double>& tasks, const EvalOptions& opts);

    struct CheckpointChoice {
        std::size_t index = 0;
        /// Mean plant cost over the selection tasks, per candidate.
        std::vector<double> scores;
    };

    /// Scores every candidate by its mean plant cost over `tasks` and picks the lowest (earliest on ties).
    CheckpointChoice select_checkpoint(const std::vector<Controller>& candidates, const std::vector<double>& tasks, const EvalOptions& opts);

    /// One noisy plant trajectory (rows t = 0..steps, the last row without a control).
    std::vector<cartpole::TrajectoryRow> simulate(const Controller& controller, double eta, const EvalOptions& opts, std::uint64_t seed);

    /// CSV: eta,mean,se,lower,upper,diverged (lower/upper are mean -/+ 2 se).
    std::string evaluation_csv(const EvaluationTable& table);
    json evaluation_to_json(const EvaluationTable& table);

} // namespace mtps

#endif
