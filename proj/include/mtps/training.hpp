#ifndef MTPS_TRAINING_HPP
#define MTPS_TRAINING_HPP

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <mtps/config.hpp>
#include <mtps/optimizer.hpp>
#include <mtps/rollout.hpp>
#include <mtps/run_state.hpp>

namespace mtps {

    /// What one training run learns and with how much plant experience.
    struct TrainingPlan {
        std::string label = "mtps";
        std::vector<TaskSpec> tasks;
        int outer_iterations = 1;
        int random_trial_steps = 40;
        int trial_steps = 35;
        int horizon = 35;
    };

    /// Multi-task policy search over all training tasks.
    TrainingPlan mtps_plan(const ExperimentConfig& config);
    /// Independent single-task controller for training task `index` (zero task covariance, baseline budget).
    TrainingPlan local_plan(const ExperimentConfig& config, std::size_t index);

    /// Initial policy and one trial of uniformly random forces.
    RunState start_run(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed);

    /// The model fit of the next outer iteration: warm-started, on the most recent transitions.
    GpModel fit_model(const ExperimentConfig& config, const RunState& state);

    struct PolicySearchResult {
        Policy policy;
        MinimizeResult optimizer;
        ObjectiveValue value;
    };

    /// Minimizes the multi-task objective starting from `start`.
    PolicySearchResult policy_search(const ExperimentConfig& config, const GpModel& model, const Policy& start,
        const std::vector<TaskSpec>& tasks, int horizon);

    SaturatingCost task_cost(const ExperimentConfig& config, const TaskSpec& task);
    ObjectiveOptions objective_options(const ExperimentConfig& config);

    struct TrainingCallbacks {
        /// Called after every completed (or aborted) outer iteration.
        std::function<void(const RunState&)> checkpoint;
        /// Called after every policy search with the 1-based iteration number.
        std::function<void(int, const MinimizeResult&)> search_done;
        std::ostream* log = nullptr;
    };

    /// One outer iteration: fit the model, search the policy, apply it for one trial, record metrics.
    /// Module errors abort the iteration; they are logged in the metrics row and the state stays consistent.
    void run_iteration(const ExperimentConfig& config, const TrainingPlan& plan, RunState& state, const TrainingCallbacks& cb = {});

    /// Runs iterations until the plan's budget is used up.
    void continue_training(const ExperimentConfig& config, const TrainingPlan& plan, RunState& state, const TrainingCallbacks& cb = {});

    RunState run_training(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed, const TrainingCallbacks& cb = {});

    /// Callbacks that write state.json, metrics.csv and policy.json into `dir` after every iteration
    /// and append each policy search to optimizer_trace.csv.
    TrainingCallbacks directory_checkpoints(const ExperimentConfig& config, const std::string& dir, std::ostream* log);

} // namespace mtps

#endif
