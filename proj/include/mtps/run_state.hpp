#ifndef MTPS_RUN_STATE_HPP
#define MTPS_RUN_STATE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <mtps/config.hpp>
#include <mtps/gp.hpp>
#include <mtps/policy.hpp>

namespace mtps {

    /// One outer iteration of the training loop. Holds no wall-clock data so logs are reproducible.
    struct MetricsRow {
        int iteration = 0;
        long data_points = 0;
        long model_points = 0;
        double objective = 0.0;
        /// Predicted long-term cost and final-step expected cost per training task.
        std::vector<double> predicted_cost;
        std::vector<double> final_step_cost;
        double trial_task = 0.0;
        /// Mean immediate cost of the applied trial.
        double trial_cost = 0.0;
        int trial_steps = 0;
        int optimizer_iterations = 0;
        int optimizer_evaluations = 0;
        bool optimizer_warning = false;
        std::string status = "ok";
    };

    struct RunState {
        std::string label = "mtps";
        std::uint64_t seed = 0;
        /// Completed outer iterations.
        int iteration = 0;
        TransitionDataset data;
        /// Hyperparameters of the latest model fit (empty before the first fit).
        std::vector<GpHyper> hyper;
        Policy policy;
        /// Policy parameters after each completed iteration.
        std::vector<Vec> checkpoints;
        std::mt19937_64 rng;
        std::vector<MetricsRow> metrics;
    };

    /// CSV with one row per iteration; per-task columns are suffixed with the task index.
    std::string metrics_csv(const std::vector<MetricsRow>& rows);

    json run_state_to_json(const RunState& s, const ExperimentConfig& config);
    /// Restores the state; `config` (optional) receives the embedded configuration.
    RunState run_state_from_json(const json& j, ExperimentConfig* config = nullptr);

    void save_run_state(const std::string& path, const RunState& s, const ExperimentConfig& config);
    RunState load_run_state(const std::string& path, ExperimentConfig* config = nullptr);

} // namespace mtps

#endif
