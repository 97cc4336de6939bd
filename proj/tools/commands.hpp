#ifndef MTPS_TOOLS_COMMANDS_HPP
#define MTPS_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <mtps/baselines.hpp>
#include <mtps/config.hpp>
#include <mtps/evaluation.hpp>
#include <mtps/run_state.hpp>
#include <mtps/training.hpp>

namespace mtps::cli {

    /// Seed of the validation rollouts that choose the best checkpoint (independent of the test rollouts).
    std::uint64_t selection_seed(std::uint64_t seed);

    struct BestCheckpoint {
        std::size_t index = 0; ///< 0-based outer iteration
        Policy policy;
        std::vector<double> scores;
    };

    /// Checkpoint with the lowest mean plant cost over `tasks` (selection_rollouts rollouts per task).
    BestCheckpoint best_checkpoint(const ExperimentConfig& config, const RunState& state, const std::vector<double>& tasks);

    /// Trains (resuming from dir/state.json when `resume` is set and the file exists) and fills `dir` with
    /// config.json, state.json, policy.json, metrics.csv, optimizer_trace.csv, timing.json,
    /// best_policy.json and selection.json.
    RunState train(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed, const std::string& dir,
        std::ostream* log, bool resume = false);

    /// Evaluates the best policy of a training run on `grid`; writes evaluation.csv and evaluation.json into the run.
    EvaluationTable evaluate_run(const std::string& dir, const std::vector<double>& grid, std::ostream* log);

    /// Trains the independent controllers into dir/local_<i> (finished ones are reused) and writes dir/bank.json.
    LocalPolicyBank train_bank(const ExperimentConfig& config, std::uint64_t seed, const std::string& dir, std::ostream* log);

    /// Evaluates a bank with nearest-neighbour selection ("nn") or gating ("gating") at the given kappa.
    EvaluationTable evaluate_bank(const ExperimentConfig& config, LocalPolicyBank bank, const std::string& mode, double kappa,
        const std::vector<double>& grid, std::uint64_t seed);

    /// File stem of a baseline result: baseline_nn or baseline_gating_k<kappa>.
    std::string baseline_file_stem(const std::string& mode, double kappa);

    /// Writes learning_curve.csv, policy_slice.csv and summary.json into a training run directory.
    json report(const std::string& dir);

    /// Reads a file into a string; throws LoadError if it cannot be opened.
    std::string read_text(const std::string& path);
    void write_text(const std::string& path, const std::string& text);

} // namespace mtps::cli

#endif
