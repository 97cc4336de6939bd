#ifndef MTPS_REPORTS_HPP
#define MTPS_REPORTS_HPP

#include <string>
#include <vector>

#include <mtps/evaluation.hpp>
#include <mtps/run_state.hpp>

namespace mtps {

    struct SliceRow {
        double eta = 0.0;
        double u = 0.0;
        bool training_task = false;
        bool on_grid = true;
    };

    /// Control at a fixed state across the task grid; training tasks are merged in and marked.
    std::vector<SliceRow> policy_slice(const Controller& controller, const Vec& x, const std::vector<double>& grid,
        const std::vector<double>& training_tasks);

    /// CSV: eta,u,training_task
    std::string policy_slice_csv(const std::vector<SliceRow>& rows);

    /// Largest |u[i-1] - 2 u[i] + u[i+1]| over an evenly spaced slice (rows off the grid are skipped).
    double max_second_difference(const std::vector<SliceRow>& rows);

    /// CSV: iteration,data_points,objective,mean_predicted_cost,mean_final_step_cost,trial_task,trial_cost
    std::string learning_curve_csv(const std::vector<MetricsRow>& rows);

} // namespace mtps

#endif
