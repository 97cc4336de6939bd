#ifndef MTPS_BASELINES_HPP
#define MTPS_BASELINES_HPP

#include <vector>

#include <mtps/features.hpp>
#include <mtps/gaussian.hpp>
#include <mtps/json_io.hpp>
#include <mtps/policy.hpp>

namespace mtps {

    /// Independently trained single-task controllers, each paired with the task it was trained on.
    struct LocalPolicyBank {
        std::vector<TaskSpec> tasks;
        std::vector<Policy> policies;
        double kappa = 0.0068;
        /// Input features over raw [x; g(x, eta_i)], shared by all entries (empty = raw vector).
        FeatureMap policy_map;

        std::size_t size() const { return tasks.size(); }
        void validate() const;
    };

    /// Index of the training task closest to eta_test; ties go to the lowest index.
    std::size_t nn_select(const LocalPolicyBank& bank, const Vec& eta_test);

    /// Softmax of -|eta_test - eta_i|^2 / (2 kappa), computed with log-sum-exp.
    Vec gating_weights(const LocalPolicyBank& bank, const Vec& eta_test);

    /// Output of entry i at state x, with its own training task plugged into the augmentation.
    Vec local_control(const LocalPolicyBank& bank, std::size_t i, const Vec& x);

    /// sum_i v_i pi_i(x) with gating weights for eta_test.
    Vec combined_control(const LocalPolicyBank& bank, const Vec& x, const Vec& eta_test);

    /// Raw policy input [x; g(x, eta)] for a deterministic task.
    Vec augmented_input(const TaskSpec& task, const Vec& x);

    json bank_to_json(const LocalPolicyBank& bank);
    LocalPolicyBank bank_from_json(const json& j);

} // namespace mtps

#endif
