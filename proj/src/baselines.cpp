#include <mtps/baselines.hpp>
#include <mtps/errors.hpp>
#include <mtps/gp.hpp>

#include <cmath>
#include <limits>

namespace mtps {

    namespace {

        constexpr int format_version = 1;

    } // namespace

    void LocalPolicyBank::validate() const
    {
        if (tasks.empty())
            throw InvalidInput("policy bank: needs at least one entry");
        if (tasks.size() != policies.size())
            throw InvalidInput("policy bank: one policy per task");
        if (!(kappa > 0.0))
            throw InvalidInput("policy bank: kappa must be positive");
        for (std::size_t i = 1; i < tasks.size(); ++i) {
            if (tasks[i].task_dim() != tasks[0].task_dim())
                throw InvalidInput("policy bank: tasks differ in dimension");
            if (policies[i].input_dim() != policies[0].input_dim() || policies[i].output_dim() != policies[0].output_dim())
                throw InvalidInput("policy bank: policies differ in shape");
        }
    }

    std::size_t nn_select(const LocalPolicyBank& bank, const Vec& eta_test)
    {
        bank.validate();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < bank.size(); ++i) {
            const double d = (eta_test - bank.tasks[i].eta).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    Vec gating_weights(const LocalPolicyBank& bank, const Vec& eta_test)
    {
        bank.validate();
        const Eigen::Index n = static_cast<Eigen::Index>(bank.size());
        Vec logits(n);
        for (Eigen::Index i = 0; i < n; ++i)
            logits(i) = -(eta_test - bank.tasks[i].eta).squaredNorm() / (2.0 * bank.kappa);
        const double top = logits.maxCoeff();
        Vec w = (logits.array() - top).exp().matrix();
        return w / w.sum();
    }

    Vec augmented_input(const TaskSpec& task, const Vec& x)
    {
        const Eigen::Index d = x.size();
        const Eigen::Index k = task.task_dim();
        Vec raw(d + k);
        raw.head(d) = x;
        for (Eigen::Index j = 0; j < k; ++j)
            raw(d + j) = task.relation == TaskRelation::Difference ? task.eta(j) - x(task.task_dims[j]) : task.eta(j);
        return raw;
    }

    Vec local_control(const LocalPolicyBank& bank, std::size_t i, const Vec& x)
    {
        const Vec raw = augmented_input(bank.tasks[i], x);
        const bool plain = bank.policy_map.plain.empty() && bank.policy_map.angles.empty();
        return bank.policies[i].eval(plain ? raw : bank.policy_map.apply(raw));
    }

    Vec combined_control(const LocalPolicyBank& bank, const Vec& x, const Vec& eta_test)
    {
        const Vec w = gating_weights(bank, eta_test);
        Vec u = Vec::Zero(bank.policies[0].output_dim());
        for (std::size_t i = 0; i < bank.size(); ++i)
            u += w(static_cast<Eigen::Index>(i)) * local_control(bank, i, x);
        return u;
    }

    json bank_to_json(const LocalPolicyBank& bank)
    {
        json entries = json::array();
        for (std::size_t i = 0; i < bank.size(); ++i)
            entries.push_back(json{{"task", task_to_json(bank.tasks[i])}, {"policy", policy_to_json(bank.policies[i])}});
        json map;
        to_json(map, bank.policy_map);
        return json{{"format_version", format_version}, {"kappa", bank.kappa}, {"policy_map", map}, {"entries", entries}};
    }

    LocalPolicyBank bank_from_json(const json& j)
    {
        if (int_field(j, "format_version") != format_version)
            throw LoadError("field 'format_version' has an unsupported value");
        LocalPolicyBank bank;
        bank.kappa = double_field(j, "kappa");
        from_json(require(j, "policy_map"), bank.policy_map);
        const json& entries = require(j, "entries");
        if (!entries.is_array())
            throw LoadError("field 'entries' is not an array");
        for (const auto& e : entries) {
            bank.tasks.push_back(task_from_json(require(e, "task")));
            bank.policies.push_back(policy_from_json(require(e, "policy")));
        }
        try {
            bank.validate();
        }
        catch (const InvalidInput& e) {
            throw LoadError(std::string("field 'entries': ") + e.what());
        }
        return bank;
    }

} // namespace mtps
