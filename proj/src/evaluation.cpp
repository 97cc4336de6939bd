#include <mtps/errors.hpp>
#include <mtps/evaluation.hpp>
#include <mtps/parallel.hpp>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace mtps {

    namespace {

        TaskSpec point_task(double eta) { return TaskSpec::difference(Vec::Constant(1, eta), Mat::Zero(1, 1), {cartpole::chi}); }

        std::mt19937_64 rollout_rng(std::uint64_t seed, std::size_t task, int rollout)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(task),
                static_cast<std::uint32_t>(rollout)};
            return std::mt19937_64(seq);
        }

        std::string num(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        RolloutRecord run_one(const Controller& controller, double eta, const EvalOptions& opts, std::mt19937_64& rng)
        {
            const SaturatingCost cost = cartpole::cost(opts.plant, eta, opts.cost_width);
            Vec x = cartpole::sample_initial(rng);
            RolloutRecord r;
            double total = 0.0;
            double tail = 0.0;
            const int window = std::min(opts.final_window, opts.steps);
            for (int t = 0; t < opts.steps; ++t) {
                double c = 1.0;
                if (!r.diverged) {
                    x = cartpole::step(opts.plant, x, controller(x, eta), &rng);
                    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opts.divergence_threshold)
                        r.diverged = true;
                    else
                        c = immediate(cost, x);
                }
                total += c;
                if (t >= opts.steps - window)
                    tail += c;
            }
            r.mean_cost = total / opts.steps;
            r.final_cost = window > 0 ? tail / window : 0.0;
            return r;
        }

    } // namespace

    Controller mtps_controller(const Policy& policy, const FeatureMap& policy_map)
    {
        return [policy, policy_map](const Vec& x, double eta) {
            return policy.eval(policy_map.apply(augmented_input(point_task(eta), x)))(0);
        };
    }

    Controller nn_controller(const LocalPolicyBank& bank)
    {
        bank.validate();
        return [bank](const Vec& x, double eta) { return local_control(bank, nn_select(bank, Vec::Constant(1, eta)), x)(0); };
    }

    Controller gating_controller(const LocalPolicyBank& bank)
    {
        bank.validate();
        return [bank](const Vec& x, double eta) { return combined_control(bank, x, Vec::Constant(1, eta))(0); };
    }

    EvalOptions eval_options(const ExperimentConfig& config, std::uint64_t seed)
    {
        EvalOptions o;
        o.plant = config.plant;
        o.cost_width = config.cost_width;
        o.rollouts = config.eval_rollouts;
        o.steps = config.eval_steps;
        o.seed = seed;
        o.divergence_threshold = config.divergence_threshold;
        return o;
    }

    EvaluationTable evaluate(const Controller& controller, const std::vector<double>& tasks, const EvalOptions& opts)
    {
        if (tasks.empty())
            throw InvalidInput("evaluate: no test tasks");
        if (opts.rollouts < 1)
            throw InvalidInput("evaluate: need at least one rollout per task");
        if (opts.steps < 1)
            throw InvalidInput("evaluate: need at least one step per rollout");
        const std::size_t n = tasks.size() * static_cast<std::size_t>(opts.rollouts);
        std::vector<RolloutRecord> records(n);
        const auto body = [&](std::size_t k) {
            const std::size_t task = k / static_cast<std::size_t>(opts.rollouts);
            const int rollout = static_cast<int>(k % static_cast<std::size_t>(opts.rollouts));
            std::mt19937_64 rng = rollout_rng(opts.seed, task, rollout);
            records[k] = run_one(controller, tasks[task], opts, rng);
        };
        if (opts.parallel)
            parallel_for(n, body);
        else
            for (std::size_t k = 0; k < n; ++k)
                body(k);

        EvaluationTable table;
        double grand = 0.0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            TaskEvaluation te;
            te.eta = tasks[i];
            te.rollouts.assign(records.begin() + static_cast<long>(i * opts.rollouts),
                records.begin() + static_cast<long>((i + 1) * opts.rollouts));
            double sum = 0.0;
            for (const auto& r : te.rollouts) {
                sum += r.mean_cost;
                te.diverged += r.diverged ? 1 : 0;
            }
            te.mean = sum / opts.rollouts;
            double ss = 0.0;
            for (const auto& r : te.rollouts)
                ss += (r.mean_cost - te.mean) * (r.mean_cost - te.mean);
            te.se = opts.rollouts > 1 ? std::sqrt(ss / (opts.rollouts - 1) / opts.rollouts) : 0.0;
            grand += te.mean;
            table.tasks.push_back(std::move(te));
        }
        table.grand_mean = grand / static_cast<double>(tasks.size());
        return table;
    }

    CheckpointChoice select_checkpoint(const std::vector<Controller>& candidates, const std::vector<double>& tasks, const EvalOptions& opts)
    {
        if (candidates.empty())
            throw InvalidInput("select_checkpoint: no candidates");
        CheckpointChoice c;
        for (const auto& ctrl : candidates) {
            c.scores.push_back(evaluate(ctrl, tasks, opts).grand_mean);
            if (c.scores.back() < c.scores[c.index])
                c.index = c.scores.size() - 1;
        }
        return c;
    }

    std::vector<cartpole::TrajectoryRow> simulate(const Controller& controller, double eta, const EvalOptions& opts, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        Vec x = cartpole::sample_initial(rng);
        std::vector<cartpole::TrajectoryRow> rows;
        for (int t = 0; t < opts.steps; ++t) {
            const double u = std::clamp(controller(x, eta), -opts.plant.u_max, opts.plant.u_max);
            rows.push_back({t * opts.plant.dt, x, u});
            x = cartpole::step(opts.plant, x, u, &rng);
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opts.divergence_threshold)
                break;
        }
        rows.push_back({static_cast<double>(rows.size()) * opts.plant.dt, x, std::nan("")});
        return rows;
    }

    std::string evaluation_csv(const EvaluationTable& table)
    {
        std::ostringstream out;
        out << "eta,mean,se,lower,upper,diverged\n";
        for (const auto& t : table.tasks)
            out << num(t.eta) << ',' << num(t.mean) << ',' << num(t.se) << ',' << num(t.mean - 2.0 * t.se) << ','
                << num(t.mean + 2.0 * t.se) << ',' << t.diverged << '\n';
        return out.str();
    }

    json evaluation_to_json(const EvaluationTable& table)
    {
        json tasks = json::array();
        for (const auto& t : table.tasks)
            tasks.push_back({{"eta", t.eta}, {"mean", t.mean}, {"se", t.se}, {"diverged", t.diverged}});
        return json{{"grand_mean", table.grand_mean}, {"tasks", tasks}};
    }

} // namespace mtps
