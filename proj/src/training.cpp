#include <mtps/baselines.hpp>
#include <mtps/errors.hpp>
#include <mtps/training.hpp>
#include <mtps/trig_moments.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace mtps {

    namespace {

        // Moments of map([x; g]) for a Gaussian raw vector.
        GaussianDist feature_moments(const GaussianDist& raw, const FeatureMap& map)
        {
            MomentChain chain(raw.mean(), raw.cov());
            const TrigSumBlock trig = TrigSumBlock::sin_cos(static_cast<Eigen::Index>(map.angles.size()));
            Eigen::Index start = 0;
            if (!map.angles.empty())
                start = chain.append(trig, map.angles);
            std::vector<int> idx = map.plain;
            for (std::size_t i = 0; i < map.angles.size(); ++i) {
                idx.push_back(static_cast<int>(start + 2 * static_cast<Eigen::Index>(i)));
                idx.push_back(static_cast<int>(start + 2 * static_cast<Eigen::Index>(i) + 1));
            }
            chain.select(idx);
            return GaussianDist(chain.mean(), chain.cov());
        }

        // Task distribution of the training set: the tasks' spread plus their own covariance.
        TaskSpec pooled_task(const std::vector<TaskSpec>& tasks)
        {
            const Eigen::Index k = tasks[0].task_dim();
            Vec mean = Vec::Zero(k);
            for (const auto& t : tasks)
                mean += t.eta;
            mean /= static_cast<double>(tasks.size());
            Mat cov = Mat::Zero(k, k);
            for (const auto& t : tasks)
                cov += (t.eta - mean) * (t.eta - mean).transpose() + t.sigma_eta;
            cov /= static_cast<double>(tasks.size());
            TaskSpec p = tasks[0];
            p.eta = mean;
            p.sigma_eta = cov;
            return p;
        }

        TaskSpec deterministic(const TaskSpec& t)
        {
            TaskSpec d = t;
            d.sigma_eta = Mat::Zero(t.task_dim(), t.task_dim());
            return d;
        }

        bool diverged(const Vec& x, double threshold) { return !x.allFinite() || x.cwiseAbs().maxCoeff() > threshold; }

        TransitionDataset recent(const TransitionDataset& data, int max_points)
        {
            if (data.size() <= max_points)
                return data;
            TransitionDataset d = data;
            d.inputs = data.inputs.bottomRows(max_points);
            d.targets = data.targets.bottomRows(max_points);
            return d;
        }

    } // namespace

    TrainingPlan mtps_plan(const ExperimentConfig& config)
    {
        TrainingPlan p;
        p.label = "mtps";
        p.tasks = config.training_tasks();
        p.outer_iterations = config.outer_iterations;
        p.random_trial_steps = config.random_trial_steps;
        p.trial_steps = config.trial_steps;
        p.horizon = config.horizon;
        return p;
    }

    TrainingPlan local_plan(const ExperimentConfig& config, std::size_t index)
    {
        const std::vector<TaskSpec> all = config.training_tasks();
        if (index >= all.size())
            throw InvalidInput("local_plan: task index out of range");
        TrainingPlan p;
        p.label = "local_" + std::to_string(index);
        p.tasks = {deterministic(all[index])};
        p.random_trial_steps = config.random_trial_steps;
        p.trial_steps = config.baseline_trial_steps;
        p.horizon = config.horizon;
        if (config.baseline_budget == BudgetMode::PerController)
            p.outer_iterations = config.baseline_iterations;
        else
            p.outer_iterations = std::max(1, config.baseline_iterations / static_cast<int>(all.size()));
        return p;
    }

    SaturatingCost task_cost(const ExperimentConfig& config, const TaskSpec& task)
    {
        return cartpole::cost(config.plant, task.eta(0), config.cost_width);
    }

    ObjectiveOptions objective_options(const ExperimentConfig& config)
    {
        ObjectiveOptions o;
        o.rollout.policy_map = config.policy_map();
        o.rollout.episode_task_uncertainty = config.episode_task_uncertainty;
        o.penalty = config.penalty;
        return o;
    }

    RunState start_run(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed)
    {
        config.validate();
        if (plan.tasks.empty())
            throw InvalidInput("training plan has no tasks");
        RunState s;
        s.label = plan.label;
        s.seed = seed;
        s.rng.seed(seed);

        // Centers follow the policy features under p(x0) combined with the task distribution.
        const AugmentedDist raw = augment(cartpole::initial_distribution(), pooled_task(plan.tasks));
        PolicyInitSpec init{feature_moments(raw.joint, config.policy_map()), config.weight_scale};
        s.policy = init_random(config.policy_shape(), seed, init);

        std::uniform_real_distribution<double> force(-config.plant.u_max, config.plant.u_max);
        Vec x = cartpole::sample_initial(s.rng);
        for (int t = 0; t < plan.random_trial_steps; ++t) {
            const double u = force(s.rng);
            const Vec next = cartpole::step(config.plant, x, u, &s.rng);
            if (diverged(next, config.divergence_threshold))
                break;
            s.data.append(x, Vec::Constant(1, u), next);
            x = next;
        }
        return s;
    }

    GpModel fit_model(const ExperimentConfig& config, const RunState& state)
    {
        GpFitOptions o;
        o.restarts = config.gp_restarts;
        o.max_iters = config.gp_max_iters;
        o.seed = state.seed * 1000 + static_cast<std::uint64_t>(state.iteration);
        if (!state.hyper.empty())
            o.init = state.hyper;
        return fit(recent(state.data, config.gp_max_points), config.model_map(), o);
    }

    PolicySearchResult policy_search(const ExperimentConfig& config, const GpModel& model, const Policy& start,
        const std::vector<TaskSpec>& tasks, int horizon)
    {
        const ObjectiveOptions opts = objective_options(config);
        const CostBuilder builder = [&config](const TaskSpec& t) { return task_cost(config, t); };
        const GaussianDist x0 = cartpole::initial_distribution();
        const PolicyShape shape = start.shape();
        // Search over weights measured in units of the force limit so all parameter groups are O(1).
        const Vec scale = (start.penalty_mask().array() * (shape.u_max.maxCoeff() - 1.0) + 1.0).matrix();
        const Objective f = [&](const Vec& xi, Vec& grad) {
            try {
                const ObjectiveValue v = multi_task_objective(model, Policy::unpack(xi.cwiseProduct(scale), shape), tasks, builder, x0, horizon, opts);
                grad = v.grad.cwiseProduct(scale);
                return v.value;
            }
            catch (const NumericalDegeneracy&) {
                grad = Vec::Zero(xi.size());
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        MinimizeOptions mo;
        mo.max_iters = config.policy_max_iters;
        mo.grad_tol = config.policy_grad_tol;
        PolicySearchResult r;
        r.optimizer = minimize(f, start.pack().cwiseQuotient(scale), mo);
        r.policy = Policy::unpack(r.optimizer.x.cwiseProduct(scale), shape);
        r.value = multi_task_objective(model, r.policy, tasks, builder, x0, horizon, opts);
        return r;
    }

    void run_iteration(const ExperimentConfig& config, const TrainingPlan& plan, RunState& state, const TrainingCallbacks& cb)
    {
        MetricsRow row;
        row.iteration = state.iteration + 1;
        row.data_points = static_cast<long>(state.data.size());
        row.model_points = std::min<long>(row.data_points, config.gp_max_points);
        const TaskSpec& trial_task = plan.tasks[static_cast<std::size_t>(state.iteration) % plan.tasks.size()];
        row.trial_task = trial_task.eta(0);
        try {
            const GpModel model = fit_model(config, state);
            const PolicySearchResult search = policy_search(config, model, state.policy, plan.tasks, plan.horizon);
            row.objective = search.value.value;
            row.predicted_cost = search.value.per_task;
            const ObjectiveOptions opts = objective_options(config);
            for (const auto& t : plan.tasks) {
                const SaturatingCost c = task_cost(config, t);
                const RolloutResult r = rollout(model, search.policy, t, cartpole::initial_distribution(), plan.horizon, opts.rollout, &c);
                row.final_step_cost.push_back(r.per_step_cost.back());
            }
            row.optimizer_iterations = static_cast<int>(search.optimizer.trace.size()) - 1;
            row.optimizer_evaluations = search.optimizer.evals;
            row.optimizer_warning = search.optimizer.warning;
            if (cb.search_done)
                cb.search_done(row.iteration, search.optimizer);

            // Apply the policy to the plant for one trial on the scheduled task.
            const TaskSpec task = deterministic(trial_task);
            const SaturatingCost cost = task_cost(config, task);
            const FeatureMap pmap = config.policy_map();
            Vec x = cartpole::sample_initial(state.rng);
            double total = 0.0;
            int steps = 0;
            for (int t = 0; t < plan.trial_steps; ++t) {
                const double u = search.policy.eval(pmap.apply(augmented_input(task, x)))(0);
                const Vec next = cartpole::step(config.plant, x, u, &state.rng);
                if (diverged(next, config.divergence_threshold)) {
                    row.status = "trial diverged at step " + std::to_string(t);
                    total += static_cast<double>(plan.trial_steps - t);
                    break;
                }
                state.data.append(x, Vec::Constant(1, u), next);
                total += immediate(cost, next);
                x = next;
                ++steps;
            }
            row.trial_cost = total / plan.trial_steps;
            row.trial_steps = steps;
            state.hyper = model.hyper();
            state.policy = search.policy;
        }
        catch (const std::exception& e) {
            row.status = std::string("aborted: ") + e.what();
        }
        state.checkpoints.push_back(state.policy.pack());
        state.metrics.push_back(row);
        ++state.iteration;
        if (cb.log) {
            *cb.log << "[" << state.label << " seed " << state.seed << "] iteration " << row.iteration << " data " << row.data_points
                    << " objective " << row.objective << " trial task " << row.trial_task << " trial cost " << row.trial_cost << " ("
                    << row.status << ")" << std::endl;
        }
        if (cb.checkpoint)
            cb.checkpoint(state);
    }

    void continue_training(const ExperimentConfig& config, const TrainingPlan& plan, RunState& state, const TrainingCallbacks& cb)
    {
        while (state.iteration < plan.outer_iterations)
            run_iteration(config, plan, state, cb);
    }

    RunState run_training(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed, const TrainingCallbacks& cb)
    {
        RunState s = start_run(config, plan, seed);
        if (cb.checkpoint)
            cb.checkpoint(s);
        continue_training(config, plan, s, cb);
        return s;
    }

    TrainingCallbacks directory_checkpoints(const ExperimentConfig& config, const std::string& dir, std::ostream* log)
    {
        std::filesystem::create_directories(dir);
        TrainingCallbacks cb;
        cb.log = log;
        cb.checkpoint = [config, dir](const RunState& s) {
            save_run_state(dir + "/state.json", s, config);
            write_json_file(dir + "/policy.json", policy_to_json(s.policy));
            std::ofstream(dir + "/metrics.csv", std::ios::binary) << metrics_csv(s.metrics);
        };
        const std::string trace = dir + "/optimizer_trace.csv";
        if (!std::filesystem::exists(trace))
            std::ofstream(trace, std::ios::binary) << "outer_iteration,iteration,f,grad_norm,evals\n";
        cb.search_done = [trace](int outer, const MinimizeResult& r) {
            std::ofstream out(trace, std::ios::binary | std::ios::app);
            out.precision(17);
            for (const auto& t : r.trace)
                out << outer << ',' << t.iteration << ',' << t.f << ',' << t.grad_norm << ',' << t.evals << '\n';
        };
        return cb;
    }

} // namespace mtps
