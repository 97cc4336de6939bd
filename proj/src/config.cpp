#include <mtps/config.hpp>
#include <mtps/errors.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace mtps {

    namespace {

        // Reads optional entries of one JSON object and rejects keys nobody asked for.
        class Section {
        public:
            Section(const json& j, std::string path) : _j(j), _path(std::move(path))
            {
                if (!_j.is_object())
                    throw ConfigError("config entry '" + _path + "' must be an object");
            }

            bool has(const std::string& key) const { return _j.contains(key); }

            Section sub(const std::string& key)
            {
                _seen.insert(key);
                static const json empty = json::object();
                return Section(has(key) ? _j.at(key) : empty, name(key));
            }

            const json* raw(const std::string& key)
            {
                _seen.insert(key);
                return has(key) ? &_j.at(key) : nullptr;
            }

            template <typename T>
            void get(const std::string& key, T& out)
            {
                _seen.insert(key);
                if (!has(key))
                    return;
                const json& v = _j.at(key);
                try {
                    if constexpr (std::is_same_v<T, bool>) {
                        if (!v.is_boolean())
                            throw ConfigError("");
                    }
                    else if constexpr (std::is_integral_v<T>) {
                        if (!v.is_number_integer())
                            throw ConfigError("");
                    }
                    else if constexpr (std::is_floating_point_v<T>) {
                        if (!v.is_number())
                            throw ConfigError("");
                    }
                    out = v.get<T>();
                }
                catch (const std::exception&) {
                    throw ConfigError("config entry '" + name(key) + "' has the wrong type");
                }
            }

            void get_vec(const std::string& key, Vec& out)
            {
                std::vector<double> v;
                if (!has(key)) {
                    _seen.insert(key);
                    return;
                }
                get(key, v);
                out = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
            }

            void finish() const
            {
                for (const auto& item : _j.items())
                    if (!_seen.count(item.key()))
                        throw ConfigError("unknown config entry '" + name(item.key()) + "'");
            }

        private:
            std::string name(const std::string& key) const { return _path.empty() ? key : _path + "." + key; }

            const json& _j;
            std::string _path;
            std::set<std::string> _seen;
        };

        void check(bool ok, const std::string& message)
        {
            if (!ok)
                throw ConfigError(message);
        }

    } // namespace

    std::vector<double> GridSpec::values() const
    {
        if (!(step > 0.0) || !(to >= from))
            throw ConfigError("grid needs from <= to and a positive step");
        const long n = std::lround(std::floor((to - from) / step + 1e-9)) + 1;
        std::vector<double> v(n);
        for (long i = 0; i < n; ++i) {
            // Round to the step's resolution so that 0.1-step grids print as 0.3, not 0.30000000000000004.
            const double x = from + static_cast<double>(i) * step;
            v[i] = std::round(x * 1e9) / 1e9;
        }
        return v;
    }

    GridSpec GridSpec::parse(const std::string& text)
    {
        GridSpec g;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> g.from >> c1 >> g.to >> c2 >> g.step) || c1 != ':' || c2 != ':' || !in.eof())
            throw ConfigError("grid '" + text + "' is not of the form from:to:step");
        g.values();
        return g;
    }

    void ExperimentConfig::validate() const
    {
        check(schema_version == current_schema, "config entry 'schema_version' must be " + std::to_string(current_schema));
        check(scenario == "cartpole", "config entry 'scenario' must be 'cartpole'");
        try {
            plant.validate();
        }
        catch (const InvalidInput& e) {
            throw ConfigError(std::string("config entry 'plant': ") + e.what());
        }
        check(cost_width > 0.0, "config entry 'cost.width' must be positive");
        check(bases >= 1, "config entry 'policy.bases' must be at least 1");
        check(weight_scale >= 0.0, "config entry 'policy.weight_scale' must be nonnegative");
        check(!train_tasks.empty(), "config entry 'tasks.train' must list at least one task");
        check(task_sd >= 0.0, "config entry 'tasks.sd' must be nonnegative");
        check(horizon >= 1, "config entry 'loop.horizon' must be at least 1");
        check(random_trial_steps >= 1, "config entry 'loop.random_trial_steps' must be at least 1");
        check(trial_steps >= 1, "config entry 'loop.trial_steps' must be at least 1");
        check(outer_iterations >= 1, "config entry 'loop.outer_iterations' must be at least 1");
        check(gp_restarts >= 1, "config entry 'model.restarts' must be at least 1");
        check(gp_max_iters >= 1, "config entry 'model.max_iters' must be at least 1");
        check(gp_max_points >= 10, "config entry 'model.max_points' must be at least 10");
        check(policy_max_iters >= 1, "config entry 'optimizer.max_iters' must be at least 1");
        check(policy_grad_tol > 0.0, "config entry 'optimizer.grad_tol' must be positive");
        check(penalty >= 0.0, "config entry 'optimizer.penalty' must be nonnegative");
        check(!seeds.empty(), "config entry 'seeds' must list at least one seed");
        test_grid.values();
        check(eval_rollouts >= 1, "config entry 'evaluation.rollouts' must be at least 1");
        check(eval_steps >= 1, "config entry 'evaluation.steps' must be at least 1");
        check(divergence_threshold > 0.0, "config entry 'evaluation.divergence_threshold' must be positive");
        check(selection_rollouts >= 1, "config entry 'evaluation.selection_rollouts' must be at least 1");
        check(kappa > 0.0, "config entry 'baselines.kappa' must be positive");
        check(baseline_iterations >= 1, "config entry 'baselines.iterations' must be at least 1");
        check(baseline_trial_steps >= 1, "config entry 'baselines.trial_steps' must be at least 1");
    }

    std::vector<TaskSpec> ExperimentConfig::training_tasks() const
    {
        std::vector<TaskSpec> tasks;
        for (double e : train_tasks)
            tasks.push_back(TaskSpec::difference(Vec::Constant(1, e), Mat::Constant(1, 1, task_sd * task_sd), {cartpole::chi}));
        return tasks;
    }

    FeatureMap ExperimentConfig::model_map() const { return cartpole::model_features(model_with_position); }

    FeatureMap ExperimentConfig::policy_map() const { return cartpole::policy_features(policy_with_position); }

    PolicyShape ExperimentConfig::policy_shape() const
    {
        PolicyShape s;
        s.kind = policy_kind;
        s.input_dim = policy_map().dim();
        s.output_dim = 1;
        s.bases = policy_kind == PolicyKind::Rbf ? bases : 0;
        s.u_max = Vec::Constant(1, plant.u_max);
        return s;
    }

    json config_to_json(const ExperimentConfig& c)
    {
        json j;
        j["schema_version"] = c.schema_version;
        j["scenario"] = c.scenario;
        j["plant"] = {{"cart_mass", c.plant.cart_mass}, {"pole_mass", c.plant.pole_mass}, {"pole_length", c.plant.pole_length},
            {"friction", c.plant.friction}, {"gravity", c.plant.gravity}, {"dt", c.plant.dt}, {"substeps", c.plant.substeps},
            {"u_max", c.plant.u_max}, {"process_noise_sd", vec_to_json(c.plant.process_noise_sd)}};
        j["cost"] = {{"width", c.cost_width}};
        j["policy"] = {{"kind", c.policy_kind == PolicyKind::Rbf ? "rbf" : "affine"}, {"bases", c.bases},
            {"weight_scale", c.weight_scale}, {"with_position", c.policy_with_position}};
        j["tasks"] = {{"train", c.train_tasks}, {"sd", c.task_sd}, {"episode_uncertainty", c.episode_task_uncertainty}};
        j["loop"] = {{"horizon", c.horizon}, {"random_trial_steps", c.random_trial_steps}, {"trial_steps", c.trial_steps},
            {"outer_iterations", c.outer_iterations}};
        j["model"] = {{"with_position", c.model_with_position}, {"restarts", c.gp_restarts}, {"max_iters", c.gp_max_iters},
            {"max_points", c.gp_max_points}};
        j["optimizer"] = {{"max_iters", c.policy_max_iters}, {"grad_tol", c.policy_grad_tol}, {"penalty", c.penalty}};
        j["seeds"] = c.seeds;
        j["evaluation"] = {{"grid", {{"from", c.test_grid.from}, {"to", c.test_grid.to}, {"step", c.test_grid.step}}},
            {"rollouts", c.eval_rollouts}, {"steps", c.eval_steps}, {"divergence_threshold", c.divergence_threshold},
            {"selection_rollouts", c.selection_rollouts}};
        j["baselines"] = {{"kappa", c.kappa}, {"budget", c.baseline_budget == BudgetMode::PerController ? "per_controller" : "aggregate"},
            {"iterations", c.baseline_iterations}, {"trial_steps", c.baseline_trial_steps}};
        j["output_dir"] = c.output_dir;
        return j;
    }

    ExperimentConfig config_from_json(const json& j)
    {
        ExperimentConfig c;
        Section root(j, "");
        if (!root.has("schema_version"))
            throw ConfigError("missing config entry 'schema_version'");
        root.get("schema_version", c.schema_version);
        check(c.schema_version == ExperimentConfig::current_schema,
            "config entry 'schema_version' must be " + std::to_string(ExperimentConfig::current_schema));
        root.get("scenario", c.scenario);

        Section plant = root.sub("plant");
        plant.get("cart_mass", c.plant.cart_mass);
        plant.get("pole_mass", c.plant.pole_mass);
        plant.get("pole_length", c.plant.pole_length);
        plant.get("friction", c.plant.friction);
        plant.get("gravity", c.plant.gravity);
        plant.get("dt", c.plant.dt);
        plant.get("substeps", c.plant.substeps);
        plant.get("u_max", c.plant.u_max);
        plant.get_vec("process_noise_sd", c.plant.process_noise_sd);
        plant.finish();

        Section cost = root.sub("cost");
        cost.get("width", c.cost_width);
        cost.finish();

        Section policy = root.sub("policy");
        std::string kind = "rbf";
        policy.get("kind", kind);
        check(kind == "rbf" || kind == "affine", "config entry 'policy.kind' must be 'rbf' or 'affine'");
        c.policy_kind = kind == "rbf" ? PolicyKind::Rbf : PolicyKind::Affine;
        policy.get("bases", c.bases);
        policy.get("weight_scale", c.weight_scale);
        policy.get("with_position", c.policy_with_position);
        policy.finish();

        Section tasks = root.sub("tasks");
        tasks.get("train", c.train_tasks);
        tasks.get("sd", c.task_sd);
        tasks.get("episode_uncertainty", c.episode_task_uncertainty);
        tasks.finish();

        Section loop = root.sub("loop");
        loop.get("horizon", c.horizon);
        loop.get("random_trial_steps", c.random_trial_steps);
        loop.get("trial_steps", c.trial_steps);
        loop.get("outer_iterations", c.outer_iterations);
        loop.finish();

        Section model = root.sub("model");
        model.get("with_position", c.model_with_position);
        model.get("restarts", c.gp_restarts);
        model.get("max_iters", c.gp_max_iters);
        model.get("max_points", c.gp_max_points);
        model.finish();

        Section opt = root.sub("optimizer");
        opt.get("max_iters", c.policy_max_iters);
        opt.get("grad_tol", c.policy_grad_tol);
        opt.get("penalty", c.penalty);
        opt.finish();

        root.get("seeds", c.seeds);

        Section eval = root.sub("evaluation");
        if (const json* g = eval.raw("grid")) {
            if (g->is_string())
                c.test_grid = GridSpec::parse(g->get<std::string>());
            else {
                Section grid(*g, "evaluation.grid");
                grid.get("from", c.test_grid.from);
                grid.get("to", c.test_grid.to);
                grid.get("step", c.test_grid.step);
                grid.finish();
            }
        }
        eval.get("rollouts", c.eval_rollouts);
        eval.get("steps", c.eval_steps);
        eval.get("divergence_threshold", c.divergence_threshold);
        eval.get("selection_rollouts", c.selection_rollouts);
        eval.finish();

        Section base = root.sub("baselines");
        base.get("kappa", c.kappa);
        std::string budget = "per_controller";
        base.get("budget", budget);
        check(budget == "per_controller" || budget == "aggregate", "config entry 'baselines.budget' must be 'per_controller' or 'aggregate'");
        c.baseline_budget = budget == "per_controller" ? BudgetMode::PerController : BudgetMode::Aggregate;
        base.get("iterations", c.baseline_iterations);
        base.get("trial_steps", c.baseline_trial_steps);
        base.finish();

        root.get("output_dir", c.output_dir);
        root.finish();
        c.validate();
        return c;
    }

    ExperimentConfig load_config(const std::string& path)
    {
        json j;
        try {
            j = read_json_file(path);
        }
        catch (const LoadError& e) {
            throw ConfigError(e.what());
        }
        return config_from_json(j);
    }

} // namespace mtps
