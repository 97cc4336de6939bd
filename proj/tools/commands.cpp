#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <mtps/errors.hpp>
#include <mtps/reports.hpp>

namespace mtps::cli {

    namespace {

        namespace fs = std::filesystem;

        double seconds_since(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }

        std::vector<double> task_means(const TrainingPlan& plan)
        {
            std::vector<double> etas;
            for (const auto& t : plan.tasks)
                etas.push_back(t.eta(0));
            return etas;
        }

        std::string kappa_tag(double kappa)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", kappa);
            return buf;
        }

        bool finished(const std::string& dir, int budget)
        {
            if (!fs::exists(dir + "/state.json") || !fs::exists(dir + "/best_policy.json"))
                return false;
            return load_run_state(dir + "/state.json").iteration >= budget;
        }

    } // namespace

    std::string read_text(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw LoadError("cannot open '" + path + "'");
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    void write_text(const std::string& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw InvalidInput("cannot write '" + path + "'");
        out << text;
    }

    std::uint64_t selection_seed(std::uint64_t seed) { return seed ^ 0x5e1ec7ed5e1ec7edULL; }

    BestCheckpoint best_checkpoint(const ExperimentConfig& config, const RunState& state, const std::vector<double>& tasks)
    {
        if (state.checkpoints.empty())
            throw InvalidInput("best_checkpoint: the run has no completed iterations");
        const PolicyShape shape = state.policy.shape();
        const FeatureMap map = config.policy_map();
        std::vector<Controller> candidates;
        for (const Vec& theta : state.checkpoints)
            candidates.push_back(mtps_controller(Policy::unpack(theta, shape), map));
        EvalOptions o = eval_options(config, selection_seed(state.seed));
        o.rollouts = config.selection_rollouts;
        const CheckpointChoice choice = select_checkpoint(candidates, tasks, o);
        BestCheckpoint b;
        b.index = choice.index;
        b.scores = choice.scores;
        b.policy = Policy::unpack(state.checkpoints[choice.index], shape);
        return b;
    }

    RunState train(const ExperimentConfig& config, const TrainingPlan& plan, std::uint64_t seed, const std::string& dir,
        std::ostream* log, bool resume)
    {
        const auto t0 = std::chrono::steady_clock::now();
        fs::create_directories(dir);
        const std::string state_path = dir + "/state.json";
        const bool resuming = resume && fs::exists(state_path);
        if (!resuming) {
            fs::remove(dir + "/optimizer_trace.csv");
            write_json_file(dir + "/config.json", config_to_json(config));
        }
        const TrainingCallbacks cb = directory_checkpoints(config, dir, log);
        RunState state;
        double previous = 0.0;
        if (resuming) {
            state = load_run_state(state_path);
            if (state.seed != seed)
                throw InvalidInput("resume: run directory was trained with seed " + std::to_string(state.seed));
            if (fs::exists(dir + "/timing.json"))
                previous = double_field(read_json_file(dir + "/timing.json"), "train_seconds");
        }
        else {
            state = start_run(config, plan, seed);
            state.label = plan.label;
            cb.checkpoint(state);
        }
        continue_training(config, plan, state, cb);

        const BestCheckpoint best = best_checkpoint(config, state, task_means(plan));
        write_json_file(dir + "/best_policy.json", policy_to_json(best.policy));
        write_json_file(dir + "/selection.json",
            json{{"iteration", best.index + 1}, {"scores", best.scores}, {"tasks", task_means(plan)}, {"rollouts", config.selection_rollouts},
                {"seed", selection_seed(seed)}});
        write_json_file(dir + "/timing.json", json{{"seed", seed}, {"label", plan.label}, {"train_seconds", previous + seconds_since(t0)}});
        if (log)
            *log << "[" << plan.label << " seed " << seed << "] best checkpoint: iteration " << best.index + 1 << " (selection cost "
                 << best.scores[best.index] << ")" << std::endl;
        return state;
    }

    EvaluationTable evaluate_run(const std::string& dir, const std::vector<double>& grid, std::ostream* log)
    {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentConfig config;
        const RunState state = load_run_state(dir + "/state.json", &config);
        Policy policy;
        if (fs::exists(dir + "/best_policy.json"))
            policy = policy_from_json(read_json_file(dir + "/best_policy.json"));
        else
            policy = best_checkpoint(config, state, config.train_tasks).policy;
        const EvaluationTable table = evaluate(mtps_controller(policy, config.policy_map()), grid, eval_options(config, state.seed));
        write_text(dir + "/evaluation.csv", evaluation_csv(table));
        json j = evaluation_to_json(table);
        j["method"] = "mtps";
        j["seed"] = state.seed;
        j["rollouts"] = config.eval_rollouts;
        j["seconds"] = seconds_since(t0);
        write_json_file(dir + "/evaluation.json", j);
        if (log)
            *log << "[mtps seed " << state.seed << "] grand mean test cost " << table.grand_mean << std::endl;
        return table;
    }

    LocalPolicyBank train_bank(const ExperimentConfig& config, std::uint64_t seed, const std::string& dir, std::ostream* log)
    {
        fs::create_directories(dir);
        LocalPolicyBank bank;
        bank.kappa = config.kappa;
        bank.policy_map = config.policy_map();
        const std::vector<TaskSpec> tasks = config.training_tasks();
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const TrainingPlan plan = local_plan(config, i);
            const std::string sub = dir + "/local_" + std::to_string(i);
            if (!finished(sub, plan.outer_iterations))
                train(config, plan, seed, sub, log, true);
            bank.tasks.push_back(plan.tasks[0]);
            bank.policies.push_back(policy_from_json(read_json_file(sub + "/best_policy.json")));
        }
        write_json_file(dir + "/bank.json", bank_to_json(bank));
        write_json_file(dir + "/config.json", config_to_json(config));
        return bank;
    }

    EvaluationTable evaluate_bank(const ExperimentConfig& config, LocalPolicyBank bank, const std::string& mode, double kappa,
        const std::vector<double>& grid, std::uint64_t seed)
    {
        bank.kappa = kappa;
        Controller c;
        if (mode == "nn")
            c = nn_controller(bank);
        else if (mode == "gating")
            c = gating_controller(bank);
        else
            throw InvalidInput("baseline mode must be 'nn' or 'gating', got '" + mode + "'");
        return evaluate(c, grid, eval_options(config, seed));
    }

    json report(const std::string& dir)
    {
        ExperimentConfig config;
        const RunState state = load_run_state(dir + "/state.json", &config);
        write_text(dir + "/learning_curve.csv", learning_curve_csv(state.metrics));

        Policy policy = state.policy;
        if (fs::exists(dir + "/best_policy.json"))
            policy = policy_from_json(read_json_file(dir + "/best_policy.json"));
        const Vec x0 = cartpole::initial_distribution().mean();
        const auto slice = policy_slice(mtps_controller(policy, config.policy_map()), x0, config.test_grid.values(), config.train_tasks);
        write_text(dir + "/policy_slice.csv", policy_slice_csv(slice));

        json summary;
        summary["label"] = state.label;
        summary["seed"] = state.seed;
        summary["iterations"] = state.iteration;
        summary["data_points"] = state.data.size();
        summary["slice_max_second_difference"] = max_second_difference(slice);
        if (!state.metrics.empty())
            summary["final_objective"] = state.metrics.back().objective;
        if (fs::exists(dir + "/timing.json"))
            summary["train_seconds"] = read_json_file(dir + "/timing.json").at("train_seconds");
        if (fs::exists(dir + "/selection.json"))
            summary["best_iteration"] = read_json_file(dir + "/selection.json").at("iteration");
        json means = json::object();
        if (fs::exists(dir + "/evaluation.json"))
            means["mtps"] = read_json_file(dir + "/evaluation.json").at("grand_mean");
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("baseline_", 0) == 0 && entry.path().extension() == ".json") {
                const json b = read_json_file(entry.path().string());
                means[name.substr(9, name.size() - 14)] = b.at("grand_mean");
            }
        }
        summary["grand_means"] = means;
        write_json_file(dir + "/summary.json", summary);
        return summary;
    }

    std::string baseline_file_stem(const std::string& mode, double kappa)
    {
        return mode == "nn" ? "baseline_nn" : "baseline_gating_k" + kappa_tag(kappa);
    }

} // namespace mtps::cli
