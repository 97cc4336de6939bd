#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include <mtps/errors.hpp>

#include "commands.hpp"

using namespace mtps;

namespace {

    std::vector<double> grid_values(const std::string& spec, const ExperimentConfig& config)
    {
        return spec.empty() ? config.test_grid.values() : GridSpec::parse(spec).values();
    }

    std::uint64_t seed_or_default(long long seed, const ExperimentConfig& config)
    {
        if (seed >= 0)
            return static_cast<std::uint64_t>(seed);
        return config.seeds.empty() ? 1 : config.seeds.front();
    }

    std::string out_or_default(const std::string& out, const ExperimentConfig& config, const std::string& what, std::uint64_t seed)
    {
        return out.empty() ? config.output_dir + "/" + what + "_seed" + std::to_string(seed) : out;
    }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-task policy search with Gaussian-process dynamics models"};
    app.require_subcommand(1);

    std::string config_path;
    long long seed = -1;
    std::string out;
    bool resume = false;
    CLI::App* train = app.add_subcommand("train", "Train a multi-task policy and checkpoint every outer iteration");
    train->add_option("--config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Run seed (default: first seed of the configuration)");
    train->add_option("--out", out, "Run directory (default: <output_dir>/mtps_seed<n>)");
    train->add_flag("--resume", resume, "Continue from the run directory's saved state");

    std::string run_dir;
    std::string grid;
    CLI::App* eval = app.add_subcommand("evaluate", "Evaluate a trained run's best policy on a task grid");
    eval->add_option("--run", run_dir, "Run directory written by train")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--grid", grid, "Test tasks as from:to:step (default: the configuration's grid)");

    std::string mode;
    std::vector<double> kappas;
    std::string baseline_run;
    CLI::App* base = app.add_subcommand("baseline", "Train independent controllers and evaluate a combination of them");
    base->add_option("--mode", mode, "nn (nearest training task) or gating (softmax re-weighting)")
        ->required()
        ->check(CLI::IsMember({"nn", "gating"}));
    base->add_option("--kappa", kappas, "Gating width(s) in m^2; several values give a sweep (default: configuration)");
    base->add_option("--config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    base->add_option("--seed", seed, "Run seed (default: first seed of the configuration)");
    base->add_option("--out", out, "Baseline directory (default: <output_dir>/baseline_seed<n>)");
    base->add_option("--grid", grid, "Test tasks as from:to:step (default: the configuration's grid)");
    base->add_option("--run", baseline_run, "Also copy the results into this training run directory")->check(CLI::ExistingDirectory);

    CLI::App* rep = app.add_subcommand("report", "Write learning curve, policy slice and summary of a run");
    rep->add_option("--run", run_dir, "Run directory written by train")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            const ExperimentConfig config = load_config(config_path);
            const std::uint64_t s = seed_or_default(seed, config);
            const std::string dir = out_or_default(out, config, "mtps", s);
            const RunState state = cli::train(config, mtps_plan(config), s, dir, &std::cerr, resume);
            std::cout << dir << ": " << state.iteration << " iterations, " << state.data.size() << " transitions\n";
        }
        else if (*eval) {
            ExperimentConfig config;
            load_run_state(run_dir + "/state.json", &config);
            const EvaluationTable t = cli::evaluate_run(run_dir, grid_values(grid, config), &std::cerr);
            std::cout << evaluation_csv(t) << "grand_mean," << t.grand_mean << "\n";
        }
        else if (*base) {
            const ExperimentConfig config = load_config(config_path);
            const std::uint64_t s = seed_or_default(seed, config);
            const std::string dir = out_or_default(out, config, "baseline", s);
            const LocalPolicyBank bank = cli::train_bank(config, s, dir, &std::cerr);
            if (kappas.empty())
                kappas.push_back(config.kappa);
            if (mode == "nn")
                kappas.resize(1);
            for (double kappa : kappas) {
                const EvaluationTable t = cli::evaluate_bank(config, bank, mode, kappa, grid_values(grid, config), s);
                const std::string stem = cli::baseline_file_stem(mode, kappa);
                json j = evaluation_to_json(t);
                j["method"] = mode;
                j["kappa"] = kappa;
                j["seed"] = s;
                for (const std::string& target : {dir, baseline_run}) {
                    if (target.empty())
                        continue;
                    cli::write_text(target + "/" + stem + ".csv", evaluation_csv(t));
                    write_json_file(target + "/" + stem + ".json", j);
                }
                std::cout << stem << " grand_mean " << t.grand_mean << "\n";
            }
        }
        else if (*rep) {
            std::cout << dump(cli::report(run_dir)) << "\n";
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
