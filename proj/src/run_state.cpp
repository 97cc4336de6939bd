#include <mtps/errors.hpp>
#include <mtps/run_state.hpp>

#include <cstdio>
#include <sstream>

namespace mtps {

    namespace {

        constexpr int format_version = 1;

        std::string num(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        json metrics_to_json(const MetricsRow& r)
        {
            return json{{"iteration", r.iteration}, {"data_points", r.data_points}, {"model_points", r.model_points},
                {"objective", r.objective}, {"predicted_cost", r.predicted_cost}, {"final_step_cost", r.final_step_cost},
                {"trial_task", r.trial_task}, {"trial_cost", r.trial_cost}, {"trial_steps", r.trial_steps},
                {"optimizer_iterations", r.optimizer_iterations}, {"optimizer_evaluations", r.optimizer_evaluations},
                {"optimizer_warning", r.optimizer_warning}, {"status", r.status}};
        }

        std::vector<double> doubles(const json& j, const std::string& field)
        {
            const Vec v = vec_field(j, field);
            return std::vector<double>(v.data(), v.data() + v.size());
        }

        MetricsRow metrics_from_json(const json& j)
        {
            MetricsRow r;
            r.iteration = static_cast<int>(int_field(j, "iteration"));
            r.data_points = static_cast<long>(int_field(j, "data_points"));
            r.model_points = static_cast<long>(int_field(j, "model_points"));
            r.objective = double_field(j, "objective");
            r.predicted_cost = doubles(j, "predicted_cost");
            r.final_step_cost = doubles(j, "final_step_cost");
            r.trial_task = double_field(j, "trial_task");
            r.trial_cost = double_field(j, "trial_cost");
            r.trial_steps = static_cast<int>(int_field(j, "trial_steps"));
            r.optimizer_iterations = static_cast<int>(int_field(j, "optimizer_iterations"));
            r.optimizer_evaluations = static_cast<int>(int_field(j, "optimizer_evaluations"));
            const json& w = require(j, "optimizer_warning");
            if (!w.is_boolean())
                throw LoadError("field 'optimizer_warning' is not a boolean");
            r.optimizer_warning = w.get<bool>();
            r.status = string_field(j, "status");
            return r;
        }

    } // namespace

    std::string metrics_csv(const std::vector<MetricsRow>& rows)
    {
        std::size_t tasks = 0;
        for (const auto& r : rows)
            tasks = std::max(tasks, r.predicted_cost.size());
        std::ostringstream out;
        out << "iteration,data_points,model_points,objective";
        for (std::size_t i = 0; i < tasks; ++i)
            out << ",predicted_cost_" << i;
        for (std::size_t i = 0; i < tasks; ++i)
            out << ",final_step_cost_" << i;
        out << ",trial_task,trial_cost,trial_steps,optimizer_iterations,optimizer_evaluations,optimizer_warning,status\n";
        for (const auto& r : rows) {
            out << r.iteration << ',' << r.data_points << ',' << r.model_points << ',' << num(r.objective);
            for (std::size_t i = 0; i < tasks; ++i)
                out << ',' << (i < r.predicted_cost.size() ? num(r.predicted_cost[i]) : "");
            for (std::size_t i = 0; i < tasks; ++i)
                out << ',' << (i < r.final_step_cost.size() ? num(r.final_step_cost[i]) : "");
            out << ',' << num(r.trial_task) << ',' << num(r.trial_cost) << ',' << r.trial_steps << ',' << r.optimizer_iterations << ','
                << r.optimizer_evaluations << ',' << (r.optimizer_warning ? 1 : 0) << ',';
            // Quote the status so error messages with commas stay in one field.
            out << '"';
            for (char c : r.status)
                out << (c == '"' ? std::string("\"\"") : std::string(1, c));
            out << "\"\n";
        }
        return out.str();
    }

    json run_state_to_json(const RunState& s, const ExperimentConfig& config)
    {
        json hyper = json::array();
        for (const auto& h : s.hyper)
            hyper.push_back(h);
        json checkpoints = json::array();
        for (const auto& c : s.checkpoints)
            checkpoints.push_back(vec_to_json(c));
        json metrics = json::array();
        for (const auto& r : s.metrics)
            metrics.push_back(metrics_to_json(r));
        std::ostringstream rng;
        rng << s.rng;
        return json{{"format_version", format_version}, {"label", s.label}, {"seed", s.seed}, {"iteration", s.iteration},
            {"config", config_to_json(config)}, {"dataset", s.data}, {"hyper", hyper}, {"policy", policy_to_json(s.policy)},
            {"checkpoints", checkpoints}, {"rng", rng.str()}, {"metrics", metrics}};
    }

    RunState run_state_from_json(const json& j, ExperimentConfig* config)
    {
        if (int_field(j, "format_version") != format_version)
            throw LoadError("field 'format_version' has an unsupported value");
        RunState s;
        s.label = string_field(j, "label");
        const json& seed = require(j, "seed");
        if (!seed.is_number_unsigned() && !seed.is_number_integer())
            throw LoadError("field 'seed' is not an integer");
        s.seed = seed.get<std::uint64_t>();
        s.iteration = static_cast<int>(int_field(j, "iteration"));
        if (config) {
            try {
                *config = config_from_json(require(j, "config"));
            }
            catch (const ConfigError& e) {
                throw LoadError(std::string("field 'config': ") + e.what());
            }
        }
        from_json(require(j, "dataset"), s.data);
        const json& hyper = require(j, "hyper");
        if (!hyper.is_array())
            throw LoadError("field 'hyper' is not an array");
        for (const auto& h : hyper) {
            GpHyper g;
            from_json(h, g);
            s.hyper.push_back(g);
        }
        s.policy = policy_from_json(require(j, "policy"));
        const json& cps = require(j, "checkpoints");
        if (!cps.is_array())
            throw LoadError("field 'checkpoints' is not an array");
        for (const auto& c : cps)
            s.checkpoints.push_back(vec_field(json{{"theta", c}}, "theta"));
        std::istringstream rng(string_field(j, "rng"));
        rng >> s.rng;
        if (rng.fail())
            throw LoadError("field 'rng' is not a valid generator state");
        const json& metrics = require(j, "metrics");
        if (!metrics.is_array())
            throw LoadError("field 'metrics' is not an array");
        for (const auto& m : metrics)
            s.metrics.push_back(metrics_from_json(m));
        return s;
    }

    void save_run_state(const std::string& path, const RunState& s, const ExperimentConfig& config)
    {
        write_json_file(path, run_state_to_json(s, config));
    }

    RunState load_run_state(const std::string& path, ExperimentConfig* config)
    {
        return run_state_from_json(read_json_file(path), config);
    }

} // namespace mtps
