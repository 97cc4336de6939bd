#include <mtps/reports.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mtps {

    namespace {

        std::string num(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        double mean(const std::vector<double>& v)
        {
            return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        }

    } // namespace

    std::vector<SliceRow> policy_slice(const Controller& controller, const Vec& x, const std::vector<double>& grid,
        const std::vector<double>& training_tasks)
    {
        std::vector<SliceRow> rows;
        for (double e : grid)
            rows.push_back({e, controller(x, e), false, true});
        for (double e : training_tasks) {
            auto it = std::find_if(rows.begin(), rows.end(), [e](const SliceRow& r) { return std::abs(r.eta - e) <= 1e-9; });
            if (it != rows.end())
                it->training_task = true;
            else
                rows.push_back({e, controller(x, e), true, false});
        }
        std::stable_sort(rows.begin(), rows.end(), [](const SliceRow& a, const SliceRow& b) { return a.eta < b.eta; });
        return rows;
    }

    std::string policy_slice_csv(const std::vector<SliceRow>& rows)
    {
        std::ostringstream out;
        out << "eta,u,training_task\n";
        for (const auto& r : rows)
            out << num(r.eta) << ',' << num(r.u) << ',' << (r.training_task ? 1 : 0) << '\n';
        return out.str();
    }

    double max_second_difference(const std::vector<SliceRow>& rows)
    {
        std::vector<double> u;
        for (const auto& r : rows)
            if (r.on_grid)
                u.push_back(r.u);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < u.size(); ++i)
            worst = std::max(worst, std::abs(u[i - 1] - 2.0 * u[i] + u[i + 1]));
        return worst;
    }

    std::string learning_curve_csv(const std::vector<MetricsRow>& rows)
    {
        std::ostringstream out;
        out << "iteration,data_points,objective,mean_predicted_cost,mean_final_step_cost,trial_task,trial_cost\n";
        for (const auto& r : rows)
            out << r.iteration << ',' << r.data_points << ',' << num(r.objective) << ',' << num(mean(r.predicted_cost)) << ','
                << num(mean(r.final_step_cost)) << ',' << num(r.trial_task) << ',' << num(r.trial_cost) << '\n';
        return out.str();
    }

} // namespace mtps
