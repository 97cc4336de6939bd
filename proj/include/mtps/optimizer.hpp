#ifndef MTPS_OPTIMIZER_HPP
#define MTPS_OPTIMIZER_HPP

#include <functional>
#include <string>
#include <vector>

#include <mtps/gaussian.hpp>

namespace mtps {

    /// Returns f(x) and writes the gradient into `grad`.
    using Objective = std::function<double(const Vec& x, Vec& grad)>;

    struct MinimizeOptions {
        int max_iters = 150;
        /// Absolute gradient-norm tolerance; a negative value means 1e-5 * max(1, |f|).
        double grad_tol = -1.0;
        int max_line_search_evals = 25;
        /// Switch to limited memory above this many variables.
        Eigen::Index lbfgs_threshold = 1000;
        int memory = 30;
        double c1 = 1e-4;
        double c2 = 0.9;
    };

    struct TraceEntry {
        int iteration = 0;
        double f = 0.0;
        double grad_norm = 0.0;
        int evals = 0; ///< cumulative function evaluations
    };

    struct MinimizeResult {
        Vec x;
        double f = 0.0;
        Vec grad;
        std::vector<TraceEntry> trace;
        int evals = 0;
        bool converged = false;
        /// Set when the run stopped on a line-search failure or a non-finite value.
        bool warning = false;
        std::string message;
    };

    /// Quasi-Newton minimization (BFGS, or L-BFGS for large problems) with a strong Wolfe line search.
    /// Throws OptimizerError if f or its gradient is not finite at x0.
    MinimizeResult minimize(const Objective& f, const Vec& x0, const MinimizeOptions& opts = {});

    /// CSV with header iteration,f,grad_norm,evals.
    std::string trace_csv(const std::vector<TraceEntry>& trace);

} // namespace mtps

#endif
