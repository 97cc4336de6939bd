#ifndef MTPS_UNCERTAIN_INFERENCE_HPP
#define MTPS_UNCERTAIN_INFERENCE_HPP

#include <mtps/gp.hpp>
#include <mtps/kernel_expansion.hpp>
#include <mtps/moment_chain.hpp>

namespace mtps {

    struct Propagation {
        GaussianDist output;
        Mat cross; ///< cov(input, output), E x D
    };

    /// Exact moments of the GP predictive marginal under a Gaussian input (including noise variance).
    Propagation propagate(const GpModel& model, const GaussianDist& input);

    /// Exact moments of a deterministic RBF expansion under a Gaussian input.
    Propagation propagate_rbf(const KernelExpansion& fn, const GaussianDist& input);

    struct PropagationGrads {
        Propagation value;
        /// Jacobians in output_jacobians() layout: rows [mean; vec(cov); vec(cross)], columns the input moments.
        MomentJacobians jac;
    };

    PropagationGrads propagate_with_grads(const GpModel& model, const GaussianDist& input);

} // namespace mtps

#endif
