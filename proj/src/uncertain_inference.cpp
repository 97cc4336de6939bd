#include <mtps/errors.hpp>
#include <mtps/uncertain_inference.hpp>

#include <numeric>

namespace mtps {

    namespace {

        std::vector<int> iota_idx(Eigen::Index n)
        {
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            return idx;
        }

        Propagation run(const KernelExpansion& fn, const GaussianDist& input)
        {
            if (input.dim() != fn.input_dim())
                throw InvalidInput("propagate: input has dimension " + std::to_string(input.dim()) + ", expected "
                    + std::to_string(fn.input_dim()));
            BlockMoments bm = expansion_moments(fn, input.mean(), input.cov());
            Mat cross = input.cov() * bm.cross_factor;
            return {GaussianDist(std::move(bm.mean), bm.cov), std::move(cross)};
        }

    } // namespace

    Propagation propagate(const GpModel& model, const GaussianDist& input) { return run(model.expansion(), input); }

    Propagation propagate_rbf(const KernelExpansion& fn, const GaussianDist& input)
    {
        if (!fn.deterministic())
            throw InvalidInput("propagate_rbf: expansion carries GP variance terms");
        return run(fn, input);
    }

    PropagationGrads propagate_with_grads(const GpModel& model, const GaussianDist& input)
    {
        PropagationGrads out;
        out.value = propagate(model, input);
        const ExpansionBlock block(model.expansion());
        MomentChain chain(input.mean(), input.cov());
        const Eigen::Index start = chain.append(block, iota_idx(input.dim()));
        out.jac = output_jacobians(chain, input.dim(), start, block.output_dim(), 0);
        return out;
    }

} // namespace mtps
