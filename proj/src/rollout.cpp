#include <mtps/errors.hpp>
#include <mtps/parallel.hpp>
#include <mtps/rollout.hpp>
#include <mtps/trig_moments.hpp>

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>

namespace mtps {

    namespace {

        FeatureMap resolve(const FeatureMap& m, Eigen::Index raw_dim)
        {
            if (!m.plain.empty() || !m.angles.empty())
                return m;
            FeatureMap r;
            r.plain.resize(raw_dim);
            std::iota(r.plain.begin(), r.plain.end(), 0);
            return r;
        }

        std::vector<int> range(Eigen::Index start, Eigen::Index n)
        {
            std::vector<int> idx(n);
            std::iota(idx.begin(), idx.end(), static_cast<int>(start));
            return idx;
        }

        // Positions inside the per-step joint:
        //   [carried (x, and eta in episode mode) | g | sin/cos of angles | v | u | delta]
        class Engine {
        public:
            Engine(const GpModel& model, const Policy& policy, const TaskSpec& task, const RolloutOptions& opts)
                : _policy_block(policy), _squash(TrigSumBlock::sine_squash(policy.u_max())), _gp(model.expansion()),
                  _trig(TrigSumBlock::sin_cos(0))
            {
                const Eigen::Index d = model.output_dim();
                const Eigen::Index k = task.task_dim();
                const Eigen::Index f = policy.output_dim();
                task.validate(d);
                _d = d;
                _k = k;
                _episode = opts.episode_task_uncertainty;
                _dc = _episode ? d + k : d;

                const FeatureMap pmap = resolve(opts.policy_map, d + k);
                const FeatureMap mmap = resolve(model.input_map(), d + f);
                if (pmap.dim() != policy.input_dim())
                    throw InvalidInput("rollout: policy expects " + std::to_string(policy.input_dim()) + " inputs, feature map gives "
                        + std::to_string(pmap.dim()));
                if (mmap.dim() != model.input_dim())
                    throw InvalidInput("rollout: model expects " + std::to_string(model.input_dim()) + " inputs, feature map gives "
                        + std::to_string(mmap.dim()));
                if (pmap.min_raw_dim() > d + k || mmap.min_raw_dim() > d + f)
                    throw InvalidInput("rollout: feature map references a component outside [x; g] or [x; u]");

                _angles = pmap.angles;
                _angles.insert(_angles.end(), mmap.angles.begin(), mmap.angles.end());
                std::sort(_angles.begin(), _angles.end());
                _angles.erase(std::unique(_angles.begin(), _angles.end()), _angles.end());
                for (int a : _angles)
                    if (a >= d)
                        throw InvalidInput("rollout: only state components can enter through sin/cos");
                _trig = TrigSumBlock::sin_cos(static_cast<Eigen::Index>(_angles.size()));

                _g_start = _dc;
                _trig_start = _g_start + k;
                _v_start = _trig_start + 2 * static_cast<Eigen::Index>(_angles.size());
                _u_start = _v_start + f;
                _delta_start = _u_start + f;
                const Eigen::Index n_final = _delta_start + d;

                auto trig_index = [&](int a, bool cos) {
                    const auto pos = std::find(_angles.begin(), _angles.end(), a) - _angles.begin();
                    return static_cast<int>(_trig_start + 2 * pos + (cos ? 1 : 0));
                };
                for (int r : pmap.plain)
                    _policy_idx.push_back(r < d ? r : static_cast<int>(_g_start + (r - d)));
                for (int a : pmap.angles) {
                    _policy_idx.push_back(trig_index(a, false));
                    _policy_idx.push_back(trig_index(a, true));
                }
                for (int r : mmap.plain)
                    _model_idx.push_back(r < d ? r : static_cast<int>(_u_start + (r - d)));
                for (int a : mmap.angles) {
                    _model_idx.push_back(trig_index(a, false));
                    _model_idx.push_back(trig_index(a, true));
                }

                // Augmentation: carried -> [carried; g]
                _aug_a = Mat::Zero(_dc + k, _dc);
                _aug_a.topRows(_dc).setIdentity();
                _aug_c = Vec::Zero(_dc + k);
                _aug_n = Mat::Zero(_dc + k, _dc + k);
                for (Eigen::Index j = 0; j < k; ++j) {
                    if (task.relation == TaskRelation::Difference)
                        _aug_a(_dc + j, task.task_dims[j]) = -1.0;
                    if (_episode)
                        _aug_a(_dc + j, d + j) = 1.0;
                }
                if (!_episode) {
                    _aug_c.tail(k) = task.eta;
                    _aug_n.bottomRightCorner(k, k) = symmetrize(task.sigma_eta);
                }

                // Successor: x' = x + delta (eta carried unchanged in episode mode)
                _next_a = Mat::Zero(_dc, n_final);
                for (Eigen::Index i = 0; i < d; ++i) {
                    _next_a(i, i) = 1.0;
                    _next_a(i, _delta_start + i) = 1.0;
                }
                for (Eigen::Index j = 0; j < (_episode ? k : 0); ++j)
                    _next_a(d + j, d + j) = 1.0;
                _next_c = Vec::Zero(_dc);
                _next_n = Mat::Zero(_dc, _dc);
                if (opts.extra_process_noise.size() > 0) {
                    if (opts.extra_process_noise.rows() != d || opts.extra_process_noise.cols() != d)
                        throw InvalidInput("rollout: extra process noise must be state_dim x state_dim");
                    _next_n.topLeftCorner(d, d) = symmetrize(opts.extra_process_noise);
                }
                _eta = task.eta;
                _sigma_eta = symmetrize(task.sigma_eta);
            }

            Engine(const Engine&) = delete;
            Engine& operator=(const Engine&) = delete;

            void forward(const GaussianDist& x0, int horizon, RolloutResult& res)
            {
                if (horizon < 1)
                    throw InvalidInput("rollout: horizon must be at least 1");
                if (x0.dim() != _d)
                    throw InvalidInput("rollout: initial state has dimension " + std::to_string(x0.dim()) + ", expected " + std::to_string(_d));
                Vec mean(_dc);
                Mat cov = Mat::Zero(_dc, _dc);
                mean.head(_d) = x0.mean();
                cov.topLeftCorner(_d, _d) = x0.cov();
                if (_episode) {
                    mean.tail(_k) = _eta;
                    cov.bottomRightCorner(_k, _k) = _sigma_eta;
                }
                _means.assign(1, mean);
                _covs.assign(1, cov);
                res.states.assign(1, x0);
                res.controls.clear();
                _chains.clear();
                _chains.reserve(horizon);
                const Eigen::Index f = _policy_block.output_dim();
                for (int t = 0; t < horizon; ++t) {
                    try {
                        MomentChain ch(_means.back(), _covs.back());
                        ch.affine(_aug_a, _aug_c, _aug_n);
                        if (!_angles.empty())
                            ch.append(_trig, _angles);
                        ch.append(_policy_block, _policy_idx, 0);
                        ch.append(_squash, range(_v_start, f));
                        ch.append(_gp, _model_idx);
                        res.controls.emplace_back(ch.mean().segment(_u_start, f), ch.cov().block(_u_start, _u_start, f, f));
                        ch.affine(_next_a, _next_c, _next_n);
                        _means.push_back(ch.mean());
                        _covs.push_back(ch.cov());
                        res.states.emplace_back(ch.mean().head(_d), ch.cov().topLeftCorner(_d, _d));
                        _chains.push_back(std::move(ch));
                    }
                    catch (const NumericalDegeneracy& e) {
                        throw NumericalDegeneracy("rollout step " + std::to_string(t) + ": " + e.what());
                    }
                    catch (const InvalidInput& e) {
                        throw NumericalDegeneracy("rollout step " + std::to_string(t) + ": " + e.what());
                    }
                }
            }

            // Expected cost of states 1..T; fills per-step adjoints of the carried moments when `grads` is set.
            double costs(const SaturatingCost& cost, RolloutResult& res, bool grads)
            {
                double total = 0.0;
                res.per_step_cost.clear();
                _cost_m_bar.assign(_means.size(), Vec::Zero(_dc));
                _cost_s_bar.assign(_means.size(), Mat::Zero(_dc, _dc));
                for (std::size_t t = 1; t < _means.size(); ++t) {
                    ExpectedCost c;
                    try {
                        c = expected(cost, _means[t].head(_d), _covs[t].topLeftCorner(_d, _d));
                    }
                    catch (const NumericalDegeneracy& e) {
                        throw NumericalDegeneracy("rollout step " + std::to_string(t) + " cost: " + e.what());
                    }
                    res.per_step_cost.push_back(c.value);
                    total += c.value;
                    if (grads) {
                        _cost_m_bar[t].head(_d) = c.d_mean;
                        _cost_s_bar[t].topLeftCorner(_d, _d) = c.d_cov;
                    }
                }
                return total;
            }

            Vec backward() const
            {
                Vec theta_bar = Vec::Zero(_policy_block.param_count());
                Vec m_bar = _cost_m_bar.back();
                Mat s_bar = _cost_s_bar.back();
                for (std::size_t t = _chains.size(); t-- > 0;) {
                    Vec pm;
                    Mat ps;
                    _chains[t].backward(m_bar, s_bar, pm, ps, &theta_bar);
                    m_bar = pm + _cost_m_bar[t];
                    s_bar = ps + _cost_s_bar[t];
                }
                return theta_bar;
            }

        private:
            PolicyBlock _policy_block;
            TrigSumBlock _squash;
            ExpansionBlock _gp;
            TrigSumBlock _trig;
            Eigen::Index _d = 0, _k = 0, _dc = 0;
            bool _episode = false;
            std::vector<int> _angles, _policy_idx, _model_idx;
            Eigen::Index _g_start = 0, _trig_start = 0, _v_start = 0, _u_start = 0, _delta_start = 0;
            Mat _aug_a, _aug_n, _next_a, _next_n;
            Vec _aug_c, _next_c;
            Vec _eta;
            Mat _sigma_eta;
            std::vector<Vec> _means;
            std::vector<Mat> _covs;
            std::vector<MomentChain> _chains;
            std::vector<Vec> _cost_m_bar;
            std::vector<Mat> _cost_s_bar;
        };

    } // namespace

    RolloutResult rollout(const GpModel& model, const Policy& policy, const TaskSpec& task, const GaussianDist& x0, int horizon,
        const RolloutOptions& opts, const SaturatingCost* cost)
    {
        Engine engine(model, policy, task, opts);
        RolloutResult res;
        engine.forward(x0, horizon, res);
        if (cost)
            engine.costs(*cost, res, false);
        return res;
    }

    double long_term_cost_with_grad(const GpModel& model, const Policy& policy, const TaskSpec& task, const SaturatingCost& cost,
        const GaussianDist& x0, int horizon, const RolloutOptions& opts, Vec* grad)
    {
        Engine engine(model, policy, task, opts);
        RolloutResult res;
        engine.forward(x0, horizon, res);
        const double total = engine.costs(cost, res, grad != nullptr);
        if (grad)
            *grad = engine.backward();
        return total;
    }

    double expected_long_term_cost(const GpModel& model, const Policy& policy, const TaskSpec& task, const SaturatingCost& cost,
        const GaussianDist& x0, int horizon, const RolloutOptions& opts)
    {
        return long_term_cost_with_grad(model, policy, task, cost, x0, horizon, opts, nullptr);
    }

    ObjectiveValue multi_task_objective(const GpModel& model, const Policy& policy, const std::vector<TaskSpec>& tasks,
        const CostBuilder& cost_builder, const GaussianDist& x0, int horizon, const ObjectiveOptions& opts)
    {
        if (tasks.empty())
            throw InvalidInput("multi_task_objective: need at least one task");
        const std::size_t m = tasks.size();
        std::vector<double> values(m);
        std::vector<Vec> grads(m);
        auto body = [&](std::size_t i) {
            try {
                const SaturatingCost cost = cost_builder(tasks[i]);
                values[i] = long_term_cost_with_grad(model, policy, tasks[i], cost, x0, horizon, opts.rollout, &grads[i]);
            }
            catch (const NumericalDegeneracy& e) {
                throw NumericalDegeneracy("task " + std::to_string(i) + ": " + e.what());
            }
        };
        if (opts.parallel)
            parallel_for(m, body);
        else
            for (std::size_t i = 0; i < m; ++i)
                body(i);

        ObjectiveValue out;
        out.per_task = values;
        out.grad = Vec::Zero(policy.shape().param_count());
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            sum += values[i];
            out.grad += grads[i];
        }
        out.value = sum / static_cast<double>(m);
        out.grad /= static_cast<double>(m);

        const Vec theta = policy.pack();
        const Vec mask = policy.penalty_mask();
        const Vec w = theta.cwiseProduct(mask);
        out.penalty = opts.penalty * w.squaredNorm();
        out.value += out.penalty;
        out.grad += 2.0 * opts.penalty * w;
        return out;
    }

} // namespace mtps
