#include <mtps/errors.hpp>
#include <mtps/gaussian.hpp>

#include <algorithm>
#include <string>

#include <Eigen/Eigenvalues>

namespace mtps {

    Mat symmetrize(const Mat& m)
    {
        return 0.5 * (m + m.transpose());
    }

    Mat nearest_psd(const Mat& m)
    {
        if (m.size() == 0)
            return m;
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
        if (es.eigenvalues().minCoeff() >= 0.0)
            return symmetrize(m);
        Vec clipped = es.eigenvalues().cwiseMax(0.0);
        Mat out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
        return symmetrize(out);
    }

    GaussianDist::GaussianDist(Vec mean, const Mat& cov) : _mean(std::move(mean))
    {
        if (cov.rows() != _mean.size() || cov.cols() != _mean.size())
            throw InvalidInput("GaussianDist: covariance is " + std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()) + " but mean has dimension " + std::to_string(_mean.size()));
        if (!_mean.allFinite() || !cov.allFinite())
            throw InvalidInput("GaussianDist: non-finite moments");
        _cov = symmetrize(cov);
        if (_cov.size() == 0)
            return;
        // Rounding-level negative eigenvalues are tolerated so that exact blocks survive.
        Eigen::SelfAdjointEigenSolver<Mat> es(_cov, Eigen::EigenvaluesOnly);
        const double floor = -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
        if (es.eigenvalues().minCoeff() < floor)
            _cov = nearest_psd(_cov);
    }

    GaussianDist GaussianDist::dirac(Vec mean)
    {
        const auto n = mean.size();
        return GaussianDist(std::move(mean), Mat::Zero(n, n));
    }

    void TaskSpec::validate(Eigen::Index state_dim) const
    {
        if (sigma_eta.rows() != eta.size() || sigma_eta.cols() != eta.size())
            throw InvalidInput("TaskSpec: sigma_eta must be " + std::to_string(eta.size()) + "x" + std::to_string(eta.size()));
        if (relation == TaskRelation::Difference) {
            if (static_cast<Eigen::Index>(task_dims.size()) != eta.size())
                throw InvalidInput("TaskSpec: difference relation needs one state index per task component");
            for (int d : task_dims)
                if (d < 0 || d >= state_dim)
                    throw InvalidInput("TaskSpec: task index " + std::to_string(d) + " outside state of dimension " + std::to_string(state_dim));
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(sigma_eta), Eigen::EigenvaluesOnly);
        if (eta.size() > 0 && es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()))
            throw InvalidInput("TaskSpec: sigma_eta is not positive semidefinite");
    }

    TaskSpec TaskSpec::difference(Vec eta, Mat sigma_eta, std::vector<int> task_dims)
    {
        TaskSpec t;
        t.eta = std::move(eta);
        t.sigma_eta = std::move(sigma_eta);
        t.relation = TaskRelation::Difference;
        t.task_dims = std::move(task_dims);
        return t;
    }

    TaskSpec TaskSpec::identity(Vec eta, Mat sigma_eta)
    {
        TaskSpec t;
        t.eta = std::move(eta);
        t.sigma_eta = std::move(sigma_eta);
        t.relation = TaskRelation::Identity;
        return t;
    }

    AffineAugmentation augmentation_map(const TaskSpec& task, Eigen::Index state_dim)
    {
        task.validate(state_dim);
        const auto k = task.task_dim();
        AffineAugmentation aug;
        aug.A = Mat::Zero(state_dim + k, state_dim);
        aug.A.topRows(state_dim).setIdentity();
        if (task.relation == TaskRelation::Difference)
            for (Eigen::Index j = 0; j < k; ++j)
                aug.A(state_dim + j, task.task_dims[j]) = -1.0;
        aug.c = Vec::Zero(state_dim + k);
        aug.c.tail(k) = task.eta;
        aug.added_cov = Mat::Zero(state_dim + k, state_dim + k);
        aug.added_cov.bottomRightCorner(k, k) = symmetrize(task.sigma_eta);
        return aug;
    }

    AugmentedDist augment(const GaussianDist& state, const TaskSpec& task)
    {
        const auto n = state.dim();
        const auto k = task.task_dim();
        const AffineAugmentation map = augmentation_map(task, n);

        Vec mean = map.A * state.mean() + map.c;
        Mat cov = map.A * state.cov() * map.A.transpose() + map.added_cov;
        // The state block is copied verbatim so it is unaffected by rounding.
        cov.topLeftCorner(n, n) = state.cov();

        AugmentedDist out;
        out.joint = GaussianDist(std::move(mean), cov);
        out.state_dim = n;
        out.task_dim = k;
        return out;
    }

} // namespace mtps
