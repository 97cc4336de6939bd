#ifndef MTPS_GAUSSIAN_HPP
#define MTPS_GAUSSIAN_HPP

#include <vector>

#include <Eigen/Core>

namespace mtps {

    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;

    /// (M + M^T) / 2
    Mat symmetrize(const Mat& m);

    /// Clips the spectrum of a symmetric matrix below at zero.
    Mat nearest_psd(const Mat& m);

    /// Multivariate normal; the covariance is symmetrized and PSD-clipped on construction.
    class GaussianDist {
    public:
        GaussianDist() = default;
        GaussianDist(Vec mean, const Mat& cov);

        /// Point mass at `mean`.
        static GaussianDist dirac(Vec mean);

        const Vec& mean() const { return _mean; }
        const Mat& cov() const { return _cov; }
        Eigen::Index dim() const { return _mean.size(); }

    private:
        Vec _mean;
        Mat _cov;
    };

    enum class TaskRelation {
        Difference, ///< g(x, eta) = eta - x[task_dims]
        Identity ///< g(x, eta) = eta
    };

    /// A task: its mean, the training task covariance and how it relates to the state.
    struct TaskSpec {
        Vec eta;
        Mat sigma_eta;
        TaskRelation relation = TaskRelation::Identity;
        /// State components the task is compared with (Difference only).
        std::vector<int> task_dims;

        Eigen::Index task_dim() const { return eta.size(); }

        /// Throws InvalidInput unless the task is consistent with a state of dimension `state_dim`.
        void validate(Eigen::Index state_dim) const;

        static TaskSpec difference(Vec eta, Mat sigma_eta, std::vector<int> task_dims);
        static TaskSpec identity(Vec eta, Mat sigma_eta);
    };

    /// Joint Gaussian over (x, g(x, eta)).
    struct AugmentedDist {
        GaussianDist joint;
        Eigen::Index state_dim = 0;
        Eigen::Index task_dim = 0;
    };

    /// The augmentation as an affine map z = A x + c with additive covariance N
    /// (the task covariance, since eta is independent of x).
    struct AffineAugmentation {
        Mat A;
        Vec c;
        Mat added_cov;
    };

    AffineAugmentation augmentation_map(const TaskSpec& task, Eigen::Index state_dim);

    AugmentedDist augment(const GaussianDist& state, const TaskSpec& task);

} // namespace mtps

#endif
