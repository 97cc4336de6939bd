#ifndef MTPS_FEATURES_HPP
#define MTPS_FEATURES_HPP

#include <vector>

#include <mtps/gaussian.hpp>

namespace mtps {

    /// Maps a raw vector to [raw[plain]..., sin(raw[a0]), cos(raw[a0]), sin(raw[a1]), ...].
    /// Used for both the dynamics-model input (raw = [x; u]) and the policy input (raw = [x; g]).
    struct FeatureMap {
        std::vector<int> plain;
        std::vector<int> angles;

        Eigen::Index dim() const { return static_cast<Eigen::Index>(plain.size() + 2 * angles.size()); }
        Vec apply(const Vec& raw) const;
        /// Largest raw index referenced plus one.
        Eigen::Index min_raw_dim() const;
    };

} // namespace mtps

#endif
