#include <mtps/errors.hpp>
#include <mtps/features.hpp>

#include <algorithm>
#include <cmath>

namespace mtps {

    Vec FeatureMap::apply(const Vec& raw) const
    {
        if (raw.size() < min_raw_dim())
            throw InvalidInput("FeatureMap::apply: raw vector too short");
        Vec out(dim());
        Eigen::Index k = 0;
        for (int i : plain)
            out(k++) = raw(i);
        for (int i : angles) {
            out(k++) = std::sin(raw(i));
            out(k++) = std::cos(raw(i));
        }
        return out;
    }

    Eigen::Index FeatureMap::min_raw_dim() const
    {
        int hi = -1;
        for (int i : plain)
            hi = std::max(hi, i);
        for (int i : angles)
            hi = std::max(hi, i);
        return hi + 1;
    }

} // namespace mtps
