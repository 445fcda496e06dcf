#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace esnctl {

/// Affine map between plant units and the network's working range.
/// apply(v) = (v - center) / half_range maps [center-half, center+half]
/// onto [-1, 1]. Identity by default.
struct AffineScaler {
    double center = 0.0;
    double half_range = 1.0;

    double apply(double v) const { return (v - center) / half_range; }
    double invert(double s) const { return center + half_range * s; }

    /// Scaler mapping the sample min/max onto [-1, 1].
    static AffineScaler from_range(const std::vector<double>& samples) {
        if (samples.empty())
            throw std::invalid_argument("AffineScaler: no samples");
        auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        AffineScaler s;
        s.center = 0.5 * (*lo + *hi);
        s.half_range = 0.5 * (*hi - *lo);
        if (s.half_range <= 0.0) s.half_range = 1.0;  // constant signal
        return s;
    }
};

}  // namespace esnctl
