#pragma once

#include <cmath>

namespace curvelab {

// Quintic smoothstep: 0 for u<=0, 1 for u>=1, C^2 at the endpoints.
inline double smoothstep5(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// C-infinity step built from exp(-1/u); all derivatives vanish at 0 and 1.
// smooth_step(v) + smooth_step(1-v) == 1 identically.
inline double smooth_step(double v) {
    if (v <= 0.0) return 0.0;
    if (v >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / v);
    const double b = std::exp(-1.0 / (1.0 - v));
    return a / (a + b);
}

// 1D window with hat(phi)^2 forming an exact partition of unity over the
// unit-spaced lattice: sum_k bump_sq(u-k) == 1 for every u.
// Plateau |u| <= 0.4, support |u| <= 0.6, C-infinity crossfade between.
struct PouBump {
    static constexpr double plateau = 0.4;
    static constexpr double support = 0.6;

    // hat(phi)(u)^2
    static double sq(double u) {
        const double a = std::abs(u);
        if (a <= plateau) return 1.0;
        if (a >= support) return 0.0;
        return smooth_step((support - a) / (support - plateau));
    }

    // hat(phi)(u) >= 0
    static double value(double u) { return std::sqrt(sq(u)); }
};

// Radial low-pass profile for the dyadic frequency decomposition:
// 1 for r <= 1, 0 for r >= 2, C-infinity in between. Band k is the exact
// telescoping difference lowpass(r/2^k) - lowpass(r/2^{k-1}), so partial sums
// reconstruct data supported below the top scale with no error.
inline double dyadic_lowpass(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    return smooth_step(2.0 - r);
}

} // namespace curvelab
