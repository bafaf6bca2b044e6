#ifndef COVERTREE_LEVELS_HPP
#define COVERTREE_LEVELS_HPP

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace covertree {

/// Levels are kept inside [-limit, limit] so 2^level stays a normal double.
inline constexpr int kLevelLimit = 1 << 20;

/// Smallest distance the tree accepts between distinct points.
inline const double kMinSeparation = std::ldexp(1.0, -20);

/// Exact 2^i.
inline double pow2(int i) { return std::ldexp(1.0, i); }

/// Exact ceil(log2 d) for finite d > 0.
inline int ceil_log2(double d) {
    int e = 0;
    const double m = std::frexp(d, &e); // d = m * 2^e, m in [0.5, 1)
    return m == 0.5 ? e - 1 : e;
}

/**
 * The lowest level at which a point at distance d from its parent is
 * covered: the unique l with 2^l < d <= 2^(l+1).
 */
inline int cover_level(double d) {
    if (!(d > 0) || !std::isfinite(d)) {
        throw DuplicatePointError("cover level needs a finite positive distance");
    }
    return ceil_log2(d) - 1;
}

} // namespace covertree

#endif
