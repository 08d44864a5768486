#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ronfa {

/// Working-precision vector used by the classifier; stored embeddings are
/// widened to double on entry to an episode.
using Point = std::vector<double>;

inline Point to_point(std::span<const float> features) {
    return Point(features.begin(), features.end());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

/// Scales `x` to unit L2 norm; the zero vector is left as is.
inline void l2_normalize(Point& x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    if (sq == 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : x) v *= inv;
}

/// Index of the smallest value; ties go to the lowest index.
inline std::size_t argmin(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

/// Index of the nearest center to `x`, lowest index on ties.
inline std::size_t nearest_center(std::span<const double> x, std::span<const Point> centers) {
    std::vector<double> d(centers.size());
    for (std::size_t c = 0; c < centers.size(); ++c) d[c] = squared_distance(x, centers[c]);
    return argmin(d);
}

}  // namespace ronfa
