#pragma once

// Group laws, dilations and quasi-distances of the two hypoelliptic
// geometries: the Kolmogorov group (R^3, •) and the multiplicative/additive
// group (R^+ x R^2, ∘) of the arithmetic-average operator.

#include <kolmo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kolmo {

// A space-time point. For the L-geometry x is a price and must be positive;
// for the K-geometry x is a log-price.
struct EventPoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    friend bool operator==(const EventPoint&, const EventPoint&) = default;
};

enum class GeometryKind { K, L };

inline std::string to_string(GeometryKind kind) {
    return kind == GeometryKind::K ? "K" : "L";
}

inline EventPoint identity(GeometryKind kind) {
    return kind == GeometryKind::K ? EventPoint{0.0, 0.0, 0.0} : EventPoint{1.0, 0.0, 0.0};
}

namespace detail {

inline void require_positive_x(GeometryKind kind, const EventPoint& p, const char* what) {
    if (kind == GeometryKind::L && !(p.x > 0.0))
        throw DomainError(std::string(what) + ": L-geometry requires x > 0, got x = " +
                          std::to_string(p.x));
}

}  // namespace detail

// p • q (K) or p ∘ q (L).
inline EventPoint compose(GeometryKind kind, const EventPoint& p, const EventPoint& q) {
    detail::require_positive_x(kind, p, "compose");
    detail::require_positive_x(kind, q, "compose");
    if (kind == GeometryKind::K) return {p.x + q.x, p.y + q.y - q.t * p.x, p.t + q.t};
    return {p.x * q.x, p.y + p.x * q.y, p.t + q.t};
}

inline EventPoint inverse(GeometryKind kind, const EventPoint& p) {
    detail::require_positive_x(kind, p, "inverse");
    if (kind == GeometryKind::K) return {-p.x, -p.y - p.t * p.x, -p.t};
    return {1.0 / p.x, -p.y / p.x, -p.t};
}

// δ_r(x, y, t) = (r x, r^3 y, r^2 t). Only the K-geometry is homogeneous.
inline EventPoint dilate_k(double r, const EventPoint& p) {
    if (!(r > 0.0)) throw DomainError("dilate_k: r must be positive");
    return {r * p.x, r * r * r * p.y, r * r * p.t};
}

// Quasi-distance d_K or d_L. Both are symmetric and left-invariant.
inline double dist(GeometryKind kind, const EventPoint& z, const EventPoint& w) {
    detail::require_positive_x(kind, z, "dist");
    detail::require_positive_x(kind, w, "dist");
    const double dt = z.t - w.t;
    const double shear = z.y - w.y + dt * 0.5 * (z.x + w.x);
    const double scale = kind == GeometryKind::K ? 1.0 : std::sqrt(z.x * w.x);
    return std::abs((z.x - w.x) / scale) + std::cbrt(std::abs(shear / scale)) +
           std::sqrt(std::abs(dt));
}

struct HolderEstimate {
    double alpha = 1.0;
    double seminorm = 0.0;
    std::size_t sample_count = 0;
};

struct HolderSample {
    EventPoint point;
    double value = 0.0;
};

// Largest difference quotient |f(z) - f(w)| / d(z, w)^alpha over all sample
// pairs. This is a lower estimate of the true seminorm.
inline HolderEstimate holder_seminorm(GeometryKind kind, std::span<const HolderSample> samples,
                                      double alpha) {
    if (samples.size() < 2) throw DomainError("holder_seminorm: need at least two samples");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_seminorm: alpha must lie in (0, 1]");

    double best = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double df = std::abs(samples[i].value - samples[j].value);
            const double d = dist(kind, samples[i].point, samples[j].point);
            if (d == 0.0) {
                if (df != 0.0)
                    throw DomainError("holder_seminorm: coincident points carry different values");
                continue;
            }
            best = std::max(best, df / std::pow(d, alpha));
        }
    }
    return {alpha, best, samples.size()};
}

// Rank of span{X, Y, [X, Y]} at p for the hard-coded fields of each geometry:
//   K: X = ∂x,   Y = x∂y - ∂t, [X,Y] = ∂y,   det = 1
//   L: X = x∂x,  Y = x∂y - ∂t, [X,Y] = x∂y,  det = x^2
// The determinant is evaluated in factored form so that tiny x > 0 still
// yields full rank.
inline int lie_rank(GeometryKind kind, const EventPoint& p) {
    detail::require_positive_x(kind, p, "lie_rank");
    if (kind == GeometryKind::K) return 3;
    // det = x * x, nonzero iff x != 0.
    return p.x != 0.0 ? 3 : 1;
}

}  // namespace kolmo
