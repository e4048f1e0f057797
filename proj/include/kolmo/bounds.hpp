#pragma once

// Two-sided Gaussian / control-value envelopes for the fundamental
// solutions, the integral band and a fit-on-train / assert-on-test helper.

#include <kolmo/control.hpp>
#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace kolmo {

struct EnvelopeConstants {
    double lambda_minus = 1.0;
    double lambda_plus = 1.0;
    double c_minus = 1.0;
    double c_plus = 1.0;
    double epsilon = 0.25;
    double Lambda = 1.0;
    double horizon = 1.0;
    // Multipliers of psi inside the exponentials of the L-envelope
    // (C^- in the lower bound, c^+ in the upper one).
    double exponent_minus = 0.5;
    double exponent_plus = 0.125;
};

struct Envelope {
    double lower = 0.0;
    double upper = 0.0;
};

inline void validate(const EnvelopeConstants& c) {
    if (!(c.lambda_minus > 0.0 && c.lambda_plus > 0.0))
        throw DomainError("envelope: lambda_minus and lambda_plus must be positive");
    if (c.lambda_minus > c.lambda_plus) throw DomainError("envelope: need lambda_minus <= lambda_plus");
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw DomainError("envelope: epsilon must lie in (0, 1)");
}

inline Envelope gamma_k_envelope(const EnvelopeConstants& c, const EventPoint& z, const EventPoint& pole) {
    validate(c);
    if (!(z.t > pole.t)) return {0.0, 0.0};
    return {c.c_minus * gamma_k({c.lambda_minus}, z, pole), c.c_plus * gamma_k({c.lambda_plus}, z, pole)};
}

inline bool integral_band_check(double kernel_integral, double Lambda, double dt, double tol) {
    if (!(dt > 0.0)) throw DomainError("integral_band_check: dt must be positive");
    return std::exp(-Lambda * dt) - tol <= kernel_integral && kernel_integral <= std::exp(Lambda * dt) + tol;
}

// C_bar exp(-C_bar (xi^2 + eta^2) / (t - tau)) at the probe (xi, eta).
inline double gaussian_tail_envelope(const EventPoint& z, double pole_time, double C_bar, double R0,
                                     const EventPoint& probe) {
    if (!(C_bar > 0.0) || !(R0 > 0.0)) throw DomainError("gaussian_tail_envelope: C_bar and R0 must be positive");
    const double r2 = probe.x * probe.x + probe.y * probe.y;
    if (r2 < R0 * R0) throw DomainError("gaussian_tail_envelope: probe lies inside the radius R0");
    if (!(pole_time < probe.t && probe.t < z.t))
        throw DomainError("gaussian_tail_envelope: need pole_time < probe.t < z.t");
    return C_bar * std::exp(-C_bar * r2 / (z.t - pole_time));
}

// Whether (x, y, t) lies in the window y + x0 eps (t - t0) < y0, t > t0
// where the L-envelope is stated.
inline bool gamma_l_envelope_admissible(double epsilon, const EventPoint& z, const EventPoint& pole) {
    return z.x > 0.0 && pole.x > 0.0 && z.t > pole.t &&
           z.y + pole.x * epsilon * (z.t - pole.t) < pole.y;
}

inline Envelope gamma_l_envelope(const EnvelopeConstants& c, const EventPoint& z, const EventPoint& pole) {
    validate(c);
    detail::require_positive_x(GeometryKind::L, z, "gamma_l_envelope");
    detail::require_positive_x(GeometryKind::L, pole, "gamma_l_envelope");
    if (z.y >= pole.y || z.t <= pole.t) return {0.0, 0.0};
    if (!gamma_l_envelope_admissible(c.epsilon, z, pole))
        throw DomainError("gamma_l_envelope: point outside y + x0 eps (t - t0) < y0");
    const double dt = z.t - pole.t;
    const double eps = c.epsilon;
    const double pref = 1.0 / (pole.x * pole.x * dt * dt);
    const double psi_lo = psi({{z.x, z.y + pole.x * eps * dt, z.t - eps * dt}, pole}).cost;
    // The upper bound shifts by the bare epsilon, not eps * (t - t0).
    const double psi_hi = psi({{z.x, z.y - pole.x * eps, z.t + eps}, pole}).cost;
    return {c.c_minus * pref * std::exp(-c.exponent_minus * psi_lo),
            c.c_plus * pref * std::exp(-c.exponent_plus * psi_hi)};
}

// Fit-on-train / assert-on-test for envelopes of the form c * shape(z).
struct EnvelopeSample {
    double value = 0.0;        // candidate kernel
    double error = 0.0;        // its numerical error estimate
    double lower_shape = 0.0;  // envelope with unit prefactor
    double upper_shape = 0.0;
};

struct EnvelopeFit {
    double c_minus = 0.0;
    double c_plus = 0.0;
    std::size_t used = 0;
};

// c_minus = min(value / lower_shape) / margin, c_plus = max(value / upper_shape) * margin.
inline EnvelopeFit fit_envelope(const std::vector<EnvelopeSample>& train, double margin) {
    if (!(margin >= 1.0)) throw DomainError("fit_envelope: margin must be >= 1");
    EnvelopeFit f;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& s : train) {
        if (!(s.lower_shape > 0.0) || !(s.upper_shape > 0.0)) continue;
        lo = std::min(lo, s.value / s.lower_shape);
        hi = std::max(hi, s.value / s.upper_shape);
        ++f.used;
    }
    if (f.used == 0) throw DomainError("fit_envelope: no usable training samples");
    f.c_minus = lo / margin;
    f.c_plus = hi * margin;
    return f;
}

struct SandwichReport {
    std::size_t checked = 0;
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    double worst_lower_ratio = std::numeric_limits<double>::infinity();  // min value / lower
    double worst_upper_ratio = 0.0;                                      // max value / upper
};

inline SandwichReport check_sandwich(const std::vector<EnvelopeSample>& test, const EnvelopeFit& fit) {
    SandwichReport r;
    for (const auto& s : test) {
        const double lower = fit.c_minus * s.lower_shape;
        const double upper = fit.c_plus * s.upper_shape;
        ++r.checked;
        if (s.value + s.error < lower) ++r.lower_violations;
        if (s.value - s.error > upper) ++r.upper_violations;
        if (lower > 0.0) r.worst_lower_ratio = std::min(r.worst_lower_ratio, s.value / lower);
        if (upper > 0.0) r.worst_upper_ratio = std::max(r.worst_upper_ratio, s.value / upper);
    }
    return r;
}

// Smallest C_bar on a log grid such that value <= C_bar exp(-C_bar r^2/dt)
// at every training point (r^2 = xi^2 + eta^2).
inline double fit_gaussian_tail(const std::vector<std::pair<double, double>>& r2_and_value, double dt,
                                double margin = 1.0) {
    double best = 0.0;
    for (int k = 0; k <= 4000; ++k) {
        const double C = std::pow(10.0, -6.0 + 8.0 * k / 4000.0);
        bool ok = true;
        for (const auto& [r2, v] : r2_and_value) {
            if (v > C * std::exp(-C * r2 / dt)) {
                ok = false;
                break;
            }
        }
        // Keep the largest admissible C_bar: it gives the steepest decay.
        if (ok) best = C;
    }
    if (best == 0.0) throw DomainError("fit_gaussian_tail: no admissible constant on the search grid");
    return best / margin;
}

}  // namespace kolmo
