#pragma once

// Value function of the bilinear control problem
//     x' = omega x,  y' = x,   minimise  int omega^2,
// steering (x1, y1) at time t1 to (x0, y0) over the horizon T = t1 - t0.

#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace kolmo {

struct ControlEndpoints {
    EventPoint start;  // (x1, y1, t1)
    EventPoint end;    // (x0, y0, t0)
};

enum class PsiBranch { upper, lower };

inline std::string to_string(PsiBranch b) { return b == PsiBranch::upper ? "upper" : "lower"; }

struct PsiValue {
    double cost = 0.0;
    PsiBranch branch = PsiBranch::upper;
    double E = 0.0;
};

inline void validate(const ControlEndpoints& e) {
    if (!(e.start.x > 0.0) || !(e.end.x > 0.0))
        throw DomainError("control endpoints: x-coordinates must be positive");
    if (!(e.start.t > e.end.t)) throw DomainError("control endpoints: need t1 > t0");
    if (!(e.start.y < e.end.y)) throw DomainError("control endpoints: need y1 < y0");
}

// g(r) = sinh(sqrt r)/sqrt r for r > 0, 1 at 0, sin(sqrt(-r))/sqrt(-r) on (-pi^2, 0).
inline double g(double r) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    if (!(r > -pi2)) throw DomainError("g: argument must exceed -pi^2");
    if (r == 0.0) return 1.0;
    if (std::abs(r) < 1e-8) return 1.0 + r / 6.0 + r * r / 120.0;
    if (r > 0.0) {
        const double s = std::sqrt(r);
        return std::sinh(s) / s;
    }
    const double s = std::sqrt(-r);
    return std::sin(s) / s;
}

// Inverse of the strictly increasing g: returns r in (-pi^2, inf) with
// |g(r) - s| <= tol * max(1, s). Bisection on a geometrically grown bracket,
// finished with safeguarded secant steps.
inline double g_inverse(double s, double tol = 1e-12) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    if (!(s > 0.0)) throw DomainError("g_inverse: argument must be positive");
    if (!(tol > 0.0)) throw DomainError("g_inverse: tol must be positive");
    if (s == 1.0) return 0.0;

    const double scale = std::max(1.0, s);
    double lo, hi;
    if (s < 1.0) {
        lo = -pi2;
        hi = 0.0;
    } else {
        lo = 0.0;
        hi = 1.0;
        while (g(hi) < s) {
            lo = hi;
            hi *= 2.0;
        }
    }
    auto resid = [&](double r) { return r <= -pi2 ? -s : g(r) - s; };
    double f_lo = resid(lo), f_hi = resid(hi);

    for (int it = 0; it < 400; ++it) {
        double mid;
        const bool coarse = (hi - lo) > 1e-3 * std::max(1.0, std::abs(lo) + std::abs(hi));
        if (coarse || f_hi == f_lo) {
            mid = 0.5 * (lo + hi);
        } else {
            mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
        }
        const double fm = resid(mid);
        if (std::abs(fm) <= tol * scale) return mid;
        if (fm < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi)))
            return 0.5 * (lo + hi);
    }
    return 0.5 * (lo + hi);
}

namespace detail {

// Two-branch closed form for endpoints (x1, y1) -> (x0, y0) over horizon T.
inline PsiValue psi_closed_form(double x1, double y1, double x0, double y0, double T) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double Y = y0 - y1;
    const double arg = Y / (T * std::sqrt(x1 * x0));
    if (!(arg > 0.0)) throw DomainError("psi: infeasible endpoints (g^-1 argument must be positive)");
    const double E = 4.0 / (T * T) * g_inverse(arg);
    const double root = std::sqrt(std::max(0.0, E + 4.0 * x1 * x0 / (Y * Y)));
    const double base = E * T + 4.0 * (x1 + x0) / Y;
    PsiValue v;
    v.E = E;
    if (E >= -pi2 / (T * T)) {
        v.branch = PsiBranch::upper;
        v.cost = base - 4.0 * root;
    } else {
        v.branch = PsiBranch::lower;
        v.cost = base + 4.0 * root;
    }
    v.cost = std::max(0.0, v.cost);
    return v;
}

}  // namespace detail

// psi((x, y, t); (1, 0, 0)).
inline PsiValue psi_canonical(double x, double y, double t) {
    if (!(x > 0.0)) throw DomainError("psi_canonical: x must be positive");
    if (!(y < 0.0)) throw DomainError("psi_canonical: y must be negative");
    if (!(t > 0.0)) throw DomainError("psi_canonical: t must be positive");
    return detail::psi_closed_form(x, y, 1.0, 0.0, t);
}

// Reduction to the canonical end point: psi(z1; z0) = psi(z0^-1 o z1; (1,0,0)).
inline PsiValue psi(const ControlEndpoints& e) {
    validate(e);
    const EventPoint c = compose(GeometryKind::L, inverse(GeometryKind::L, e.end), e.start);
    return psi_canonical(c.x, c.y, c.t);
}

// Same value from the two-branch formula written for general endpoints.
inline PsiValue psi_direct(const ControlEndpoints& e) {
    validate(e);
    return detail::psi_closed_form(e.start.x, e.start.y, e.end.x, e.end.y, e.start.t - e.end.t);
}

struct BruteForceResult {
    double cost = 0.0;
    double residual = 0.0;  // max norm of the terminal constraint
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// (e^s - 1)/s and its derivative, stable near s = 0.
inline double phi1(double s) { return std::abs(s) < 1e-5 ? 1.0 + s / 2.0 + s * s / 6.0 : std::expm1(s) / s; }
inline double phi1_prime(double s) {
    if (std::abs(s) < 1e-4) return 0.5 + s / 3.0 + s * s / 8.0;
    return (s * std::exp(s) - std::expm1(s)) / (s * s);
}

struct ControlState {
    std::array<double, 2> c{};          // constraint residuals (log x, y)
    std::vector<double> grad_y;         // d c[1] / d omega
};

inline ControlState control_constraints(const std::vector<double>& om, double h, double u1, double y1,
                                        double u0, double y0) {
    const std::size_t n = om.size();
    ControlState st;
    st.grad_y.assign(n, 0.0);
    std::vector<double> u(n);
    std::vector<double> inc(n);
    double uu = u1;
    double y = y1;
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = uu;
        inc[i] = std::exp(uu) * phi1(om[i] * h) * h;
        y += inc[i];
        uu += om[i] * h;
    }
    st.c = {uu - u0, y - y0};
    double suffix = 0.0;  // sum of increments after interval i
    for (std::size_t k = n; k-- > 0;) {
        st.grad_y[k] = std::exp(u[k]) * phi1_prime(om[k] * h) * h * h + h * suffix;
        suffix += inc[k];
    }
    return st;
}

}  // namespace detail

// Upper bound on psi from piecewise-constant controls on n_steps intervals.
// The state equations are integrated exactly on each interval. Feasibility
// is restored by minimum-norm Gauss-Newton projections
//     omega <- J^T (J J^T)^{-1} (J omega - c),
// whose fixed points are exactly the KKT points of the discrete problem.
inline BruteForceResult psi_bruteforce(const ControlEndpoints& e, int n_steps, int iterations = 500) {
    validate(e);
    if (n_steps < 8) throw DomainError("psi_bruteforce: n_steps must be at least 8");
    const double T = e.start.t - e.end.t;
    const double h = T / n_steps;
    const double u1 = std::log(e.start.x), u0 = std::log(e.end.x);
    const double y1 = e.start.y, y0 = e.end.y;
    const std::size_t n = static_cast<std::size_t>(n_steps);

    // Initial guess: constant drift plus a zero-mean cosine bump whose
    // amplitude is root-found so the y-constraint holds.
    const double base = (u0 - u1) / T;
    auto make = [&](double amp) {
        std::vector<double> om(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = (i + 0.5) * h;
            om[i] = base + amp * std::cos(2.0 * std::numbers::pi * s / T);
        }
        return om;
    };
    auto ycons = [&](double amp) { return detail::control_constraints(make(amp), h, u1, y1, u0, y0).c[1]; };
    double a_lo = -8.0 / T, a_hi = 8.0 / T;
    for (int k = 0; k < 6 && ycons(a_lo) > 0.0; ++k) a_lo *= 2.0;
    for (int k = 0; k < 6 && ycons(a_hi) < 0.0; ++k) a_hi *= 2.0;
    double amp = 0.0;
    if (ycons(a_lo) <= 0.0 && ycons(a_hi) >= 0.0) {
        for (int k = 0; k < 80; ++k) {
            const double m = 0.5 * (a_lo + a_hi);
            (ycons(m) < 0.0 ? a_lo : a_hi) = m;
        }
        amp = 0.5 * (a_lo + a_hi);
    }
    std::vector<double> om = make(amp);

    auto cost_of = [&](const std::vector<double>& w) {
        double s = 0.0;
        for (double v : w) s += v * v;
        return s * h;
    };
    auto cnorm = [](const detail::ControlState& st) {
        return std::max(std::abs(st.c[0]), std::abs(st.c[1]));
    };

    BruteForceResult res;
    detail::ControlState st = detail::control_constraints(om, h, u1, y1, u0, y0);
    double prev_cost = cost_of(om);
    for (int it = 0; it < iterations; ++it) {
        // J rows: r0 = (h, ..., h), r1 = grad_y.
        double a00 = 0.0, a01 = 0.0, a11 = 0.0, j0w = 0.0, j1w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a00 += h * h;
            a01 += h * st.grad_y[i];
            a11 += st.grad_y[i] * st.grad_y[i];
            j0w += h * om[i];
            j1w += st.grad_y[i] * om[i];
        }
        const double r0 = j0w - st.c[0], r1 = j1w - st.c[1];
        const double det = a00 * a11 - a01 * a01;
        if (!(std::abs(det) > 0.0)) break;
        const double m0 = (a11 * r0 - a01 * r1) / det;
        const double m1 = (a00 * r1 - a01 * r0) / det;
        std::vector<double> target(n);
        for (std::size_t i = 0; i < n; ++i) target[i] = h * m0 + st.grad_y[i] * m1;

        // Damped step: accept the largest step that does not blow up the
        // residual (merit = cost + heavy penalty on the constraints).
        const double mu = 1e4;
        const double merit0 = prev_cost + mu * cnorm(st);
        double alpha = 1.0;
        std::vector<double> trial(n);
        detail::ControlState st_trial;
        for (int ls = 0; ls < 30; ++ls) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = om[i] + alpha * (target[i] - om[i]);
            st_trial = detail::control_constraints(trial, h, u1, y1, u0, y0);
            const double merit = cost_of(trial) + mu * cnorm(st_trial);
            if (std::isfinite(merit) && (merit <= merit0 || cnorm(st_trial) < 1e-12)) break;
            alpha *= 0.5;
        }
        om.swap(trial);
        st = st_trial;
        const double c = cost_of(om);
        res.iterations = it + 1;
        const bool small_step = std::abs(c - prev_cost) <= 1e-15 * std::max(1.0, c);
        prev_cost = c;
        if (cnorm(st) <= 1e-12 && small_step) break;
    }
    res.cost = prev_cost;
    res.residual = cnorm(st);
    res.converged = res.residual <= 1e-6;
    return res;
}

}  // namespace kolmo
