#pragma once

// Closed-form and quadrature kernels of the constant-coefficient model
// operators: Gamma_K^lambda, the Theta integral, the Yor density p and the
// arithmetic-average kernels Gamma_L^1 and Gamma_L^lambda.

#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace kolmo {

struct KernelParams {
    double lambda = 1.0;
};

struct KernelResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    double tolerance_used = 0.0;
};

struct YorArgs {
    double w = 0.0;
    double y = 1.0;
    double t = 1.0;
};

struct ThetaOptions {
    double min_t = 0.05;         // below this the integral is refused
    int max_panels = 4000;       // half-period panels of width t
    double panel_rel_tol = 1e-12;
};

// Gamma_K^lambda(z; pole). Zero for t <= tau.
inline double gamma_k(const KernelParams& params, const EventPoint& z, const EventPoint& pole) {
    if (!(params.lambda > 0.0)) throw DomainError("gamma_k: lambda must be positive");
    const double T = z.t - pole.t;
    if (!(T > 0.0)) return 0.0;
    const double lam = params.lambda;
    const double dx = z.x - pole.x;
    const double sh = z.y - pole.y + T * 0.5 * (z.x + pole.x);
    const double expo = -dx * dx / (4.0 * lam * T) - 3.0 * sh * sh / (lam * T * T * T);
    return std::numbers::sqrt3 / (2.0 * lam * std::numbers::pi * T * T) * std::exp(expo);
}

namespace detail {

inline double theta_log_envelope(double xi, double z, double t) {
    return -xi * xi / (2.0 * t) - z * std::cosh(xi) + std::log(std::sinh(xi));
}

// d/dxi of theta_log_envelope; the log-envelope is concave on (0, inf).
inline double theta_log_envelope_slope(double xi, double z, double t) {
    return -xi / t - z * std::sinh(xi) + 1.0 / std::tanh(xi);
}

}  // namespace detail

// Theta(z, t) = int_0^inf exp(-xi^2/(2t)) exp(-z cosh xi) sinh xi sin(pi xi/t) dxi.
//
// Panels [k t, (k+1) t] follow the zeros of sin(pi xi / t); each panel is
// integrated by adaptive Gauss-Kronrod. The reported error adds the panel
// estimates, a bound on the discarded tail and the rounding floor
// eps * int|integrand|, which dominates at small t where the result is
// tiny compared to the integrand.
inline KernelResult theta(double z_arg, double t, double tol, const ThetaOptions& opt = {}) {
    if (!(z_arg > 0.0)) throw DomainError("theta: z must be positive");
    if (!(t > 0.0)) throw DomainError("theta: t must be positive");
    if (!(tol > 0.0)) throw DomainError("theta: tol must be positive");
    if (t < opt.min_t)
        throw ConvergenceError("theta: t = " + std::to_string(t) + " is below the small-time guard " +
                               std::to_string(opt.min_t));

    const double log_cut = std::max(std::log(tol) + std::log(1e-3), -740.0);

    // Locate the first panel edge beyond the envelope peak whose envelope is
    // below the cutoff. By concavity everything further out is smaller.
    int n_panels = 0;
    double edge_slope = -1.0;
    double edge_log_env = -std::numeric_limits<double>::infinity();
    for (int k = 1;; ++k) {
        if (k > opt.max_panels)
            throw ConvergenceError("theta: more than " + std::to_string(opt.max_panels) +
                                   " panels required (t = " + std::to_string(t) + ")");
        const double xi = k * t;
        const double le = detail::theta_log_envelope(xi, z_arg, t);
        const double slope = detail::theta_log_envelope_slope(xi, z_arg, t);
        if (slope < 0.0 && le < log_cut) {
            n_panels = k;
            edge_slope = slope;
            edge_log_env = le;
            break;
        }
    }

    const double eps = std::numeric_limits<double>::epsilon();
    auto f = [z_arg, t](double xi) {
        if (xi <= 0.0) return 0.0;
        return std::exp(-xi * xi / (2.0 * t) - z_arg * std::cosh(xi)) * std::sinh(xi) *
               std::sin(std::numbers::pi * xi / t);
    };

    double sum = 0.0;
    double err = 0.0;
    double l1 = 0.0;
    for (int k = 0; k < n_panels; ++k) {
        const QuadResult r = gauss_kronrod(f, k * t, (k + 1) * t, opt.panel_rel_tol, 10);
        sum += r.value;
        err += r.error;
        l1 += r.l1;
    }
    const double tail = std::exp(edge_log_env) / std::abs(edge_slope);
    err += tail + 32.0 * eps * l1;
    return {sum, err, tol};
}

// Joint density of (B_t, int_0^t exp(2 B_u) du) for a standard Brownian
// motion B, evaluated at (w, y).
inline KernelResult yor_density(const YorArgs& args, double tol, const ThetaOptions& opt = {}) {
    if (!(args.y > 0.0)) throw DomainError("yor_density: y must be positive");
    if (!(args.t > 0.0)) throw DomainError("yor_density: t must be positive");
    if (!(tol > 0.0)) throw DomainError("yor_density: tol must be positive");
    const double pi = std::numbers::pi;
    const double w = args.w, y = args.y, t = args.t;
    const double e2w = std::exp(2.0 * w);
    const double log_amp = pi * pi / (2.0 * t) - std::log(pi * std::sqrt(2.0 * pi * t)) -
                           (1.0 + e2w) / (2.0 * y) + w - 2.0 * std::log(y);
    const double amp = std::exp(log_amp);
    if (amp == 0.0 || !std::isfinite(e2w)) return {0.0, 0.0, tol};
    const double z = std::exp(w) / y;
    if (!std::isfinite(z)) return {0.0, 0.0, tol};
    const KernelResult th = theta(z, t, tol / amp, opt);
    double value = amp * th.value;
    double error = amp * th.abs_error_estimate;
    if (value < 0.0) {
        error += -value;
        value = 0.0;
    }
    return {value, error, tol};
}

// Fundamental solution of x^2 d_xx + x d_x + x d_y - d_t with pole (x0, y0, t0).
// Vanishes for t <= t0 and for y >= y0.
inline KernelResult gamma_l1(const EventPoint& z, const EventPoint& pole, double tol,
                             const ThetaOptions& opt = {}) {
    detail::require_positive_x(GeometryKind::L, z, "gamma_l1");
    detail::require_positive_x(GeometryKind::L, pole, "gamma_l1");
    const double T = z.t - pole.t;
    if (!(T > 0.0) || !(z.y < pole.y)) return {0.0, 0.0, tol};
    const double pref = 1.0 / (4.0 * z.x * pole.x);
    const YorArgs a{0.5 * std::log(pole.x / z.x), (pole.y - z.y) / (2.0 * z.x), 0.5 * T};
    const KernelResult p = yor_density(a, tol / pref, opt);
    return {pref * p.value, pref * p.abs_error_estimate, tol};
}

// Fundamental solution of lambda x^2 d_xx + mu x d_x + x d_y - d_t, where mu
// is the Ito drift of the underlying price (mu = 1 gives the model operator
// L_lambda). The Brownian time change s = 2u/lambda maps the problem onto
// the Yor density; a drift mu != lambda enters through the Girsanov weight
// exp(nu w - nu^2 t'/2) with nu = (mu - lambda)/lambda.
inline KernelResult gamma_l_lambda(const KernelParams& params, const EventPoint& z,
                                   const EventPoint& pole, double tol, double ito_drift = 1.0,
                                   const ThetaOptions& opt = {}) {
    if (!(params.lambda > 0.0)) throw DomainError("gamma_l_lambda: lambda must be positive");
    detail::require_positive_x(GeometryKind::L, z, "gamma_l_lambda");
    detail::require_positive_x(GeometryKind::L, pole, "gamma_l_lambda");
    const double lam = params.lambda;
    const double T = z.t - pole.t;
    if (!(T > 0.0) || !(z.y < pole.y)) return {0.0, 0.0, tol};
    const double w = 0.5 * std::log(pole.x / z.x);
    const double tp = 0.5 * lam * T;
    const double nu = (ito_drift - lam) / lam;
    const double pref = lam / (4.0 * z.x * pole.x) * std::exp(nu * w - 0.5 * nu * nu * tp);
    if (pref == 0.0 || !std::isfinite(pref)) return {0.0, 0.0, tol};
    const YorArgs a{w, lam * (pole.y - z.y) / (2.0 * z.x), tp};
    const KernelResult p = yor_density(a, tol / pref, opt);
    return {pref * p.value, pref * p.abs_error_estimate, tol};
}

}  // namespace kolmo
