#pragma once

// Changes of variables between the pricing equation and the Cauchy problems
// for K and L, and prices through the representation formula
//     v(z) = int Gamma(z; xi, eta, t0) phi(xi, eta) dxi deta.

#include <kolmo/bounds.hpp>
#include <kolmo/coefficients.hpp>
#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/kernels.hpp>
#include <kolmo/payoff.hpp>
#include <kolmo/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

namespace kolmo {

using Function2 = std::function<double(double, double)>;
using Function3 = std::function<double(double, double, double)>;

struct CauchyProblem {
    CoefficientField field;
    Function2 initial;  // phi~ (K: x is log-price) or phi (L: x is price)
    GeometryKind kind = GeometryKind::K;
    GrowthBound growth;
};

// Geometric averaging: v(x, y, t) = Z(e^x, y, T - t) solves K v = 0 with
// a = sigma^2/2, b = r - sigma^2/2 - sigma d_x sigma and phi~(x, y) = phi(e^x, y).
// sigma and r take (x, y, t) in the transformed variables.
inline CauchyProblem transform_geometric(const PricingSpec& spec, Function3 sigma, Function3 r) {
    if (spec.kind != Averaging::geometric) throw DomainError("transform_geometric: spec is not geometric");
    if (!spec.payoff) throw DomainError("transform_geometric: payoff not set");
    CauchyProblem p;
    p.kind = GeometryKind::K;
    p.growth = spec.growth;
    auto phi = spec.payoff;
    p.initial = [phi](double x, double y) { return phi(std::exp(x), y); };
    p.field.kind = GeometryKind::K;
    p.field.a = [sigma](double x, double y, double t) {
        const double s = sigma(x, y, t);
        return 0.5 * s * s;
    };
    p.field.b = [sigma, r](double x, double y, double t) {
        const double s = sigma(x, y, t);
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        const double ds = (sigma(x + h, y, t) - sigma(x - h, y, t)) / (2.0 * h);
        return r(x, y, t) - 0.5 * s * s - s * ds;
    };
    p.field.r = r;
    return p;
}

inline CauchyProblem transform_geometric(const PricingSpec& spec) {
    const double s = spec.sigma, rr = spec.r;
    CauchyProblem p = transform_geometric(spec, [s](double, double, double) { return s; },
                                          [rr](double, double, double) { return rr; });
    p.field.lambda = 0.5 * s * s;
    p.field.Lambda = std::max({0.5 * s * s, std::abs(rr - 0.5 * s * s), std::abs(rr)});
    p.field.time_dependent = false;
    return p;
}

// Z(S, A, tau) from the transformed solution v at maturity T.
inline double untransform_geometric(const std::function<double(double, double, double)>& v, double S, double A,
                                    double tau, double T) {
    return v(std::log(S), A, T - tau);
}

// Arithmetic averaging keeps the price variable: v(x, y, t) = Z(x, y, T - t)
// solves L v = 0 with a = sigma^2/2 and b = r - a - x d_x a.
inline CauchyProblem transform_arithmetic(const PricingSpec& spec, Function3 sigma, Function3 r) {
    if (spec.kind != Averaging::arithmetic) throw DomainError("transform_arithmetic: spec is not arithmetic");
    if (!spec.payoff) throw DomainError("transform_arithmetic: payoff not set");
    CauchyProblem p;
    p.kind = GeometryKind::L;
    p.growth = spec.growth;
    p.initial = spec.payoff;
    p.field.kind = GeometryKind::L;
    auto a = [sigma](double x, double y, double t) {
        const double s = sigma(x, y, t);
        return 0.5 * s * s;
    };
    p.field.a = a;
    p.field.b = [a, r](double x, double y, double t) {
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        const double da = (a(x + h, y, t) - a(x - h, y, t)) / (2.0 * h);
        return r(x, y, t) - a(x, y, t) - x * da;
    };
    p.field.r = r;
    return p;
}

// u(x, y, t) = e^{rt} v(x + c t, y - c t^2/2, t), c = sigma^2/2 - r, maps a
// solution of K v = 0 with constant sigma, r onto a solution of K_lambda.
inline Function3 constant_coeff_shift(Function3 v, double r, double sigma) {
    const double c = 0.5 * sigma * sigma - r;
    return [v, r, c](double x, double y, double t) {
        return std::exp(r * t) * v(x + c * t, y - 0.5 * c * t * t, t);
    };
}

inline Function3 constant_coeff_unshift(Function3 u, double r, double sigma) {
    const double c = 0.5 * sigma * sigma - r;
    return [u, r, c](double x, double y, double t) {
        return std::exp(-r * t) * u(x - c * t, y + 0.5 * c * t * t, t);
    };
}

// v = e^{-R(t)} u with R(t) = int_{t0}^t r: turns a solution of L u = 0 into
// one of (L - r(t)) v = 0.
inline Function3 zero_order_rescale(Function3 u, std::function<double(double)> r_of_t, double t0) {
    return [u, r_of_t, t0](double x, double y, double t) {
        const double R = t == t0 ? 0.0 : gauss_kronrod(r_of_t, t0, t, 1e-13).value;
        return std::exp(-R) * u(x, y, t);
    };
}

// ---- kernel evaluators ---------------------------------------------------

// Integration window for the representation formula. Coordinates are
// (xi, eta) for kind K and (log xi, log(eta - y)) for kind L.
struct TruncationBox {
    double u_lo = 0.0, u_hi = 0.0;
    std::function<std::pair<double, double>(double)> v_range;
};

struct KernelEvaluator {
    GeometryKind kind = GeometryKind::K;
    std::string name;
    std::function<KernelResult(const EventPoint& z, const EventPoint& pole, double tol)> value;
    // Window holding all but a Gaussian tail of R standard deviations.
    std::function<TruncationBox(const EventPoint& z, double t0, double R)> box;
    double lambda_plus = 1.0;  // largest diffusion constant, for the alpha = 2 refusal
    double drift = 0.0;        // log-drift mu - lambda of the L-kind kernel
};

// Gamma_K^lambda, optionally composed with the constant-coefficient shift
// so that it is the kernel of K with a = sigma^2/2, b = r - sigma^2/2, r.
inline KernelEvaluator gamma_k_evaluator(double lambda, double r = 0.0, bool shifted = false) {
    KernelEvaluator ev;
    ev.kind = GeometryKind::K;
    ev.name = shifted ? "gamma_k_shifted" : "gamma_k";
    ev.lambda_plus = lambda;
    const double c = shifted ? lambda - r : 0.0;
    const double rr = shifted ? r : 0.0;
    auto map = [c](const EventPoint& z, double t0) {
        const double T = z.t - t0;
        return EventPoint{z.x - c * T, z.y + 0.5 * c * T * T, z.t};
    };
    ev.value = [lambda, rr, map](const EventPoint& z, const EventPoint& pole, double tol) {
        const double T = z.t - pole.t;
        const double v = std::exp(-rr * T) * gamma_k({lambda}, map(z, pole.t), pole);
        return KernelResult{v, 0.0, tol};
    };
    ev.box = [lambda, map](const EventPoint& z, double t0, double R) {
        const EventPoint m = map(z, t0);
        const double T = z.t - t0;
        const double sx = std::sqrt(2.0 * lambda * T);
        const double sc = std::sqrt(lambda * T * T * T / 6.0);  // eta given xi
        TruncationBox b;
        b.u_lo = m.x - R * sx;
        b.u_hi = m.x + R * sx;
        b.v_range = [m, T, sc, R](double xi) {
            const double c = m.y + 0.5 * T * (m.x + xi);
            return std::pair{c - R * sc, c + R * sc};
        };
        return b;
    };
    return ev;
}

// Gamma_L^lambda with Ito drift mu; mu = 1, lambda = 1 is Gamma_L^1.
inline KernelEvaluator gamma_l_evaluator(double lambda, double ito_drift = 1.0) {
    KernelEvaluator ev;
    ev.kind = GeometryKind::L;
    ev.name = (lambda == 1.0 && ito_drift == 1.0) ? "gamma_l1" : "gamma_l_lambda";
    ev.lambda_plus = lambda;
    ev.drift = ito_drift - lambda;
    ev.value = [lambda, ito_drift](const EventPoint& z, const EventPoint& pole, double tol) {
        return gamma_l_lambda({lambda}, z, pole, tol, ito_drift);
    };
    ev.box = [lambda, ito_drift](const EventPoint& z, double t0, double R) {
        const double T = z.t - t0;
        const double s = std::sqrt(2.0 * lambda * T);
        const double m = std::log(z.x) + (ito_drift - lambda) * T;
        TruncationBox b;
        b.u_lo = m - R * s;
        b.u_hi = m + R * s;
        const double c = std::log(z.x * T) + 0.5 * (ito_drift - lambda) * T;
        b.v_range = [c, s, R](double) { return std::pair{c - R * s - 2.0, c + R * s + 1.0}; };
        return b;
    };
    return ev;
}

// ---- growth condition ----------------------------------------------------

struct LatticeSpec {
    Interval x{-10.0, 10.0};
    Interval y{-10.0, 10.0};
    std::size_t n = 41;
};

struct GrowthReport {
    bool ok = true;
    double worst_ratio = 0.0;  // max |phi| / bound
};

// K-kind bound: M exp(C |(x, y)|^alpha). L-kind bound: M (1 + C |(x, y)|),
// the linear growth under which the kernel has finite first moments.
inline GrowthReport growth_check(const Function2& phi, const GrowthBound& g, const LatticeSpec& lat,
                                 GeometryKind kind = GeometryKind::K) {
    if (!(g.alpha > 0.0 && g.alpha <= 2.0)) throw DomainError("growth_check: alpha must lie in (0, 2]");
    if (!(g.M > 0.0)) throw DomainError("growth_check: M must be positive");
    GrowthReport rep;
    for (std::size_t i = 0; i < lat.n; ++i)
        for (std::size_t j = 0; j < lat.n; ++j) {
            const double x = lat.x.lo + lat.x.length() * static_cast<double>(i) / static_cast<double>(lat.n - 1);
            const double y = lat.y.lo + lat.y.length() * static_cast<double>(j) / static_cast<double>(lat.n - 1);
            const double norm = std::sqrt(x * x + y * y);
            const double v = std::abs(phi(x, y));
            if (v == 0.0) continue;
            // compare in logs so neither side overflows
            const double log_bound = kind == GeometryKind::K ? std::log(g.M) + g.C * std::pow(norm, g.alpha)
                                                             : std::log(g.M) + std::log1p(g.C * norm);
            rep.worst_ratio = std::max(rep.worst_ratio, std::exp(std::min(std::log(v) - log_bound, 700.0)));
        }
    rep.ok = rep.worst_ratio <= 1.0;
    return rep;
}

// Growth check of the Cauchy datum of a pricing spec: phi~(x, y) = phi(e^x, y)
// against the K-kind bound for geometric averaging, phi against the L-kind
// bound on x > 0 for arithmetic averaging.
inline GrowthReport growth_check(const PricingSpec& spec, const LatticeSpec& lat) {
    if (!spec.payoff) throw DomainError("growth_check: payoff not set");
    if (spec.kind == Averaging::geometric) {
        auto phi = spec.payoff;
        return growth_check([phi](double x, double y) { return phi(std::exp(x), y); }, spec.growth, lat,
                            GeometryKind::K);
    }
    LatticeSpec l2 = lat;
    if (!(l2.x.lo > 0.0)) l2.x.lo = 1e-3;
    return growth_check(spec.payoff, spec.growth, l2, GeometryKind::L);
}

// ---- representation formula ----------------------------------------------

struct PriceOptions {
    double t0 = 0.0;        // time of the initial datum
    double box_sigmas = 0.0;  // 0: chosen from tol and the growth bound
    unsigned max_depth = 12;
};

// Smallest R (in steps of 1/2) such that the kernel mass beyond R standard
// deviations, weighted by the growth bound, stays below tol / 10.
// K: Gaussian tail times M exp(C |far edge|^alpha).
// L: lognormal tail of the first moment times the linear bound M (1 + C |.|).
inline double truncation_radius(GeometryKind kind, const GrowthBound& g, const EventPoint& z, double T,
                                double lambda, double drift, double tol) {
    const double s = std::sqrt(2.0 * lambda * T);
    const double norm = std::sqrt(z.x * z.x + z.y * z.y);
    for (double R = 4.0; R < 60.0; R += 0.5) {
        double bound;
        if (kind == GeometryKind::K) {
            const double far = norm + R * s * (1.0 + T);
            bound = 2.0 * std::erfc(R / std::numbers::sqrt2) * g.M * std::exp(g.C * std::pow(far, g.alpha));
        } else {
            const double moment = norm + z.x * (1.0 + T) * std::exp(std::abs(drift) * T + 0.5 * s * s);
            bound = 2.0 * g.M *
                    (std::erfc(R / std::numbers::sqrt2) + g.C * moment * std::erfc((R - s) / std::numbers::sqrt2));
        }
        if (bound < 0.1 * tol) return R;
    }
    throw DomainError("truncation_radius: growth bound too fast for the kernel tails");
}

inline KernelResult price(const KernelEvaluator& kernel, const CauchyProblem& problem, const EventPoint& point,
                          double tol, const PriceOptions& opt = {}) {
    if (!kernel.value || !kernel.box) throw EnvelopeUnavailable("price: kernel evaluator provides no envelope window");
    if (kernel.kind != problem.kind) throw DomainError("price: kernel and problem kinds differ");
    if (!(point.t > opt.t0)) throw DomainError("price: evaluation time must follow the initial time");
    if (!(tol > 0.0)) throw DomainError("price: tol must be positive");
    const double T = point.t - opt.t0;
    const GrowthBound& g = problem.growth;
    if (problem.kind == GeometryKind::K && g.alpha >= 2.0) {
        const double limit = g.C > 0.0 ? 1.0 / (8.0 * g.C * kernel.lambda_plus) : std::numeric_limits<double>::infinity();
        if (T > limit)
            throw GrowthViolation("price: quadratic growth supported only up to t - t0 = " + std::to_string(limit));
    }
    if (problem.kind == GeometryKind::L && g.alpha > 1.0)
        throw GrowthViolation("price: L-kind data must grow at most linearly (alpha <= 1)");

    const double R = opt.box_sigmas > 0.0
                         ? opt.box_sigmas
                         : truncation_radius(problem.kind, g, point, T, kernel.lambda_plus, kernel.drift, tol);
    const TruncationBox box = kernel.box(point, opt.t0, R);

    // Growth condition on the window actually integrated.
    {
        LatticeSpec lat;
        const auto v0 = box.v_range(box.u_lo), v1 = box.v_range(box.u_hi);
        if (problem.kind == GeometryKind::K) {
            lat.x = {box.u_lo, box.u_hi};
            lat.y = {std::min(v0.first, v1.first), std::max(v0.second, v1.second)};
        } else {
            lat.x = {std::exp(box.u_lo), std::exp(box.u_hi)};
            lat.y = {point.y + std::exp(std::min(v0.first, v1.first)), point.y + std::exp(std::max(v0.second, v1.second))};
        }
        lat.n = 21;
        const GrowthReport gr = growth_check(problem.initial, g, lat, problem.kind);
        if (!gr.ok)
            throw GrowthViolation("price: payoff exceeds the growth bound by a factor " +
                                  std::to_string(gr.worst_ratio));
    }

    // The kernel tolerance at each node is scaled down by the weight it is
    // multiplied with, so far-field nodes with large payoff or Jacobian do
    // not amplify kernel noise. The kernel error term is the box area times
    // the mean weighted kernel error over the quadrature nodes.
    const auto v0 = box.v_range(box.u_lo);
    const double area = (box.u_hi - box.u_lo) * (v0.second - v0.first);
    const double ktol = 1e-2 * tol / area;
    double kernel_err_sum = 0.0;
    std::size_t nodes = 0;
    QuadResult q;
    if (problem.kind == GeometryKind::K) {
        auto f = [&](double xi, double eta) {
            const double phi = problem.initial(xi, eta);
            const double w = std::max(1.0, std::abs(phi));
            const KernelResult k = kernel.value(point, {xi, eta, opt.t0}, ktol / w);
            kernel_err_sum += k.abs_error_estimate * std::abs(phi);
            ++nodes;
            return k.value * phi;
        };
        q = integrate_2d_region_abs(
            f, box.u_lo, box.u_hi, [&](double u) { return box.v_range(u).first; },
            [&](double u) { return box.v_range(u).second; }, 0.5 * tol, opt.max_depth);
    } else {
        auto f = [&](double u, double v) {
            const double xi = std::exp(u), d = std::exp(v);
            const double phi = problem.initial(xi, point.y + d);
            const double jac = xi * d;
            const double w = jac * std::max(1.0, std::abs(phi));
            const KernelResult k = kernel.value(point, {xi, point.y + d, opt.t0}, ktol / w);
            kernel_err_sum += k.abs_error_estimate * std::abs(phi) * jac;
            ++nodes;
            return k.value * phi * jac;
        };
        q = integrate_2d_region_abs(
            f, box.u_lo, box.u_hi, [&](double u) { return box.v_range(u).first; },
            [&](double u) { return box.v_range(u).second; }, 0.5 * tol, opt.max_depth);
    }
    const double kernel_err = nodes ? area * kernel_err_sum / static_cast<double>(nodes) : 0.0;
    return {q.value, q.error + kernel_err + 0.1 * tol, tol};
}

}  // namespace kolmo
