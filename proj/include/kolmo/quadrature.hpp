#pragma once

#include <kolmo/errors.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace kolmo {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;  // integral of |f|, used to judge cancellation
};

// Adaptive 15-point Gauss-Kronrod on [a, b]; `rel_tol` is relative to the
// L1 norm of the integrand on the interval.
template <class F>
QuadResult gauss_kronrod(F&& f, double a, double b, double rel_tol, unsigned max_depth = 12) {
    QuadResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &r.error, &r.l1);
    return r;
}

// Adaptive bisection driven by an absolute tolerance, split evenly between
// halves. Suited to integrands that vanish or underflow on most of [a, b],
// where a relative criterion keeps refining numerical noise.
template <class F>
QuadResult gauss_kronrod_abs(F&& f, double a, double b, double abs_tol, unsigned max_depth = 12) {
    QuadResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &r.error, &r.l1);
    if (r.error <= abs_tol || max_depth == 0) return r;
    const double m = 0.5 * (a + b);
    const QuadResult lo = gauss_kronrod_abs(f, a, m, 0.5 * abs_tol, max_depth - 1);
    const QuadResult hi = gauss_kronrod_abs(f, m, b, 0.5 * abs_tol, max_depth - 1);
    return {lo.value + hi.value, lo.error + hi.error, lo.l1 + hi.l1};
}

// Composite trapezoid rule with repeated interval halving until two
// successive levels agree to `abs_tol`. Kept deliberately simple: it is the
// independent second rule in dual-quadrature checks.
template <class F>
QuadResult trapezoid_doubling(F&& f, double a, double b, double abs_tol, int max_levels = 22,
                              int initial_panels = 8) {
    if (!(b > a)) return {};
    int n = initial_panels;
    double h = (b - a) / n;
    double sum = 0.5 * (f(a) + f(b));
    double l1 = 0.5 * (std::abs(f(a)) + std::abs(f(b)));
    for (int i = 1; i < n; ++i) {
        const double v = f(a + i * h);
        sum += v;
        l1 += std::abs(v);
    }
    double prev = sum * h;
    for (int level = 0; level < max_levels; ++level) {
        double add = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = f(a + (i + 0.5) * h);
            add += v;
            l1 += std::abs(v);
        }
        sum += add;
        n *= 2;
        h *= 0.5;
        const double cur = sum * h;
        const double err = std::abs(cur - prev);
        if (level >= 2 && err <= abs_tol) return {cur, err, l1 * h};
        prev = cur;
    }
    throw ConvergenceError("trapezoid_doubling: no convergence after maximal refinement");
}

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// N-point Gauss-Legendre rule mapped to [a, b].
template <unsigned N>
Rule1D gauss_legendre(double a, double b) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Rule1D r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            r.nodes.push_back(c);
            r.weights.push_back(h * w[i]);
            continue;
        }
        r.nodes.push_back(c - h * x[i]);
        r.weights.push_back(h * w[i]);
        r.nodes.push_back(c + h * x[i]);
        r.weights.push_back(h * w[i]);
    }
    return r;
}

// Iterated adaptive integration over [xa, xb] x [ya, yb]. The inner error
// estimates are accumulated into the outer one.
template <class F>
QuadResult integrate_2d(F&& f, double xa, double xb, double ya, double yb, double rel_tol,
                        unsigned max_depth = 10) {
    double inner_err = 0.0;
    auto outer = [&](double x) {
        auto g = [&](double y) { return f(x, y); };
        const QuadResult r = gauss_kronrod(g, ya, yb, rel_tol, max_depth);
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    QuadResult r = gauss_kronrod(outer, xa, xb, rel_tol, max_depth);
    r.error += inner_err * (xb - xa);
    return r;
}

// Same as integrate_2d but with y-limits depending on x.
template <class F, class Lo, class Hi>
QuadResult integrate_2d_region(F&& f, double xa, double xb, Lo&& y_lo, Hi&& y_hi, double rel_tol,
                               unsigned max_depth = 10) {
    double inner_err = 0.0;
    auto outer = [&](double x) {
        const double ya = y_lo(x);
        const double yb = y_hi(x);
        if (!(yb > ya)) return 0.0;
        auto g = [&](double y) { return f(x, y); };
        const QuadResult r = gauss_kronrod(g, ya, yb, rel_tol, max_depth);
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    QuadResult r = gauss_kronrod(outer, xa, xb, rel_tol, max_depth);
    r.error += inner_err * (xb - xa);
    return r;
}

// Pairwise (cascade) summation; order-deterministic.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_sum(v, m) + pairwise_sum(v + m, n - m);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

// gauss_kronrod_abs on `panels` equal pieces, so that narrow features are not
// missed by the first 15-point sample of a wide interval.
template <class F>
QuadResult gauss_kronrod_abs_panels(F&& f, double a, double b, double abs_tol, unsigned panels,
                                    unsigned max_depth = 12) {
    QuadResult r;
    const double h = (b - a) / panels;
    for (unsigned k = 0; k < panels; ++k) {
        const double lo = a + k * h, hi = k + 1 == panels ? b : a + (k + 1) * h;
        const QuadResult p = gauss_kronrod_abs(f, lo, hi, abs_tol / panels, max_depth);
        r.value += p.value;
        r.error += p.error;
        r.l1 += p.l1;
    }
    return r;
}

// Absolute-tolerance variant of integrate_2d_region; each inner integral
// gets abs_tol / (2 (xb - xa)), the outer one abs_tol / 2.
template <class F, class Lo, class Hi>
QuadResult integrate_2d_region_abs(F&& f, double xa, double xb, Lo&& y_lo, Hi&& y_hi, double abs_tol,
                                   unsigned max_depth = 10, unsigned panels = 16) {
    double inner_err = 0.0;
    const double inner_tol = 0.5 * abs_tol / (xb - xa);
    auto outer = [&](double x) {
        const double ya = y_lo(x);
        const double yb = y_hi(x);
        if (!(yb > ya)) return 0.0;
        auto g = [&](double y) { return f(x, y); };
        const QuadResult r = gauss_kronrod_abs_panels(g, ya, yb, inner_tol, panels, max_depth);
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    QuadResult r = gauss_kronrod_abs_panels(outer, xa, xb, 0.5 * abs_tol, panels, max_depth);
    r.error += inner_err * (xb - xa);
    return r;
}

}  // namespace kolmo
