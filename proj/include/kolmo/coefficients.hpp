#pragma once

// Variable coefficients of the divergence-form operators and the two
// smoothing procedures used by the constructive approximation: a radial
// cut-off blend towards the ellipticity constant (K) and an x-anisotropic
// convolution with a bump function (L).

#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/grid.hpp>
#include <kolmo/quadrature.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace kolmo {

using ScalarField = std::function<double(double, double, double)>;

// For kind L the functions take the price x > 0 (not log x).
struct CoefficientField {
    ScalarField a;
    ScalarField b;
    ScalarField r;
    double lambda = 1.0;
    double Lambda = 1.0;
    GeometryKind kind = GeometryKind::K;
    double holder_alpha = 1.0;
    bool time_dependent = true;  // false lets solvers cache coefficient arrays
};

inline CoefficientField constant_field(GeometryKind kind, double a, double b = 0.0, double r = 0.0) {
    CoefficientField f;
    f.a = [a](double, double, double) { return a; };
    f.b = [b](double, double, double) { return b; };
    f.r = [r](double, double, double) { return r; };
    f.lambda = a;
    f.Lambda = std::max({a, std::abs(b), std::abs(r)});
    f.kind = kind;
    f.time_dependent = false;
    return f;
}

// Coefficients of lambda x^2 d_xx + mu x d_x in divergence form:
// a = lambda, b = mu - lambda.
inline CoefficientField l_model_field(double lambda, double ito_drift = 1.0) {
    CoefficientField f = constant_field(GeometryKind::L, lambda, ito_drift - lambda, 0.0);
    f.lambda = lambda;
    return f;
}

struct BoundReport {
    double a_min = 0.0, a_max = 0.0, b_absmax = 0.0, r_absmax = 0.0;
    std::size_t samples = 0;
};

// Samples a, b, r on a regular lattice of the box (x-axis in the variable
// the field takes, i.e. price for kind L) and checks the declared bounds.
inline BoundReport check_bounds(const CoefficientField& f, Interval xr, Interval yr, Interval tr,
                                std::size_t n = 21, double slack = 1e-10) {
    BoundReport rep;
    rep.a_min = std::numeric_limits<double>::infinity();
    rep.a_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < 3; ++k) {
                const double x = xr.lo + xr.length() * static_cast<double>(i) / static_cast<double>(n - 1);
                const double y = yr.lo + yr.length() * static_cast<double>(j) / static_cast<double>(n - 1);
                const double t = tr.lo + tr.length() * static_cast<double>(k) / 2.0;
                const double a = f.a(x, y, t), b = f.b(x, y, t), r = f.r(x, y, t);
                rep.a_min = std::min(rep.a_min, a);
                rep.a_max = std::max(rep.a_max, a);
                rep.b_absmax = std::max(rep.b_absmax, std::abs(b));
                rep.r_absmax = std::max(rep.r_absmax, std::abs(r));
                ++rep.samples;
            }
    if (rep.a_min < f.lambda - slack || rep.a_max > f.Lambda + slack || rep.b_absmax > f.Lambda + slack ||
        rep.r_absmax > f.Lambda + slack)
        throw BoundViolation("coefficient field breaks lambda <= a <= Lambda, |b|, |r| <= Lambda: a in [" +
                             std::to_string(rep.a_min) + ", " + std::to_string(rep.a_max) + "], |b| <= " +
                             std::to_string(rep.b_absmax) + ", |r| <= " + std::to_string(rep.r_absmax));
    return rep;
}

enum class MollifierMode { cutoff_chi, smooth_rho };

struct MollifierSpec {
    int n = 1;
    MollifierMode mode = MollifierMode::cutoff_chi;
};

namespace detail {

// C-infinity step: 0 for u <= 0, 1 for u >= 1.
inline double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double p = std::exp(-1.0 / u);
    const double q = std::exp(-1.0 / (1.0 - u));
    return p / (p + q);
}

struct BumpRule {
    std::vector<std::array<double, 3>> nodes;
    std::vector<double> weights;
};

// Tensor Gauss-Legendre rule on the cube [-1/2, 1/2]^3 weighted by the bump
// exp(-1/(1 - 4|v|^2)) supported in the ball of radius 1/2; the discrete
// weights are normalised to sum to one so a constant is reproduced exactly
// and the output is a convex combination of input samples.
inline const BumpRule& bump_rule() {
    static const BumpRule rule = [] {
        BumpRule r;
        const Rule1D g = gauss_legendre<10>(-0.5, 0.5);
        double total = 0.0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            for (std::size_t j = 0; j < g.nodes.size(); ++j)
                for (std::size_t k = 0; k < g.nodes.size(); ++k) {
                    const double v2 = g.nodes[i] * g.nodes[i] + g.nodes[j] * g.nodes[j] + g.nodes[k] * g.nodes[k];
                    if (4.0 * v2 >= 1.0) continue;
                    const double w = g.weights[i] * g.weights[j] * g.weights[k] * std::exp(-1.0 / (1.0 - 4.0 * v2));
                    r.nodes.push_back({g.nodes[i], g.nodes[j], g.nodes[k]});
                    r.weights.push_back(w);
                    total += w;
                }
        for (double& w : r.weights) w /= total;
        return r;
    }();
    return rule;
}

}  // namespace detail

// chi_n: 1 on the disc of radius n, 0 outside radius n + 1, smooth in between.
inline double chi_n(int n, double x, double y) {
    const double rho = std::sqrt(x * x + y * y);
    return 1.0 - detail::smooth_step(rho - n);
}

// Cut-off (kind K): a_n = chi_n a + (1 - chi_n) lambda, b_n = chi_n b, r_n = chi_n r.
// Smooth (kind L): f_n(x, y, t) = int f(x - x xi/n, y - eta/n, t - tau/n) rho.
// Output bounds are sampled on `sample_box` (price coordinates for L).
inline CoefficientField mollify(const CoefficientField& field, const MollifierSpec& spec,
                                Interval sample_x = {-20.0, 20.0}, Interval sample_y = {-20.0, 20.0},
                                Interval sample_t = {0.0, 1.0}) {
    if (spec.n < 1) throw DomainError("mollify: n must be >= 1");
    const bool want_k = spec.mode == MollifierMode::cutoff_chi;
    if (want_k != (field.kind == GeometryKind::K))
        throw DomainError("mollify: cutoff_chi applies to kind K, smooth_rho to kind L");

    CoefficientField out = field;
    const int n = spec.n;
    auto src = std::make_shared<CoefficientField>(field);
    if (want_k) {
        const double lam = field.lambda;
        out.a = [src, n, lam](double x, double y, double t) {
            const double c = chi_n(n, x, y);
            return c * src->a(x, y, t) + (1.0 - c) * lam;
        };
        out.b = [src, n](double x, double y, double t) { return chi_n(n, x, y) * src->b(x, y, t); };
        out.r = [src, n](double x, double y, double t) { return chi_n(n, x, y) * src->r(x, y, t); };
    } else {
        auto conv = [n](const ScalarField& f) {
            return ScalarField([f, n](double x, double y, double t) {
                const auto& rule = detail::bump_rule();
                double s = 0.0;
                for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                    const auto& v = rule.nodes[q];
                    s += rule.weights[q] * f(x - x * v[0] / n, y - v[1] / n, t - v[2] / n);
                }
                return s;
            });
        };
        out.a = conv(src->a);
        out.b = conv(src->b);
        out.r = conv(src->r);
        if (!(sample_x.lo > 0.0)) sample_x = {std::exp(-3.0), std::exp(3.0)};
    }
    check_bounds(out, sample_x, sample_y, sample_t, 15);
    return out;
}

}  // namespace kolmo
