#include <kolmo/fd.hpp>
#include <kolmo/pricing.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <cmath>

using namespace kolmo;

namespace {

PricingSpec geometric_call(double sigma, double strike, double T) {
    PricingSpec s;
    s.kind = Averaging::geometric;
    s.sigma = sigma;
    s.strike = strike;
    s.maturity = T;
    s.growth = {1.0, 1.0 / T, 1.0};
    attach_payoff(s);
    return s;
}

CauchyProblem bounded_problem(double lambda, Function2 phi) {
    CauchyProblem p;
    p.field = constant_field(GeometryKind::K, lambda);
    p.initial = std::move(phi);
    p.kind = GeometryKind::K;
    p.growth = {1.0, 0.0, 1.0};
    return p;
}

// a v_xx + b v_x + x v_y - r v - v_t by central differences.
double k_residual(const Function3& v, double a, double b, double r, double x, double y, double t, double h) {
    const double vxx = (v(x + h, y, t) - 2 * v(x, y, t) + v(x - h, y, t)) / (h * h);
    const double vx = (v(x + h, y, t) - v(x - h, y, t)) / (2 * h);
    const double vy = (v(x, y + h, t) - v(x, y - h, t)) / (2 * h);
    const double vt = (v(x, y, t + h) - v(x, y, t - h)) / (2 * h);
    return a * vxx + b * vx + x * vy - r * v(x, y, t) - vt;
}

}  // namespace

TEST(Transform, GeometricConstantCoefficients) {
    PricingSpec s = geometric_call(0.4, 1.0, 1.0);
    s.r = 0.03;
    const CauchyProblem p = transform_geometric(s);
    EXPECT_EQ(p.kind, GeometryKind::K);
    EXPECT_NEAR(p.field.a(0.3, 1.0, 0.2), 0.08, 1e-15);
    EXPECT_NEAR(p.field.b(0.3, 1.0, 0.2), 0.03 - 0.08, 1e-9);
    EXPECT_NEAR(p.field.r(0.3, 1.0, 0.2), 0.03, 1e-15);
    EXPECT_DOUBLE_EQ(p.initial(0.5, 0.2), s.payoff(std::exp(0.5), 0.2));
    EXPECT_DOUBLE_EQ(p.field.lambda, 0.08);
    s.kind = Averaging::arithmetic;
    EXPECT_THROW(transform_geometric(s), DomainError);
}

TEST(Transform, VariableVolatilityDrifts) {
    PricingSpec s = geometric_call(0.4, 1.0, 1.0);
    auto sig = [](double x, double, double) { return 0.3 + 0.1 * std::tanh(x); };
    auto r = [](double, double, double) { return 0.02; };
    const CauchyProblem g = transform_geometric(s, sig, r);
    const double x = 0.7, sx = sig(x, 0, 0), dsx = 0.1 / (std::cosh(x) * std::cosh(x));
    EXPECT_NEAR(g.field.b(x, 0, 0), 0.02 - 0.5 * sx * sx - sx * dsx, 1e-8);

    s.kind = Averaging::arithmetic;
    attach_payoff(s);
    auto sig_l = [](double x, double, double) { return 0.2 + 0.1 / (1.0 + x); };
    const CauchyProblem l = transform_arithmetic(s, sig_l, r);
    EXPECT_EQ(l.kind, GeometryKind::L);
    const double X = 1.5, sl = sig_l(X, 0, 0), dsl = -0.1 / ((1 + X) * (1 + X));
    EXPECT_NEAR(l.field.a(X, 0, 0), 0.5 * sl * sl, 1e-15);
    EXPECT_NEAR(l.field.b(X, 0, 0), 0.02 - 0.5 * sl * sl - X * sl * dsl, 1e-8);
    EXPECT_DOUBLE_EQ(l.initial(1.2, 3.0), s.payoff(1.2, 3.0));
}

TEST(Transform, UntransformReadsAtRemainingTime) {
    auto v = [](double x, double y, double t) { return x + 10 * y + 100 * t; };
    EXPECT_NEAR(untransform_geometric(v, std::exp(0.5), 2.0, 0.25, 1.0), 0.5 + 20 + 75, 1e-12);
}

TEST(Shift, MapsModelKernelToVariableDrift) {
    const double sigma = 0.6, r = 0.04, lambda = 0.5 * sigma * sigma;
    Function3 u = [lambda](double x, double y, double t) { return gamma_k({lambda}, {x, y, t}, {0.1, -0.2, 0}); };
    const Function3 v = constant_coeff_unshift(u, r, sigma);
    for (const auto& p : {EventPoint{0.2, -0.1, 0.8}, EventPoint{-0.3, 0.1, 1.2}}) {
        const double res = k_residual(v, lambda, r - lambda, r, p.x, p.y, p.t, 1e-3);
        EXPECT_LT(std::abs(res), 1e-4 * std::max(1.0, std::abs(v(p.x, p.y, p.t))));
    }
    const Function3 back = constant_coeff_shift(v, r, sigma);
    EXPECT_NEAR(back(0.3, 0.4, 0.9), u(0.3, 0.4, 0.9), 1e-13);
}

TEST(Shift, ZeroOrderRescale) {
    auto r = [](double t) { return 0.1 + 0.05 * t; };
    const Function3 v = zero_order_rescale([](double, double, double) { return 2.0; }, r, 0.5);
    EXPECT_EQ(v(1, 1, 0.5), 2.0);
    const double R = 0.1 * 1.5 + 0.025 * (4.0 - 0.25);
    EXPECT_NEAR(v(1, 1, 2.0), 2.0 * std::exp(-R), 1e-13);
    const double h = 1e-4;
    const double vt = (v(0, 0, 1.0 + h) - v(0, 0, 1.0 - h)) / (2 * h);
    EXPECT_NEAR(vt, -r(1.0) * v(0, 0, 1.0), 1e-7);
}

TEST(Price, ConstantDatumGivesOne) {
    const KernelResult k = price(gamma_k_evaluator(0.5), bounded_problem(0.5, [](double, double) { return 1.0; }),
                                 {0.3, -0.4, 1.0}, 1e-7);
    EXPECT_NEAR(k.value, 1.0, 1e-6);
    CauchyProblem l;
    l.field = l_model_field(1.0);
    l.initial = [](double, double) { return 1.0; };
    l.kind = GeometryKind::L;
    l.growth = {1.0, 0.0, 1.0};
    const KernelResult kl = price(gamma_l_evaluator(1.0, 1.0), l, {1.0, 0.0, 1.0}, 1e-6);
    EXPECT_NEAR(kl.value, 1.0, 1e-6 + kl.abs_error_estimate);
}

TEST(Price, GeometricCallMatchesClosedForm) {
    const PricingSpec s = geometric_call(0.4, 1.0, 1.0);
    const KernelResult k = price(gamma_k_evaluator(0.08, 0.0, true), transform_geometric(s), {0.0, 0.0, 1.0}, 1e-6);
    const double exact = oracle::geometric_asian_call(-0.08, 0.4, 1.0, 1.0);
    EXPECT_NEAR(k.value, exact, k.abs_error_estimate);
    EXPECT_LT(k.abs_error_estimate, 1e-5);
}

TEST(Price, Linearity) {
    auto f1 = [](double x, double y) { return 1.0 / (1.0 + x * x + y * y); };
    auto f2 = [](double x, double) { return 0.5 + 0.5 * std::tanh(x); };
    const KernelEvaluator ev = gamma_k_evaluator(0.5);
    const EventPoint z{0.2, 0.1, 0.7};
    const KernelResult a = price(ev, bounded_problem(0.5, f1), z, 1e-7);
    const KernelResult b = price(ev, bounded_problem(0.5, f2), z, 1e-7);
    CauchyProblem sum = bounded_problem(0.5, [&](double x, double y) { return f1(x, y) + 2.0 * f2(x, y); });
    sum.growth.M = 3.0;
    const KernelResult c = price(ev, sum, z, 1e-7);
    EXPECT_NEAR(c.value, a.value + 2.0 * b.value, c.abs_error_estimate + a.abs_error_estimate + 2 * b.abs_error_estimate);
}

TEST(Price, AgreesWithFiniteDifferences) {
    const double lambda = 0.5, T = 0.5;
    auto phi = [](double x, double y) { return 1.0 / (1.0 + x * x + y * y); };
    GridSpec spec{{-6, 6}, {-6, 6}, {0, T}, 241, 241, 200};
    Grid2 init = spec.make_grid();
    for (std::size_t j = 0; j < init.ny; ++j)
        for (std::size_t i = 0; i < init.nx; ++i) init(i, j) = phi(init.xc(i), init.yc(j));
    const Grid2 fd = solve_cauchy(constant_field(GeometryKind::K, lambda), init, spec).series.back();
    const KernelEvaluator ev = gamma_k_evaluator(lambda);
    for (double x : {-1.0, 0.0, 1.0})
        for (double y : {-1.0, 0.0, 1.0}) {
            const double rep = price(ev, bounded_problem(lambda, phi), {x, y, T}, 1e-6).value;
            EXPECT_NEAR(fd.sample(x, y), rep, 0.02 * rep) << x << ' ' << y;
        }
}

TEST(Price, Refusals) {
    const KernelEvaluator ev = gamma_k_evaluator(0.08);
    CauchyProblem q = bounded_problem(0.08, [](double x, double) { return std::exp(0.5 * x * x); });
    q.growth = {1.0, 1.0, 2.0};
    EXPECT_THROW(price(ev, q, {0, 0, 2.0}, 1e-4), GrowthViolation);  // beyond 1 / (8 C lambda)
    CauchyProblem fast = bounded_problem(0.08, [](double x, double) { return std::exp(x * x); });
    fast.growth = {1.0, 1.0, 1.0};
    EXPECT_THROW(price(ev, fast, {0, 0, 1.0}, 1e-4), GrowthViolation);

    CauchyProblem l;
    l.field = l_model_field(1.0);
    l.initial = [](double x, double) { return x * x; };
    l.kind = GeometryKind::L;
    l.growth = {1.0, 1.0, 1.5};
    EXPECT_THROW(price(gamma_l_evaluator(1.0), l, {1, 0, 1}, 1e-4), GrowthViolation);

    KernelEvaluator bare = ev;
    bare.box = nullptr;
    const CauchyProblem one = bounded_problem(0.08, [](double, double) { return 1.0; });
    EXPECT_THROW(price(bare, one, {0, 0, 1}, 1e-4), EnvelopeUnavailable);
    EXPECT_THROW(price(gamma_l_evaluator(1.0), one, {1, 0, 1}, 1e-4), DomainError);
    EXPECT_THROW(price(ev, one, {0, 0, 0}, 1e-4), DomainError);
    EXPECT_THROW(price(ev, one, {0, 0, 1}, 0.0), DomainError);
}

TEST(Growth, Examples) {
    const LatticeSpec lat;
    EXPECT_FALSE(growth_check([](double x, double) { return std::exp(x * x); }, {1.0, 1.0, 1.0}, lat).ok);
    EXPECT_TRUE(growth_check([](double x, double) { return std::exp(0.5 * std::abs(x)); }, {1.0, 1.0, 1.0}, lat).ok);
    EXPECT_TRUE(growth_check([](double x, double y) { return 1.0 + x + y; }, {1.0, 2.0, 1.0},
                             {{0.01, 10}, {-10, 10}, 41}, GeometryKind::L)
                    .ok);
    EXPECT_FALSE(growth_check([](double x, double) { return x * x; }, {1.0, 1.0, 1.0}, {{0.01, 10}, {-10, 10}, 41},
                              GeometryKind::L)
                     .ok);
    EXPECT_THROW(growth_check([](double, double) { return 1.0; }, {1.0, 1.0, 2.5}, lat), DomainError);
    EXPECT_THROW(growth_check([](double, double) { return 1.0; }, {0.0, 1.0, 1.0}, lat), DomainError);
    // Geometric call in log-price: e^{A/T} grows like exp(|y| / T).
    EXPECT_TRUE(growth_check(geometric_call(0.4, 1.0, 1.0), lat).ok);
}
