// Geometric average-rate call three ways: closed form, kernel
// representation, Monte Carlo. Also prints one control value.

#include <kolmo/kolmo.hpp>

#include <cmath>
#include <cstdio>

using namespace kolmo;

int main() {
    const double sigma = 0.4, T = 1.0, K = 1.0;
    const double lambda = 0.5 * sigma * sigma;

    PricingSpec spec;
    spec.kind = Averaging::geometric;
    spec.sigma = sigma;
    spec.strike = K;
    spec.maturity = T;
    spec.growth = {1.0, 1.0 / T, 1.0};
    attach_payoff(spec);

    // Under zero rates, log S_T is normal and so is the time integral of log S:
    // mean -lambda T^2 / 2, variance sigma^2 T^3 / 3.
    const double m = -0.5 * lambda * T, s = sigma * std::sqrt(T / 3.0);
    const double d1 = (m + s * s - std::log(K)) / s, d2 = d1 - s;
    auto N = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double exact = std::exp(m + 0.5 * s * s) * N(d1) - K * N(d2);

    const KernelResult k = price(gamma_k_evaluator(lambda, 0.0, true), transform_geometric(spec), {0.0, 0.0, T}, 1e-7);
    const McEstimate mc = mc_price(constant_model(0.0, sigma, 0.0, Averaging::geometric), spec, 1.0, 0.0, 0.0,
                                   {200000, 100, 42, true});

    std::printf("closed form  %.8f\n", exact);
    std::printf("kernel       %.8f  (+/- %.1e)\n", k.value, k.abs_error_estimate);
    std::printf("monte carlo  %.8f  (se %.1e)\n", mc.estimate, mc.standard_error);

    const PsiValue v = psi({{1.0, -1.0, 2.0}, {1.0, 0.0, 0.0}});
    std::printf("psi((1,-1,2) -> (1,0,0)) = %.8f [%s branch]\n", v.cost, to_string(v.branch).c_str());
}
