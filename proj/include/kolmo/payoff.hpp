#pragma once

#include <kolmo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace kolmo {

enum class Averaging { geometric, arithmetic };

inline std::string to_string(Averaging a) { return a == Averaging::geometric ? "geometric" : "arithmetic"; }

struct GrowthBound {
    double M = 1.0;
    double C = 0.0;
    double alpha = 1.0;
};

// Payoff phi(S, A) at maturity together with the model constants it is
// priced under. For geometric averaging A is the integral of log S, for
// arithmetic averaging the integral of S.
struct PricingSpec {
    std::function<double(double, double)> payoff;
    std::string payoff_name = "call";
    Averaging kind = Averaging::geometric;
    double strike = 1.0;
    double maturity = 1.0;
    double sigma = 0.4;
    double mu = 0.0;  // Ito drift of S
    double r = 0.0;
    GrowthBound growth;
};

// Average-rate call: max(e^{A/T} - K, 0) (geometric) or max(A/T - K, 0).
inline std::function<double(double, double)> average_call(Averaging kind, double strike, double maturity) {
    if (kind == Averaging::geometric)
        return [strike, maturity](double, double A) { return std::max(std::exp(A / maturity) - strike, 0.0); };
    return [strike, maturity](double, double A) { return std::max(A / maturity - strike, 0.0); };
}

inline std::function<double(double, double)> average_put(Averaging kind, double strike, double maturity) {
    if (kind == Averaging::geometric)
        return [strike, maturity](double, double A) { return std::max(strike - std::exp(A / maturity), 0.0); };
    return [strike, maturity](double, double A) { return std::max(strike - A / maturity, 0.0); };
}

// Builds spec.payoff from spec.payoff_name.
inline void attach_payoff(PricingSpec& spec) {
    const std::string& n = spec.payoff_name;
    if (n == "call") {
        spec.payoff = average_call(spec.kind, spec.strike, spec.maturity);
    } else if (n == "put") {
        spec.payoff = average_put(spec.kind, spec.strike, spec.maturity);
    } else if (n == "constant") {
        spec.payoff = [](double, double) { return 1.0; };
    } else {
        throw DomainError("unknown payoff '" + n + "' (expected call, put or constant)");
    }
}

}  // namespace kolmo
