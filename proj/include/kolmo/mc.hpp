#pragma once

// Euler-Maruyama Monte Carlo for dS = mu S dt + sigma S dW, dA = f(S) dt with
// per-path counter-based random streams, so results do not depend on the
// number of worker threads.

#include <kolmo/errors.hpp>
#include <kolmo/payoff.hpp>
#include <kolmo/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace kolmo {

using StateFunction = std::function<double(double S, double A, double t)>;

struct ModelSpec {
    StateFunction mu;
    StateFunction sigma;
    StateFunction r;
    Averaging averaging = Averaging::geometric;
    bool constant = false;  // coefficients do not depend on the state
};

inline ModelSpec constant_model(double mu, double sigma, double r, Averaging averaging) {
    ModelSpec m;
    m.mu = [mu](double, double, double) { return mu; };
    m.sigma = [sigma](double, double, double) { return sigma; };
    m.r = [r](double, double, double) { return r; };
    m.averaging = averaging;
    m.constant = true;
    return m;
}

struct McConfig {
    std::uint64_t n_paths = 100000;
    std::uint32_t n_steps = 200;
    std::uint64_t seed = 1;
    bool antithetic = false;
    unsigned threads = 1;
};

// splitmix64 as a UniformRandomBitGenerator; each path gets its own stream
// keyed by (seed, stream index).
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mix(seed ^ 0x6a09e667f3bcc909ULL);
        const std::uint64_t a = mix();
        SplitMix64 mix2(a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
        return SplitMix64(mix2());
    }

private:
    std::uint64_t state_;
};

struct SampleSet {
    std::vector<double> S;
    std::vector<double> A;
    std::vector<double> discount;  // exp(-int r dt) along the path
    std::size_t size() const { return S.size(); }
};

namespace detail {

template <class Body>
void parallel_chunks(std::uint64_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2 * threads) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (n + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
        const std::uint64_t lo = k * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline double average_integrand(Averaging a, double S) { return a == Averaging::geometric ? std::log(S) : S; }

}  // namespace detail

// Terminal (S_T, A_T) after `horizon`. log S takes Euler steps with the
// coefficients frozen at the left end (exact for constant mu, sigma); A and
// the discount exponent use the trapezoid rule.
inline SampleSet simulate_terminal(const ModelSpec& model, double S0, double A0, double horizon,
                                   const McConfig& cfg, double t0 = 0.0) {
    if (!(S0 > 0.0)) throw DomainError("simulate_terminal: S0 must be positive");
    if (!(horizon >= 0.0)) throw DomainError("simulate_terminal: horizon must be nonnegative");
    if (cfg.n_paths == 0 || cfg.n_steps == 0) throw DomainError("simulate_terminal: empty configuration");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw DomainError("simulate_terminal: antithetic sampling needs an even number of paths");

    SampleSet out;
    out.S.resize(cfg.n_paths);
    out.A.resize(cfg.n_paths);
    out.discount.resize(cfg.n_paths);
    const double dt = horizon / cfg.n_steps;
    const double sq = std::sqrt(dt);

    // Constant coefficients are read once.
    const double mu_c = model.constant ? model.mu(S0, A0, t0) : 0.0;
    const double sig_c = model.constant ? model.sigma(S0, A0, t0) : 0.0;
    const double r_c = model.constant ? model.r(S0, A0, t0) : 0.0;

    detail::parallel_chunks(cfg.n_paths, cfg.threads, [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t p = lo; p < hi; ++p) {
            const std::uint64_t stream = cfg.antithetic ? p / 2 : p;
            const double sign = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
            SplitMix64 rng = SplitMix64::stream(cfg.seed, stream);
            std::normal_distribution<double> normal;
            double x = std::log(S0), S = S0, A = A0, R = 0.0;
            double fS = detail::average_integrand(model.averaging, S);
            double t = t0;
            double r_prev = model.constant ? r_c : model.r(S, A, t);
            for (std::uint32_t k = 0; k < cfg.n_steps; ++k) {
                const double mu = model.constant ? mu_c : model.mu(S, A, t);
                const double sig = model.constant ? sig_c : model.sigma(S, A, t);
                const double z = sign * normal(rng);
                x += (mu - 0.5 * sig * sig) * dt + sig * sq * z;
                const double S_new = std::exp(x);
                const double f_new = model.averaging == Averaging::geometric ? x : S_new;
                A += 0.5 * (fS + f_new) * dt;
                t = t0 + (k + 1) * dt;
                S = S_new;
                fS = f_new;
                const double r_new = model.constant ? r_c : model.r(S, A, t);
                R += 0.5 * (r_prev + r_new) * dt;
                r_prev = r_new;
            }
            out.S[p] = S;
            out.A[p] = A;
            out.discount[p] = std::exp(-R);
        }
    });
    return out;
}

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::uint64_t n_effective = 0;  // independent samples behind the error bar
};

// Mean and standard error; antithetic pairs are averaged first.
inline McEstimate summarize(const std::vector<double>& values, bool antithetic) {
    std::vector<double> v;
    if (antithetic) {
        v.resize(values.size() / 2);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * (values[2 * k] + values[2 * k + 1]);
    } else {
        v = values;
    }
    if (v.empty()) throw DomainError("summarize: no samples");
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> dev(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) dev[k] = (v[k] - mean) * (v[k] - mean);
    const double var = v.size() > 1 ? pairwise_sum(dev) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n), v.size()};
}

// Discounted expectation of payoff(S_T, A_T) from the state (S, A) at time t.
inline McEstimate mc_price(const ModelSpec& model, const PricingSpec& spec, double S, double A, double t,
                           const McConfig& cfg) {
    if (!(t < spec.maturity)) throw DomainError("mc_price: t must be before maturity");
    if (!spec.payoff) throw DomainError("mc_price: payoff not set");
    const SampleSet s = simulate_terminal(model, S, A, spec.maturity - t, cfg, t);
    std::vector<double> vals(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) vals[k] = s.discount[k] * spec.payoff(s.S[k], s.A[k]);
    return summarize(vals, cfg.antithetic);
}

struct BinSpec {
    double x_lo = 0.0, x_hi = 1.0;
    std::size_t nx = 10;
    double y_lo = 0.0, y_hi = 1.0;
    std::size_t ny = 10;
};

struct Histogram2D {
    BinSpec bins;
    std::uint64_t total = 0;           // all samples, including those outside the bins
    std::vector<std::uint64_t> count;  // row-major, x fastest
    std::vector<double> density;       // count / (total * bin area)
    std::vector<double> sigma;         // sqrt(count) / (total * bin area)

    double bin_area() const {
        return (bins.x_hi - bins.x_lo) / bins.nx * (bins.y_hi - bins.y_lo) / bins.ny;
    }
    // 3-sigma Poisson band [density - 3 sigma, density + 3 sigma] of bin k.
    double band_lo(std::size_t k) const { return density[k] - 3.0 * sigma[k]; }
    double band_hi(std::size_t k) const { return density[k] + 3.0 * sigma[k]; }
    double x_center(std::size_t i) const { return bins.x_lo + (i + 0.5) * (bins.x_hi - bins.x_lo) / bins.nx; }
    double y_center(std::size_t j) const { return bins.y_lo + (j + 0.5) * (bins.y_hi - bins.y_lo) / bins.ny; }
};

inline Histogram2D empirical_density(const std::vector<double>& xs, const std::vector<double>& ys,
                                     const BinSpec& bins, std::size_t min_samples = 10000) {
    if (xs.empty()) throw DomainError("empirical_density: empty sample set");
    if (xs.size() != ys.size()) throw DomainError("empirical_density: coordinate arrays differ in length");
    if (xs.size() < min_samples)
        throw DomainError("empirical_density: need at least " + std::to_string(min_samples) + " samples");
    if (bins.nx == 0 || bins.ny == 0 || !(bins.x_hi > bins.x_lo) || !(bins.y_hi > bins.y_lo))
        throw DomainError("empirical_density: bad bin specification");
    Histogram2D h;
    h.bins = bins;
    h.total = xs.size();
    h.count.assign(bins.nx * bins.ny, 0);
    const double wx = (bins.x_hi - bins.x_lo) / bins.nx, wy = (bins.y_hi - bins.y_lo) / bins.ny;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double fx = (xs[k] - bins.x_lo) / wx, fy = (ys[k] - bins.y_lo) / wy;
        if (!(fx >= 0.0) || !(fy >= 0.0) || fx >= bins.nx || fy >= bins.ny) continue;
        ++h.count[static_cast<std::size_t>(fy) * bins.nx + static_cast<std::size_t>(fx)];
    }
    const double norm = 1.0 / (static_cast<double>(h.total) * wx * wy);
    h.density.resize(h.count.size());
    h.sigma.resize(h.count.size());
    for (std::size_t k = 0; k < h.count.size(); ++k) {
        h.density[k] = static_cast<double>(h.count[k]) * norm;
        h.sigma[k] = std::sqrt(static_cast<double>(h.count[k])) * norm;
    }
    return h;
}

// Binary dump: "KSMP", u64 n, then S[], A[], discount[] as f64.
inline void write_samples(const std::string& path, const SampleSet& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write("KSMP", 4);
    const std::uint64_t n = s.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto* v : {&s.S, &s.A, &s.discount})
        os.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace kolmo
