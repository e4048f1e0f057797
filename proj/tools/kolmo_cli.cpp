// kolmo_cli: kernels, control values, FD solves, Monte Carlo, pricing and
// validation suites from the command line.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 validation failure.

#include <kolmo/kolmo.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace kolmo;

namespace {

constexpr const char* kCsvDoc = R"(CSV outputs (first line is a '#' comment carrying the timestamp; the body is
deterministic given the arguments and --seed):
  price:    spec_hash  64-bit FNV-1a of the canonical pricing spec (16 hex digits)
            price      discounted price at (S, A, t)
            error      absolute error estimate (kernel) or standard error (mc)
            method     kernel or mc
  mc:       quantity   E[S_T], E[A_T] or the discounted payoff
            estimate   sample mean
            standard_error  standard error of the mean
            paths      number of simulated paths
  validate: suite      suite name
            case       case label
            value      measured discrepancy (relative L1 for reproduction,
                       relative gap for psi)
            tol        threshold the case is held to
            pass       1 if value <= tol, else 0
  fd-solve --csv:  x, y, value  nodes of the final slice (x is log-price for --kind l))";

// ---- argument helpers ------------------------------------------------------

EventPoint parse_point(const std::string& key, const std::string& text) {
    std::stringstream ss(text);
    std::string item;
    std::vector<double> v;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': expected x,y,t, got '" + text + "'");
        }
    }
    if (v.size() != 3) throw ConfigError("key '" + key + "': expected three comma-separated numbers, got '" + text + "'");
    return {v[0], v[1], v[2]};
}

Interval parse_interval(const std::string& key, const std::string& text) {
    const auto c = text.find(',');
    try {
        if (c == std::string::npos) throw std::invalid_argument(text);
        Interval r{std::stod(text.substr(0, c)), std::stod(text.substr(c + 1))};
        if (!(r.hi > r.lo)) throw std::invalid_argument(text);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected lo,hi with lo < hi, got '" + text + "'");
    }
}

GeometryKind parse_kind(const std::string& key, const std::string& s) {
    if (s == "k" || s == "K") return GeometryKind::K;
    if (s == "l" || s == "L") return GeometryKind::L;
    throw ConfigError("key '" + key + "': expected k or l, got '" + s + "'");
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// Single writer for CSV artifacts: a comment line with the timestamp, then
// header and rows. Without a path, the body goes to stdout.
class CsvSink {
public:
    CsvSink(const std::string& path, const std::string& command, const std::string& header) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ConfigError("key '--output': cannot open '" + path + "'");
            file_ << "# kolmo_cli " << command << " " << timestamp() << '\n';
        }
        out() << header << '\n';
    }
    std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    void row(const std::string& r) { out() << r << '\n'; }

private:
    std::ofstream file_;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- kernel ----------------------------------------------------------------

struct KernelArgs {
    std::string kind = "k", point, pole;
    double lambda = 1.0, mu = 1.0, tol = 1e-10;
};

int run_kernel(const KernelArgs& a) {
    const GeometryKind kind = parse_kind("--kind", a.kind);
    const EventPoint z = parse_point("--point", a.point), pole = parse_point("--pole", a.pole);
    if (!(a.lambda > 0.0)) throw ConfigError("key '--lambda' must be positive");
    if (kind == GeometryKind::K) {
        std::printf("%.12g\n", gamma_k({a.lambda}, z, pole));
    } else {
        const KernelResult k = gamma_l_lambda({a.lambda}, z, pole, a.tol, a.mu);
        std::printf("%.12g error=%.3g\n", k.value, k.abs_error_estimate);
    }
    return 0;
}

// ---- psi -------------------------------------------------------------------

struct PsiArgs {
    std::string start, end;
    int bruteforce = 0;
};

int run_psi(const PsiArgs& a) {
    const ControlEndpoints e{parse_point("--start", a.start), parse_point("--end", a.end)};
    const PsiValue v = psi(e);
    std::printf("cost=%.12g branch=%s energy=%.12g\n", v.cost, to_string(v.branch).c_str(), v.E);
    if (a.bruteforce > 0) {
        const BruteForceResult b = psi_bruteforce(e, a.bruteforce, 2000);
        std::printf("bruteforce=%.12g steps=%d converged=%d\n", b.cost, a.bruteforce, b.converged ? 1 : 0);
    }
    return 0;
}

// ---- price -----------------------------------------------------------------

struct PriceArgs {
    std::string config, method = "kernel", output;
    std::map<std::string, std::string> flags;  // pricing keys given on the command line
    double S = 1.0, A = 0.0, t = 0.0, tol = 1e-4;
    std::uint64_t paths = 200000, seed = 1;
    std::uint32_t steps = 200;
};

PricingSpec merged_spec(const PriceArgs& a) {
    ConfigMap m = a.config.empty() ? ConfigMap{} : load_config(a.config);
    for (const auto& [key, value] : a.flags) {
        const auto it = m.find(key);
        if (it != m.end() && it->second.value != value)
            std::fprintf(stderr, "conflict: key '%s' is '%s' at %s and '%s' on the command line; using the flag\n",
                         key.c_str(), it->second.value.c_str(), it->second.source.c_str(), value.c_str());
        m[key] = {value, "flag --" + key};
    }
    return pricing_spec_from_config(m);
}

constexpr double kArithmeticMinYorTime = 0.2;

// Representation-formula price at (S, A, t). The drift of S is spec.mu,
// discounting is at spec.r.
KernelResult kernel_price(const PricingSpec& s, double S, double A, double t, double tol) {
    const double tau = s.maturity - t;
    const double lambda = 0.5 * s.sigma * s.sigma;
    if (s.kind == Averaging::geometric) {
        // The shifted evaluator discounts at its own rate; shift at mu and
        // correct the discount to r.
        const KernelResult k = price(gamma_k_evaluator(lambda, s.mu, true), transform_geometric(s),
                                     {std::log(S), A, tau}, tol);
        const double corr = std::exp((s.mu - s.r) * tau);
        return {k.value * corr, k.abs_error_estimate * corr, tol};
    }
    CauchyProblem p;
    p.field = l_model_field(lambda, s.mu);
    p.initial = s.payoff;
    p.kind = GeometryKind::L;
    p.growth = s.growth;
    // Yor time of the L kernel is sigma^2 tau / 4. Below about 0.2 the theta
    // integral cancels to the last digits, kernel errors exceed any useful
    // tolerance and the cubature refines without converging.
    if (0.25 * s.sigma * s.sigma * tau < kArithmeticMinYorTime)
        throw ConvergenceError(fmt("arithmetic kernel route needs sigma^2 (T - t) / 4 >= %g, got %g; use --method mc",
                                   kArithmeticMinYorTime, 0.25 * s.sigma * s.sigma * tau));
    const KernelResult k = price(gamma_l_evaluator(lambda, s.mu), p, {S, A, tau}, tol);
    const double disc = std::exp(-s.r * tau);
    return {k.value * disc, k.abs_error_estimate * disc, tol};
}

int run_price(const PriceArgs& a) {
    if (a.method != "kernel" && a.method != "mc" && a.method != "both")
        throw ConfigError("key '--method': expected kernel, mc or both, got '" + a.method + "'");
    if (!(a.S > 0.0)) throw ConfigError("key '--S' must be positive");
    const PricingSpec s = merged_spec(a);
    if (!(a.t < s.maturity)) throw ConfigError("key '--t' must be before the maturity");
    std::vector<std::string> rows;
    if (a.method != "mc") {
        const KernelResult k = kernel_price(s, a.S, a.A, a.t, a.tol);
        rows.push_back(price_csv_row(s, k.value, k.abs_error_estimate, "kernel"));
    }
    if (a.method != "kernel") {
        McConfig cfg;
        cfg.n_paths = a.paths;
        cfg.n_steps = a.steps;
        cfg.seed = a.seed;
        const McEstimate e = mc_price(constant_model(s.mu, s.sigma, s.r, s.kind), s, a.S, a.A, a.t, cfg);
        rows.push_back(price_csv_row(s, e.estimate, e.standard_error, "mc"));
    }
    CsvSink csv(a.output, "price", price_csv_header());
    for (const auto& r : rows) csv.row(r);
    return 0;
}

// ---- fd-solve --------------------------------------------------------------

struct FdArgs {
    std::string kind = "k", pole = "0,0,0", x_range = "-5,5", y_range = "-3,3", output, csv;
    double lambda = 1.0, mu = 1.0, t_end = 0.5, width = 2.0;
    std::size_t nx = 129, ny = 129, nt = 256;
    std::string scheme = "van_leer";
};

int run_fd(const FdArgs& a) {
    const GeometryKind kind = parse_kind("--kind", a.kind);
    const EventPoint pole = parse_point("--pole", a.pole);
    GridSpec g{parse_interval("--x-range", a.x_range), parse_interval("--y-range", a.y_range),
               {pole.t, pole.t + a.t_end}, a.nx, a.ny, a.nt};
    if (!(a.t_end > 0.0)) throw ConfigError("key '--t-end' must be positive");
    if (!(a.lambda > 0.0)) throw ConfigError("key '--lambda' must be positive");
    SchemeConfig cfg;
    if (a.scheme == "upwind1") cfg.transport = TransportScheme::upwind1;
    else if (a.scheme != "van_leer") throw ConfigError("key '--scheme': expected van_leer or upwind1");
    const CoefficientField f = kind == GeometryKind::K ? constant_field(GeometryKind::K, a.lambda)
                                                       : l_model_field(a.lambda, a.mu);
    const SolveResult r = approximate_fundamental_solution(f, pole, g, a.width, cfg);
    const Grid2& u = r.series.back();
    std::printf("mass=%.10g boundary_flux=%.3g courant=%.4g splitting=\"%s\"\n", u.integral(), r.boundary_flux,
                r.max_courant, r.splitting.c_str());
    if (!a.output.empty()) {
        write_series(a.output, r.series);
        write_sidecar(a.output + ".json", r.series,
                      {{"kind", to_string(kind)}, {"lambda", a.lambda}, {"pole", {pole.x, pole.y, pole.t}},
                       {"delta_width_cells", a.width}, {"scheme", a.scheme},
                       {"x_axis", kind == GeometryKind::K ? "x" : "log x"}});
    }
    if (!a.csv.empty()) {
        std::ofstream os(a.csv);
        if (!os) throw ConfigError("key '--csv': cannot open '" + a.csv + "'");
        os << "# kolmo_cli fd-solve " << timestamp() << '\n';
        write_slice_csv(os, u);
    }
    return 0;
}

// ---- mc --------------------------------------------------------------------

struct McArgs {
    std::string averaging = "geometric", output, samples;
    double mu = 0.0, sigma = 0.4, r = 0.0, S = 1.0, A = 0.0, horizon = 1.0;
    std::uint64_t paths = 100000, seed = 1;
    std::uint32_t steps = 200;
    unsigned threads = 1;
    bool antithetic = false;
};

int run_mc(const McArgs& a) {
    Averaging av;
    if (a.averaging == "geometric") av = Averaging::geometric;
    else if (a.averaging == "arithmetic") av = Averaging::arithmetic;
    else throw ConfigError("key '--averaging': expected geometric or arithmetic, got '" + a.averaging + "'");
    McConfig cfg{a.paths, a.steps, a.seed, a.antithetic, a.threads};
    const SampleSet s = simulate_terminal(constant_model(a.mu, a.sigma, a.r, av), a.S, a.A, a.horizon, cfg);
    CsvSink csv(a.output, "mc", "quantity,estimate,standard_error,paths");
    auto emit = [&](const char* name, const std::vector<double>& v) {
        const McEstimate e = summarize(v, a.antithetic);
        csv.row(fmt("%s,%.12g,%.6g,%llu", name, e.estimate, e.standard_error,
                    static_cast<unsigned long long>(s.size())));
    };
    emit("S_T", s.S);
    emit("A_T", s.A);
    emit("discount", s.discount);
    if (!a.samples.empty()) write_samples(a.samples, s);
    return 0;
}

// ---- validate --------------------------------------------------------------

struct ValidateArgs {
    std::string suite = "reproduction", output;
    double tol = 2e-2;
};

struct CaseResult {
    std::string name;
    double value = 0.0;
};

// Chapman-Kolmogorov through tau = 0.5: the first leg is the FD kernel (or
// the closed form), the second leg the closed form, and the direct side the
// FD kernel at t = 1 (or the closed form), on a 41 x 41 target grid.
std::vector<CaseResult> reproduction_suite() {
    std::vector<CaseResult> out;
    const EventPoint pole{0, 0, 0};
    for (double lambda : {0.5, 1.0}) {
        for (bool fd : {false, true}) {
            const GridSpec g{{-6, 6}, {-4, 4}, {0, 1}, 241, 161, 200};
            Grid2 first = g.make_grid();
            Grid2 direct(41, 41, {-4, 4}, {-3, 3});
            if (fd) {
                SchemeConfig cfg;
                cfg.save_times = {0.5, 1.0};
                const SolveResult r =
                    approximate_fundamental_solution(constant_field(GeometryKind::K, lambda), pole, g, 2.0, cfg);
                first = r.series.slices[0];
                for (std::size_t j = 0; j < direct.ny; ++j)
                    for (std::size_t i = 0; i < direct.nx; ++i)
                        direct(i, j) = r.series.slices[1].sample(direct.xc(i), direct.yc(j));
            } else {
                for (std::size_t j = 0; j < first.ny; ++j)
                    for (std::size_t i = 0; i < first.nx; ++i)
                        first(i, j) = gamma_k({lambda}, {first.xc(i), first.yc(j), 0.5}, pole);
                for (std::size_t j = 0; j < direct.ny; ++j)
                    for (std::size_t i = 0; i < direct.nx; ++i)
                        direct(i, j) = gamma_k({lambda}, {direct.xc(i), direct.yc(j), 1.0}, pole);
            }
            const TransitionSlab slab{first, [lambda](std::size_t, const EventPoint& z, Grid2& w) {
                                          for (std::size_t j = 0; j < w.ny; ++j)
                                              for (std::size_t i = 0; i < w.nx; ++i)
                                                  w(i, j) = gamma_k({lambda}, z, {w.xc(i), w.yc(j), 0.5});
                                      }};
            const ReproductionReport rep = reproduction_check(first, slab, direct, 1.0);
            out.push_back({fmt("%s_lambda_%g", fd ? "fd" : "closed_form", lambda), rep.rel_l1});
        }
    }
    return out;
}

std::vector<CaseResult> psi_suite() {
    std::vector<CaseResult> out;
    for (double x : {0.5, 1.0, 2.0})
        for (double y : {-0.5, -1.0, -2.0}) {
            const double exact = psi_canonical(x, y, 1.0).cost;
            const BruteForceResult b = psi_bruteforce({{x, y, 1.0}, {1, 0, 0}}, 64, 2000);
            out.push_back({fmt("x_%g_y_%g_t_1", x, y), std::abs(b.cost - exact) / std::max(exact, 1e-12)});
        }
    return out;
}

int run_validate(const ValidateArgs& a) {
    std::vector<CaseResult> cases;
    if (a.suite == "reproduction") cases = reproduction_suite();
    else if (a.suite == "psi") cases = psi_suite();
    else throw ConfigError("key '--suite': expected reproduction or psi, got '" + a.suite + "'");
    if (!(a.tol > 0.0)) throw ConfigError("key '--tol' must be positive");
    CsvSink csv(a.output, "validate", "suite,case,value,tol,pass");
    nlohmann::json failures = nlohmann::json::array();
    for (const CaseResult& c : cases) {
        const bool pass = c.value <= a.tol;
        csv.row(fmt("%s,%s,%.6e,%.6e,%d", a.suite.c_str(), c.name.c_str(), c.value, a.tol, pass ? 1 : 0));
        if (!pass) failures.push_back({{"suite", a.suite}, {"case", c.name}, {"value", c.value}, {"tol", a.tol}});
    }
    if (!failures.empty()) {
        const nlohmann::json report{{"status", "fail"}, {"failures", failures}};
        if (!a.output.empty()) {
            std::ofstream os(a.output + ".failures.json");
            os << report.dump(2) << '\n';
        }
        std::cerr << report.dump() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernels, control values, FD solves, Monte Carlo and pricing for the Kolmogorov-type operators"};
    app.footer(kCsvDoc);
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "random seed (mc, price --method mc)");

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "evaluate a closed-form fundamental solution");
    kernel->add_option("--kind", ka.kind, "k (Gaussian kernel) or l (price-average kernel)");
    kernel->add_option("--lambda", ka.lambda, "diffusion constant");
    kernel->add_option("--mu", ka.mu, "Ito drift of the price (kind l)");
    kernel->add_option("--point", ka.point, "x,y,t (kind l: positive x, support y < pole y)")->required();
    kernel->add_option("--pole", ka.pole, "xi,eta,tau")->required();
    kernel->add_option("--tol", ka.tol, "absolute tolerance (kind l)");

    PsiArgs pa;
    auto* psi_cmd = app.add_subcommand("psi", "optimal control value between two points");
    psi_cmd->add_option("--start", pa.start, "x,y,t of the start point")->required();
    psi_cmd->add_option("--end", pa.end, "x,y,t of the end point")->required();
    psi_cmd->add_option("--bruteforce", pa.bruteforce, "also run the discretised optimiser with this many steps");

    PriceArgs pr;
    auto* price_cmd = app.add_subcommand("price", "price an average-rate option (flag > config file > default)");
    price_cmd->add_option("--config", pr.config, "key=value file with pricing keys");
    std::map<std::string, std::string> price_flag_values;
    for (const std::string& key : pricing_keys())
        price_cmd->add_option("--" + key, price_flag_values[key], "pricing key '" + key + "'");
    price_cmd->add_option("--S", pr.S, "current price");
    price_cmd->add_option("--A", pr.A, "current running average integral");
    price_cmd->add_option("--t", pr.t, "current time");
    price_cmd->add_option("--tol", pr.tol, "absolute tolerance of the kernel quadrature");
    price_cmd->add_option("--method", pr.method, "kernel, mc or both");
    price_cmd->add_option("--paths", pr.paths, "Monte Carlo paths");
    price_cmd->add_option("--steps", pr.steps, "Monte Carlo time steps");
    price_cmd->add_option("--output", pr.output, "CSV file (default: stdout)");

    FdArgs fa;
    auto* fd_cmd = app.add_subcommand("fd-solve", "finite-difference fundamental solution of a constant-coefficient operator");
    fd_cmd->add_option("--kind", fa.kind, "k or l");
    fd_cmd->add_option("--lambda", fa.lambda, "diffusion constant");
    fd_cmd->add_option("--mu", fa.mu, "Ito drift (kind l)");
    fd_cmd->add_option("--pole", fa.pole, "xi,eta,tau (price coordinates)");
    fd_cmd->add_option("--t-end", fa.t_end, "time span after the pole");
    fd_cmd->add_option("--x-range", fa.x_range, "lo,hi of the first axis (log-price for kind l)");
    fd_cmd->add_option("--y-range", fa.y_range, "lo,hi");
    fd_cmd->add_option("--nx", fa.nx, "nodes along x");
    fd_cmd->add_option("--ny", fa.ny, "nodes along y");
    fd_cmd->add_option("--nt", fa.nt, "time steps");
    fd_cmd->add_option("--width", fa.width, "delta approximant width in cells");
    fd_cmd->add_option("--scheme", fa.scheme, "van_leer or upwind1");
    fd_cmd->add_option("--output", fa.output, "binary grid series (a JSON sidecar is written next to it)");
    fd_cmd->add_option("--csv", fa.csv, "CSV of the final slice");

    McArgs ma;
    auto* mc_cmd = app.add_subcommand("mc", "simulate the price and its running average");
    mc_cmd->add_option("--averaging", ma.averaging, "geometric or arithmetic");
    mc_cmd->add_option("--mu", ma.mu, "Ito drift");
    mc_cmd->add_option("--sigma", ma.sigma, "volatility");
    mc_cmd->add_option("--r", ma.r, "short rate");
    mc_cmd->add_option("--S", ma.S, "initial price");
    mc_cmd->add_option("--A", ma.A, "initial average integral");
    mc_cmd->add_option("--horizon", ma.horizon, "time horizon");
    mc_cmd->add_option("--paths", ma.paths, "paths");
    mc_cmd->add_option("--steps", ma.steps, "time steps");
    mc_cmd->add_option("--threads", ma.threads, "worker threads (results do not depend on it)");
    mc_cmd->add_flag("--antithetic", ma.antithetic, "antithetic pairs");
    mc_cmd->add_option("--output", ma.output, "CSV file (default: stdout)");
    mc_cmd->add_option("--samples", ma.samples, "binary dump of terminal samples");

    ValidateArgs va;
    auto* val_cmd = app.add_subcommand("validate", "run a validation suite; exit 2 if a case fails");
    val_cmd->add_option("--suite", va.suite, "reproduction or psi");
    val_cmd->add_option("--tol", va.tol, "pass threshold per case");
    val_cmd->add_option("--output", va.output, "CSV file (default: stdout); failures also go to <output>.failures.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*kernel) return run_kernel(ka);
        if (*psi_cmd) return run_psi(pa);
        if (*price_cmd) {
            for (const auto& [key, value] : price_flag_values)
                if (price_cmd->count("--" + key)) pr.flags[key] = value;
            pr.seed = seed;
            return run_price(pr);
        }
        if (*fd_cmd) return run_fd(fa);
        if (*mc_cmd) {
            ma.seed = seed;
            return run_mc(ma);
        }
        if (*val_cmd) return run_validate(va);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
