#pragma once

// Finite differences for the divergence-form operators
//     K u = d_x(a d_x u) + b d_x u + x d_y u - r u - d_t u
//     L u = x d_x(a x d_x u) + b x d_x u + x d_y u - r u - d_t u
// L is handled in w = log x, where x d_x = d_w and it becomes the
// K-like operator d_w(a d_w) + b d_w + e^w d_y - r - d_t. Grids of kind L
// therefore carry w on their first axis and their natural measure is dw dy.

#include <kolmo/coefficients.hpp>
#include <kolmo/errors.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/grid.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace kolmo {

enum class OperatorMode { primal, adjoint };
enum class TransportStencil { central, upwind1, upwind2 };
enum class TransportScheme { upwind1, van_leer };

struct SchemeConfig {
    TransportScheme transport = TransportScheme::van_leer;
    OperatorMode mode = OperatorMode::primal;
    // Physical times at which snapshots are kept (rounded to the nearest
    // step). Empty: keep the initial and the final slice only.
    std::vector<double> save_times;
};

struct SolveResult {
    GridSeries series;           // for adjoint solves times run backwards
    double boundary_flux = 0.0;  // total |flux| through the y-edges (mass leakage)
    double max_courant = 0.0;
    std::string splitting = "Lie: explicit transport in y, then implicit diffusion in x";
};

namespace detail {

// Value of the first grid coordinate in the variable the coefficient
// functions expect, and the transport speed in front of d_y.
inline double physical_x(GeometryKind kind, double xc) { return kind == GeometryKind::K ? xc : std::exp(xc); }

struct CoefArrays {
    std::vector<double> a_face;  // (nx - 1) * ny, face i + 1/2
    std::vector<double> b_node;  // nx * ny
    std::vector<double> b_face;  // (nx - 1) * ny
    std::vector<double> r_node;  // nx * ny
};

inline void fill_coefficients(const CoefficientField& f, const Grid2& g, double t, CoefArrays& c) {
    const std::size_t nx = g.nx, ny = g.ny;
    c.a_face.resize((nx - 1) * ny);
    c.b_face.resize((nx - 1) * ny);
    c.b_node.resize(nx * ny);
    c.r_node.resize(nx * ny);
    const double hx = g.hx();
    for (std::size_t j = 0; j < ny; ++j) {
        const double y = g.yc(j);
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = physical_x(f.kind, g.xc(i));
            c.b_node[j * nx + i] = f.b(x, y, t);
            c.r_node[j * nx + i] = f.r(x, y, t);
            if (i + 1 < nx) {
                const double xf = physical_x(f.kind, g.xc(i) + 0.5 * hx);
                c.a_face[j * (nx - 1) + i] = f.a(xf, y, t);
                c.b_face[j * (nx - 1) + i] = f.b(xf, y, t);
            }
        }
    }
}

// Thomas algorithm; the matrices built here are M-matrices so no pivoting
// is needed, but a vanishing pivot is still reported.
inline void solve_tridiagonal(std::vector<double>& l, std::vector<double>& d, std::vector<double>& u,
                              std::vector<double>& rhs) {
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(std::abs(d[i - 1]) > 0.0)) throw ConvergenceError("tridiagonal solve: zero pivot");
        const double m = l[i] / d[i - 1];
        d[i] -= m * u[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (!(std::abs(d[n - 1]) > 0.0)) throw ConvergenceError("tridiagonal solve: zero pivot");
    rhs[n - 1] /= d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - u[i] * rhs[i + 1]) / d[i];
}

// Row i of the x-operator A (diffusion + drift - r) as (left, diag, right).
struct Stencil3 {
    double left = 0.0, diag = 0.0, right = 0.0;
};

inline Stencil3 x_operator_row(OperatorMode mode, const CoefArrays& c, std::size_t nx, std::size_t j,
                               std::size_t i, double h) {
    Stencil3 s;
    const double h2 = h * h;
    const double* af = &c.a_face[j * (nx - 1)];
    const double* bf = &c.b_face[j * (nx - 1)];
    const double* bn = &c.b_node[j * nx];
    const double aL = i > 0 ? af[i - 1] : 0.0;
    const double aR = i + 1 < nx ? af[i] : 0.0;
    s.left += aL / h2;
    s.right += aR / h2;
    s.diag -= (aL + aR) / h2;

    if (mode == OperatorMode::primal) {
        const double b = bn[i];
        const bool interior = i > 0 && i + 1 < nx;
        if (interior && std::abs(b) * h <= 2.0 * std::min(aL, aR)) {
            s.right += b / (2.0 * h);
            s.left -= b / (2.0 * h);
        } else if (b > 0.0 && i + 1 < nx) {
            s.right += b / h;
            s.diag -= b / h;
        } else if (b < 0.0 && i > 0) {
            s.left -= b / h;
            s.diag += b / h;
        }
    } else {
        // -d_x(b w) in flux form; F_{i+1/2} enters row i with -1/h and
        // row i+1 with +1/h.
        auto face = [&](std::size_t k, double& wk, double& wk1) {  // face between k and k+1
            const double b = bf[k];
            if (std::abs(b) * h <= 2.0 * af[k]) {
                wk = 0.5 * b;
                wk1 = 0.5 * b;
            } else {
                wk = std::max(b, 0.0);
                wk1 = std::min(b, 0.0);
            }
        };
        if (i + 1 < nx) {
            double wk, wk1;
            face(i, wk, wk1);
            s.diag -= wk / h;
            s.right -= wk1 / h;
        } else if (bn[i] > 0.0) {
            s.diag -= bn[i] / h;  // outflow through the right edge
        }
        if (i > 0) {
            double wk, wk1;
            face(i - 1, wk, wk1);
            s.left += wk / h;
            s.diag += wk1 / h;
        } else if (bn[i] < 0.0) {
            s.diag += bn[i] / h;  // outflow through the left edge
        }
    }
    s.diag -= c.r_node[j * nx + i];
    return s;
}

inline double van_leer(double r) { return (r + std::abs(r)) / (1.0 + std::abs(r)); }

// One explicit step of u_t + v u_y = 0 on a row of length ny with
// zero-gradient ghost cells. Returns |flux| through the two edges times dt.
inline double transport_row(std::vector<double>& u, double v, double dt, double hy, TransportScheme scheme,
                            std::vector<double>& ext, std::vector<double>& flux) {
    const std::size_t ny = u.size();
    if (v == 0.0) return 0.0;
    ext.resize(ny + 4);
    for (std::size_t j = 0; j < ny; ++j) ext[j + 2] = u[j];
    ext[0] = ext[1] = u[0];
    ext[ny + 2] = ext[ny + 3] = u[ny - 1];
    const double nu = std::abs(v) * dt / hy;
    const bool limited = scheme == TransportScheme::van_leer;
    flux.resize(ny + 1);  // flux[k] at face between ext[k+1] and ext[k+2]
    for (std::size_t k = 0; k <= ny; ++k) {
        const double um = ext[k], u0 = ext[k + 1], u1 = ext[k + 2], u2 = ext[k + 3];
        const double jump = u1 - u0;
        double F;
        if (v > 0.0) {
            double corr = 0.0;
            if (limited && jump != 0.0) corr = 0.5 * (1.0 - nu) * van_leer((u0 - um) / jump) * jump;
            F = v * (u0 + corr);
        } else {
            double corr = 0.0;
            if (limited && jump != 0.0) corr = 0.5 * (1.0 - nu) * van_leer((u2 - u1) / jump) * jump;
            F = v * (u1 - corr);
        }
        flux[k] = F;
    }
    for (std::size_t j = 0; j < ny; ++j) u[j] -= dt / hy * (flux[j + 1] - flux[j]);
    return dt * (std::abs(flux[0]) + std::abs(flux[ny]));
}

}  // namespace detail

inline double max_transport_speed(GeometryKind kind, const GridSpec& g) {
    if (kind == GeometryKind::K) return std::max(std::abs(g.x_range.lo), std::abs(g.x_range.hi));
    return std::exp(g.x_range.hi);
}

// Courant number of the y-transport, max|x| dt / dy.
inline double courant_number(GeometryKind kind, const GridSpec& g) {
    return max_transport_speed(kind, g) * g.dt() / g.hy();
}

// Cauchy problem for K u = 0 (primal, forward from t_range.lo) or for the
// formal adjoint (backward from t_range.hi).
inline SolveResult solve_cauchy(const CoefficientField& field, const Grid2& initial, const GridSpec& grid,
                                const SchemeConfig& cfg = {}) {
    if (initial.nx != grid.nx || initial.ny != grid.ny || initial.x.lo != grid.x_range.lo ||
        initial.x.hi != grid.x_range.hi || initial.y.lo != grid.y_range.lo || initial.y.hi != grid.y_range.hi)
        throw GridMismatch("solve_cauchy: initial datum does not match the grid spec");
    if (grid.nt < 1) throw GridMismatch("solve_cauchy: nt must be positive");
    const double cfl = courant_number(field.kind, grid);
    if (cfl > 1.0 + 1e-12)
        throw CflViolation("solve_cauchy: Courant number " + std::to_string(cfl) + " exceeds 1");

    const std::size_t nx = grid.nx, ny = grid.ny, nt = grid.nt;
    const double hx = grid.hx(), hy = grid.hy(), dt = grid.dt();
    const bool adjoint = cfg.mode == OperatorMode::adjoint;
    const double t_start = adjoint ? grid.t_range.hi : grid.t_range.lo;
    const double dir = adjoint ? -1.0 : 1.0;

    std::vector<std::size_t> save_steps;
    if (cfg.save_times.empty()) {
        save_steps = {0, nt};
    } else {
        for (double ts : cfg.save_times) {
            const double k = dir * (ts - t_start) / dt;
            if (k < -1e-9 || k > static_cast<double>(nt) + 1e-9)
                throw DomainError("solve_cauchy: save time outside the time range");
            save_steps.push_back(static_cast<std::size_t>(std::llround(k)));
        }
        std::sort(save_steps.begin(), save_steps.end());
        save_steps.erase(std::unique(save_steps.begin(), save_steps.end()), save_steps.end());
    }

    SolveResult res;
    res.max_courant = cfl;
    Grid2 u = initial;
    std::size_t next_save = 0;
    auto maybe_save = [&](std::size_t step) {
        while (next_save < save_steps.size() && save_steps[next_save] == step) {
            res.series.times.push_back(t_start + dir * static_cast<double>(step) * dt);
            res.series.slices.push_back(u);
            ++next_save;
        }
    };
    maybe_save(0);

    detail::CoefArrays coef;
    bool have_coef = false;
    std::vector<double> row(ny), ext, flux;
    std::vector<double> l(nx), d(nx), up(nx), rhs(nx);
    std::vector<double> speed(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const double X = detail::physical_x(field.kind, u.xc(i));
        speed[i] = adjoint ? X : -X;  // velocity v in u_t + v u_y = 0
    }

    for (std::size_t n = 0; n < nt; ++n) {
        // transport, row by row (fixed x)
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) row[j] = u(i, j);
            res.boundary_flux += hx * detail::transport_row(row, speed[i], dt, hy, cfg.transport, ext, flux);
            for (std::size_t j = 0; j < ny; ++j) u(i, j) = row[j];
        }
        // implicit diffusion, column by column (fixed y)
        const double t_new = t_start + dir * static_cast<double>(n + 1) * dt;
        if (!have_coef || field.time_dependent) {
            detail::fill_coefficients(field, u, t_new, coef);
            have_coef = true;
        }
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const detail::Stencil3 s = detail::x_operator_row(cfg.mode, coef, nx, j, i, hx);
                l[i] = -dt * s.left;
                d[i] = 1.0 - dt * s.diag;
                up[i] = -dt * s.right;
                rhs[i] = u(i, j);
            }
            detail::solve_tridiagonal(l, d, up, rhs);
            for (std::size_t i = 0; i < nx; ++i) u(i, j) = rhs[i];
        }
        maybe_save(n + 1);
    }
    return res;
}

// Normalised discrete Gaussian approximating the Dirac mass at `pole` in the
// measure of the computational grid; `width_cells` is the standard
// deviation in cells along each axis, the support is cut at 3 widths.
// For kind L the primal datum is divided by the pole's price so that it
// approximates delta in dx dy.
inline Grid2 delta_approximant(GeometryKind kind, const EventPoint& pole, const GridSpec& grid,
                               double width_cells, OperatorMode mode = OperatorMode::primal) {
    if (width_cells < 2.0) throw DomainError("delta_approximant: width must be at least 2 cells");
    detail::require_positive_x(kind, pole, "delta_approximant");
    Grid2 g = grid.make_grid();
    const double px = kind == GeometryKind::K ? pole.x : std::log(pole.x);
    const double sx = width_cells * g.hx(), sy = width_cells * g.hy();
    if (px - 3 * sx < g.x.lo || px + 3 * sx > g.x.hi || pole.y - 3 * sy < g.y.lo || pole.y + 3 * sy > g.y.hi)
        throw DomainError("delta_approximant: pole too close to the grid boundary");
    double sum = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double dx = (g.xc(i) - px) / sx, dy = (g.yc(j) - pole.y) / sy;
            if (std::abs(dx) > 3.0 || std::abs(dy) > 3.0) continue;
            const double v = std::exp(-0.5 * (dx * dx + dy * dy));
            g(i, j) = v;
            sum += v;
        }
    double scale = 1.0 / (sum * g.hx() * g.hy());
    if (kind == GeometryKind::L && mode == OperatorMode::primal) scale /= pole.x;
    for (double& v : g.data) v *= scale;
    return g;
}

// Gamma(., .; pole) on the grid: primal solve from a delta approximant at
// the pole, starting at t_range.lo = pole.t.
inline SolveResult approximate_fundamental_solution(const CoefficientField& field, const EventPoint& pole,
                                                    const GridSpec& grid, double delta_width,
                                                    SchemeConfig cfg = {}) {
    if (std::abs(grid.t_range.lo - pole.t) > 1e-12)
        throw DomainError("approximate_fundamental_solution: grid must start at the pole time");
    cfg.mode = OperatorMode::primal;
    return solve_cauchy(field, delta_approximant(field.kind, pole, grid, delta_width), grid, cfg);
}

// Gamma(target; ., .) on the grid in the computational measure: adjoint solve
// from a delta approximant at the target, backward to t_range.lo.
inline SolveResult approximate_adjoint_solution(const CoefficientField& field, const EventPoint& target,
                                                const GridSpec& grid, double delta_width, SchemeConfig cfg = {}) {
    if (std::abs(grid.t_range.hi - target.t) > 1e-12)
        throw DomainError("approximate_adjoint_solution: grid must end at the target time");
    cfg.mode = OperatorMode::adjoint;
    return solve_cauchy(field, delta_approximant(field.kind, target, grid, delta_width, OperatorMode::adjoint),
                        grid, cfg);
}

// ---- residuals -----------------------------------------------------------

// Applies K (primal) or its formal adjoint to a space-time grid function
// sampled at >= 3 equally spaced times. Returns residual slices for the
// interior times; nodes in the halo (1 cell in x, 1 or 2 in y) are zero.
inline GridSeries apply_operator(const CoefficientField& field, const GridSeries& u, OperatorMode mode,
                                 TransportStencil stencil = TransportStencil::upwind2) {
    if (u.size() < 3) throw GridMismatch("apply_operator: need at least three time slices");
    for (const auto& s : u.slices) require_same_layout(u.slices.front(), s, "apply_operator");
    if (u.times.size() != u.slices.size()) throw GridMismatch("apply_operator: times and slices differ in length");
    const double dt = u.times[1] - u.times[0];
    for (std::size_t k = 1; k < u.times.size(); ++k)
        if (std::abs(u.times[k] - u.times[k - 1] - dt) > 1e-9 * std::abs(dt))
            throw GridMismatch("apply_operator: time slices must be equally spaced");

    const Grid2& g0 = u.slices.front();
    const std::size_t nx = g0.nx, ny = g0.ny;
    const std::size_t hy_halo = stencil == TransportStencil::upwind2 ? 2 : 1;
    if (nx < 3 || ny < 2 * hy_halo + 1) throw GridMismatch("apply_operator: grid too small for the stencil");
    const double hx = g0.hx(), hy = g0.hy();
    const bool adjoint = mode == OperatorMode::adjoint;

    GridSeries out;
    for (std::size_t k = 1; k + 1 < u.size(); ++k) {
        const Grid2& U = u.slices[k];
        const double t = u.times[k];
        Grid2 R(nx, ny, g0.x, g0.y);
        for (std::size_t j = hy_halo; j + hy_halo < ny; ++j) {
            const double y = U.yc(j);
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                const double xm = detail::physical_x(field.kind, U.xc(i) - 0.5 * hx);
                const double xp = detail::physical_x(field.kind, U.xc(i) + 0.5 * hx);
                const double X = detail::physical_x(field.kind, U.xc(i));
                const double am = field.a(xm, y, t), ap = field.a(xp, y, t);
                double v = (ap * (U(i + 1, j) - U(i, j)) - am * (U(i, j) - U(i - 1, j))) / (hx * hx);
                if (!adjoint) {
                    v += field.b(X, y, t) * (U(i + 1, j) - U(i - 1, j)) / (2.0 * hx);
                } else {
                    const double Xl = detail::physical_x(field.kind, U.xc(i - 1));
                    const double Xr = detail::physical_x(field.kind, U.xc(i + 1));
                    v -= (field.b(Xr, y, t) * U(i + 1, j) - field.b(Xl, y, t) * U(i - 1, j)) / (2.0 * hx);
                }
                // transport term c d_y u with c = X (primal) or -X (adjoint)
                const double c = adjoint ? -X : X;
                double dy = 0.0;
                switch (stencil) {
                    case TransportStencil::central:
                        dy = (U(i, j + 1) - U(i, j - 1)) / (2.0 * hy);
                        break;
                    case TransportStencil::upwind1:
                        if (c > 0.0) dy = (U(i, j + 1) - U(i, j)) / hy;
                        else if (c < 0.0) dy = (U(i, j) - U(i, j - 1)) / hy;
                        else dy = (U(i, j + 1) - U(i, j - 1)) / (2.0 * hy);
                        break;
                    case TransportStencil::upwind2:
                        if (c > 0.0) dy = (-3.0 * U(i, j) + 4.0 * U(i, j + 1) - U(i, j + 2)) / (2.0 * hy);
                        else if (c < 0.0) dy = (3.0 * U(i, j) - 4.0 * U(i, j - 1) + U(i, j - 2)) / (2.0 * hy);
                        else dy = (U(i, j + 1) - U(i, j - 1)) / (2.0 * hy);
                        break;
                }
                v += c * dy;
                v -= field.r(X, y, t) * U(i, j);
                const double ut = (u.slices[k + 1](i, j) - u.slices[k - 1](i, j)) / (2.0 * dt);
                v += adjoint ? ut : -ut;
                R(i, j) = v;
            }
        }
        out.times.push_back(t);
        out.slices.push_back(std::move(R));
    }
    return out;
}

// ---- reproduction (Chapman-Kolmogorov) -----------------------------------

// Second leg of a composition: for every node k of the direct grid, fill()
// writes Gamma(z_k; omega) as a function of the intermediate point omega,
// in the computational measure of `layout`.
struct TransitionSlab {
    Grid2 layout;
    std::function<void(std::size_t target, const EventPoint& z, Grid2& out)> fill;
};

struct ReproductionReport {
    double l1 = 0.0;
    double linf = 0.0;
    double rel_l1 = 0.0;
    double direct_l1 = 0.0;
    Grid2 composed;
};

// composed(z) = sum_omega Gamma(z; omega) first_leg(omega) with trapezoid
// weights; compared against `direct` on its nodes. `t` is the time of the
// direct slice (forwarded to fill()).
inline ReproductionReport reproduction_check(const Grid2& first_leg, const TransitionSlab& second_leg,
                                             const Grid2& direct, double t = 0.0) {
    require_same_layout(first_leg, second_leg.layout, "reproduction_check");
    ReproductionReport rep;
    rep.composed = Grid2(direct.nx, direct.ny, direct.x, direct.y);
    Grid2 work = second_leg.layout;
    for (std::size_t j = 0; j < direct.ny; ++j)
        for (std::size_t i = 0; i < direct.nx; ++i) {
            const std::size_t k = direct.index(i, j);
            std::fill(work.data.begin(), work.data.end(), 0.0);
            second_leg.fill(k, EventPoint{direct.xc(i), direct.yc(j), t}, work);
            for (std::size_t q = 0; q < work.data.size(); ++q) work.data[q] *= first_leg.data[q];
            rep.composed.data[k] = work.integral();
        }
    Grid2 diff = direct;
    for (std::size_t k = 0; k < diff.data.size(); ++k) {
        diff.data[k] = std::abs(rep.composed.data[k] - direct.data[k]);
        rep.linf = std::max(rep.linf, diff.data[k]);
    }
    rep.l1 = diff.integral();
    rep.direct_l1 = l1_norm(direct);
    rep.rel_l1 = rep.direct_l1 > 0.0 ? rep.l1 / rep.direct_l1 : rep.l1;
    return rep;
}

}  // namespace kolmo
