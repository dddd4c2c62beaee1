#pragma once

// Positive solutions of d/dt u = Lap u - V u with homogeneous Neumann
// conditions on boxes (d = 1 or 2), plus the drift equation through the
// e^{-f} change of variables. Theta time stepping with exact snapshot
// alignment; positivity is enforced, never clamped.

#include <map>
#include <ostream>
#include <string>

#include "harnack/closedform.hpp"
#include "harnack/common.hpp"
#include "harnack/expr.hpp"

namespace harnack::pde {

enum class Scheme { crank_nicolson, backward_euler };

[[nodiscard]] constexpr const char* to_string(Scheme s) {
    return s == Scheme::crank_nicolson ? "crank_nicolson" : "backward_euler";
}

struct BoxGrid {
    int d = 1;
    Box box = Box::cube(1, -1.0, 1.0);
    int nx = 64;  // nodes per axis, boundary included
    double dt = 1e-3;
    double t_end = 1.0;
    std::vector<double> snapshot_times;

    void validate() const {
        if (d != 1 && d != 2) throw std::invalid_argument("grid supports d in {1,2}");
        if (box.dim() != d) throw std::invalid_argument("grid box dimension mismatch");
        if (nx < 16) throw std::invalid_argument("grid needs nx >= 16");
        if (!(dt > 0.0)) throw std::invalid_argument("grid needs dt > 0");
        if (!(t_end > 0.0)) throw std::invalid_argument("grid needs t_end > 0");
        if (snapshot_times.empty()) throw std::invalid_argument("grid needs snapshot times");
        double prev = 0.0;
        for (double t : snapshot_times) {
            if (!(t > prev) || t > t_end + 1e-12)
                throw std::invalid_argument("snapshot times must increase within (0, t_end]");
            prev = t;
        }
    }

    [[nodiscard]] int points() const { return d == 1 ? nx : nx * nx; }
    [[nodiscard]] double spacing(int axis) const { return box.extent(axis) / (nx - 1); }
    void node_coords(int flat, std::span<double> out) const {
        if (d == 1) {
            out[0] = box.lo[0] + spacing(0) * flat;
        } else {
            out[0] = box.lo[0] + spacing(0) * (flat % nx);
            out[1] = box.lo[1] + spacing(1) * (flat / nx);
        }
    }
};

struct PositivityError : std::runtime_error {
    long step;
    explicit PositivityError(long step_)
        : std::runtime_error("solution lost positivity at step " + std::to_string(step_) +
                             "; reduce dt or switch to backward_euler"),
          step(step_) {}
};

using InitialData = std::function<double(std::span<const double>)>;

[[nodiscard]] inline InitialData initial_constant(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("constant initial data must be positive");
    return [c](std::span<const double>) { return c; };
}

// Unnormalized bell exp(-|x-center|^2 / (2 width^2)).
[[nodiscard]] inline InitialData initial_gaussian(std::vector<double> center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian width must be positive");
    return [center = std::move(center), width](std::span<const double> x) {
        double q = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) q += sq(x[a] - center[a]);
        return std::exp(-q / (2.0 * width * width));
    };
}

[[nodiscard]] inline InitialData initial_mehler_snapshot(double t0,
                                                         closedform::QuadraticWell well = {}) {
    if (!(t0 > 0.0)) throw std::invalid_argument("mehler snapshot needs t0 > 0");
    return [t0, well = std::move(well)](std::span<const double> x) {
        return closedform::mehler_kernel(x, t0, well);
    };
}

[[nodiscard]] inline InitialData initial_expression(const std::string& source, int dim) {
    auto pot = expr::parse_potential(source, dim);
    return [pot = std::move(pot)](std::span<const double> x) { return pot(x); };
}

struct GridSolution {
    BoxGrid grid;
    Scheme scheme = Scheme::crank_nicolson;
    std::vector<double> times;
    std::vector<std::vector<double>> snapshots;
    double min_value = 0.0;  // smallest nodal value seen while stepping

    [[nodiscard]] std::size_t snapshot_index(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::fabs(times[i] - t) <= 1e-9) return i;
        throw std::invalid_argument("no snapshot stored at t = " + format_g17(t));
    }

    // Multilinear interpolation inside the box; exact at nodes.
    [[nodiscard]] double interpolate(std::size_t snap, std::span<const double> x) const {
        const auto& u = snapshots.at(snap);
        const int nx = grid.nx;
        auto locate = [&](int axis, double v, int& i0, double& w) {
            double h = grid.spacing(axis);
            double f = (v - grid.box.lo[static_cast<std::size_t>(axis)]) / h;
            if (f < -1e-9 || f > nx - 1 + 1e-9)
                throw std::invalid_argument("interpolation point outside the grid box");
            f = std::clamp(f, 0.0, static_cast<double>(nx - 1));
            i0 = std::min(static_cast<int>(f), nx - 2);
            w = f - i0;
        };
        if (grid.d == 1) {
            int i0;
            double w;
            locate(0, x[0], i0, w);
            return (1.0 - w) * u[static_cast<std::size_t>(i0)] +
                   w * u[static_cast<std::size_t>(i0 + 1)];
        }
        int i0, j0;
        double wi, wj;
        locate(0, x[0], i0, wi);
        locate(1, x[1], j0, wj);
        auto at = [&](int i, int j) { return u[static_cast<std::size_t>(j * nx + i)]; };
        return (1.0 - wi) * (1.0 - wj) * at(i0, j0) + wi * (1.0 - wj) * at(i0 + 1, j0) +
               (1.0 - wi) * wj * at(i0, j0 + 1) + wi * wj * at(i0 + 1, j0 + 1);
    }
};

namespace detail {

// Tridiagonal solve with the Neumann reflection already folded into the
// first/last off-diagonal entries. Diagonal dominance holds for the dt range
// accepted by stability_probe, so no pivoting.
inline void thomas(std::span<const double> a, std::span<const double> b,
                   std::span<const double> c, std::span<double> rhs, std::span<double> scratch) {
    const std::size_t n = b.size();
    scratch[0] = c[0] / b[0];
    rhs[0] = rhs[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
        double m = 1.0 / (b[i] - a[i] * scratch[i - 1]);
        scratch[i] = c[i] * m;
        rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) * m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

// One theta step in one dimension: (I - th dt D + th dt V) u+ = explicit part.
inline void step_1d(std::vector<double>& u, const std::vector<double>& v, double dt, double h,
                    double theta, std::vector<double>& a, std::vector<double>& b,
                    std::vector<double>& c, std::vector<double>& rhs,
                    std::vector<double>& scratch) {
    const std::size_t n = u.size();
    const double r = dt / (h * h);
    const double ex = (1.0 - theta) * r;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = i == 0 ? u[1] : u[i - 1];           // ghost reflection
        double hi = i == n - 1 ? u[n - 2] : u[i + 1];   // ghost reflection
        rhs[i] = u[i] + ex * (lo - 2.0 * u[i] + hi) - (1.0 - theta) * dt * v[i] * u[i];
        a[i] = -theta * r;
        b[i] = 1.0 + 2.0 * theta * r + theta * dt * v[i];
        c[i] = -theta * r;
    }
    c[0] = -2.0 * theta * r;
    a[n - 1] = -2.0 * theta * r;
    thomas(a, b, c, rhs, scratch);
    u.swap(rhs);
}

struct Workspace1d {
    std::vector<double> a, b, c, rhs, scratch;
    explicit Workspace1d(std::size_t n) : a(n), b(n), c(n), rhs(n), scratch(n) {}
};

// Alternating-direction step on an nx-by-nx grid. Crank-Nicolson uses the
// Peaceman-Rachford form (explicit other-direction half steps); backward
// Euler uses two purely implicit half steps.
inline void step_2d(std::vector<double>& u, const std::vector<double>& v, const BoxGrid& g,
                    double dt, double theta, std::vector<double>& ustar, Workspace1d& ws) {
    const int nx = g.nx;
    const double h1 = g.spacing(0);
    const double h2 = g.spacing(1);
    const double r1 = 0.5 * dt / (h1 * h1);
    const double r2 = 0.5 * dt / (h2 * h2);
    const bool cn = theta < 0.75;  // crank_nicolson -> Peaceman-Rachford
    // Potential weight per half step: CN splits dt V into four quarters (two
    // implicit, two explicit); backward Euler needs dt/2 implicitly in each.
    const double vi = (cn ? 0.25 : 0.5) * dt;
    auto idx = [nx](int i, int j) { return static_cast<std::size_t>(j * nx + i); };

    // Half step 1: implicit in x1.
    for (int j = 0; j < nx; ++j) {
        for (int i = 0; i < nx; ++i) {
            double here = u[idx(i, j)];
            double rhs = here;
            if (cn) {
                double lo = j == 0 ? u[idx(i, 1)] : u[idx(i, j - 1)];
                double hi = j == nx - 1 ? u[idx(i, nx - 2)] : u[idx(i, j + 1)];
                rhs += r2 * (lo - 2.0 * here + hi) - 0.25 * dt * v[idx(i, j)] * here;
            }
            ws.rhs[static_cast<std::size_t>(i)] = rhs;
            ws.a[static_cast<std::size_t>(i)] = -r1;
            ws.b[static_cast<std::size_t>(i)] = 1.0 + 2.0 * r1 + vi * v[idx(i, j)];
            ws.c[static_cast<std::size_t>(i)] = -r1;
        }
        ws.c[0] = -2.0 * r1;
        ws.a[static_cast<std::size_t>(nx - 1)] = -2.0 * r1;
        thomas(ws.a, ws.b, ws.c, ws.rhs, ws.scratch);
        for (int i = 0; i < nx; ++i) ustar[idx(i, j)] = ws.rhs[static_cast<std::size_t>(i)];
    }

    // Half step 2: implicit in x2.
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nx; ++j) {
            double here = ustar[idx(i, j)];
            double rhs = here;
            if (cn) {
                double lo = i == 0 ? ustar[idx(1, j)] : ustar[idx(i - 1, j)];
                double hi = i == nx - 1 ? ustar[idx(nx - 2, j)] : ustar[idx(i + 1, j)];
                rhs += r1 * (lo - 2.0 * here + hi) - 0.25 * dt * v[idx(i, j)] * here;
            }
            ws.rhs[static_cast<std::size_t>(j)] = rhs;
            ws.a[static_cast<std::size_t>(j)] = -r2;
            ws.b[static_cast<std::size_t>(j)] = 1.0 + 2.0 * r2 + vi * v[idx(i, j)];
            ws.c[static_cast<std::size_t>(j)] = -r2;
        }
        ws.c[0] = -2.0 * r2;
        ws.a[static_cast<std::size_t>(nx - 1)] = -2.0 * r2;
        thomas(ws.a, ws.b, ws.c, ws.rhs, ws.scratch);
        for (int j = 0; j < nx; ++j) u[idx(i, j)] = ws.rhs[static_cast<std::size_t>(j)];
    }
}

}  // namespace detail

[[nodiscard]] inline GridSolution solve(const expr::ScalarField& v, const InitialData& u0,
                                        const BoxGrid& grid,
                                        Scheme scheme = Scheme::crank_nicolson) {
    grid.validate();
    if (v.dim != grid.d) throw std::invalid_argument("solve: potential dimension mismatch");
    const int n = grid.points();
    const double theta = scheme == Scheme::crank_nicolson ? 0.5 : 1.0;

    std::vector<double> vvals(static_cast<std::size_t>(n));
    std::vector<double> u(static_cast<std::size_t>(n));
    std::vector<double> coords(static_cast<std::size_t>(grid.d));
    for (int k = 0; k < n; ++k) {
        grid.node_coords(k, coords);
        vvals[static_cast<std::size_t>(k)] = v.value(coords);
        u[static_cast<std::size_t>(k)] = u0(coords);
        if (!(u[static_cast<std::size_t>(k)] > 0.0))
            throw std::invalid_argument("initial data must be positive on the grid");
        if (!std::isfinite(vvals[static_cast<std::size_t>(k)]))
            throw std::invalid_argument("potential is not finite on the grid");
    }

    GridSolution out;
    out.grid = grid;
    out.scheme = scheme;
    out.min_value = *std::min_element(u.begin(), u.end());

    detail::Workspace1d ws(static_cast<std::size_t>(grid.nx));
    std::vector<double> ustar;
    if (grid.d == 2) ustar.assign(static_cast<std::size_t>(n), 0.0);

    double now = 0.0;
    long step_index = 0;
    for (double target : grid.snapshot_times) {
        while (target - now > 1e-12) {
            double step = std::min(grid.dt, target - now);
            if (grid.d == 1)
                detail::step_1d(u, vvals, step, grid.spacing(0), theta, ws.a, ws.b, ws.c,
                                ws.rhs, ws.scratch);
            else
                detail::step_2d(u, vvals, grid, step, theta, ustar, ws);
            ++step_index;
            now += step;
            double lo = u[0];
            for (double val : u) lo = std::min(lo, val);
            if (!(lo > 0.0) || !std::isfinite(lo)) throw PositivityError(step_index);
            out.min_value = std::min(out.min_value, lo);
        }
        out.times.push_back(target);
        out.snapshots.push_back(u);
    }
    return out;
}

// Drift equation d/dt u = Lap u - 2 grad f . grad u - V u, reduced to the
// potential form for w = e^{-f} u and mapped back after stepping.
[[nodiscard]] inline GridSolution solve_drift(const expr::PotentialExpr& f,
                                              const expr::PotentialExpr& v,
                                              const InitialData& u0, const BoxGrid& grid,
                                              Scheme scheme = Scheme::crank_nicolson) {
    grid.validate();
    if (f.dim != grid.d || v.dim != grid.d)
        throw std::invalid_argument("solve_drift: dimension mismatch");
    expr::PotentialExpr vt = closedform::drift_transform(f, v);
    expr::ScalarField vt_field = expr::differentiate(vt);

    InitialData v0 = [&f, &u0](std::span<const double> x) {
        return std::exp(-f(x)) * u0(x);
    };
    GridSolution sol = solve(vt_field, v0, grid, scheme);

    const int n = grid.points();
    std::vector<double> factor(static_cast<std::size_t>(n));
    std::vector<double> coords(static_cast<std::size_t>(grid.d));
    for (int k = 0; k < n; ++k) {
        grid.node_coords(k, coords);
        factor[static_cast<std::size_t>(k)] = std::exp(f(coords));
    }
    double lo = std::numeric_limits<double>::infinity();
    for (auto& snap : sol.snapshots)
        for (int k = 0; k < n; ++k) {
            snap[static_cast<std::size_t>(k)] *= factor[static_cast<std::size_t>(k)];
            lo = std::min(lo, snap[static_cast<std::size_t>(k)]);
        }
    sol.min_value = lo;
    return sol;
}

// Accuracy-motivated step size: keep dt max|V| <= 0.1 and dt <= 10 h^2.
[[nodiscard]] inline double stability_probe(const BoxGrid& grid, const expr::ScalarField& v) {
    grid.validate();
    if (v.dim != grid.d) throw std::invalid_argument("stability_probe: dimension mismatch");
    double vmax = 0.0;
    std::vector<double> coords(static_cast<std::size_t>(grid.d));
    for (int k = 0; k < grid.points(); ++k) {
        grid.node_coords(k, coords);
        vmax = std::max(vmax, std::fabs(v.value(coords)));
    }
    double h = grid.spacing(0);
    if (grid.d == 2) h = std::min(h, grid.spacing(1));
    double dt = 10.0 * h * h;
    if (vmax > 0.0) dt = std::min(dt, 0.1 / vmax);
    return dt;
}

// Largest one-sided normal derivative over the boundary of a snapshot
// (second-order three-point stencil). Should be near zero for Neumann data.
[[nodiscard]] inline double neumann_flux_sup(const GridSolution& sol, std::size_t snap) {
    const auto& u = sol.snapshots.at(snap);
    const int nx = sol.grid.nx;
    double worst = 0.0;
    auto one_sided = [](double u0, double u1, double u2, double h) {
        return (-1.5 * u0 + 2.0 * u1 - 0.5 * u2) / h;
    };
    if (sol.grid.d == 1) {
        double h = sol.grid.spacing(0);
        worst = std::max(std::fabs(one_sided(u[0], u[1], u[2], h)),
                         std::fabs(one_sided(u[static_cast<std::size_t>(nx - 1)],
                                             u[static_cast<std::size_t>(nx - 2)],
                                             u[static_cast<std::size_t>(nx - 3)], h)));
        return worst;
    }
    auto at = [&](int i, int j) { return u[static_cast<std::size_t>(j * nx + i)]; };
    const double h1 = sol.grid.spacing(0);
    const double h2 = sol.grid.spacing(1);
    for (int j = 0; j < nx; ++j) {
        worst = std::max(worst, std::fabs(one_sided(at(0, j), at(1, j), at(2, j), h1)));
        worst = std::max(worst,
                         std::fabs(one_sided(at(nx - 1, j), at(nx - 2, j), at(nx - 3, j), h1)));
    }
    for (int i = 0; i < nx; ++i) {
        worst = std::max(worst, std::fabs(one_sided(at(i, 0), at(i, 1), at(i, 2), h2)));
        worst = std::max(worst,
                         std::fabs(one_sided(at(i, nx - 1), at(i, nx - 2), at(i, nx - 3), h2)));
    }
    return worst;
}

// CSV rows `t,x1[,x2],u` for every snapshot node.
inline void export_csv(const GridSolution& sol, std::ostream& os) {
    os << (sol.grid.d == 1 ? "t,x1,u\n" : "t,x1,x2,u\n");
    std::vector<double> coords(static_cast<std::size_t>(sol.grid.d));
    for (std::size_t s = 0; s < sol.snapshots.size(); ++s) {
        for (int k = 0; k < sol.grid.points(); ++k) {
            sol.grid.node_coords(k, coords);
            os << format_g17(sol.times[s]);
            for (int a = 0; a < sol.grid.d; ++a) os << ',' << format_g17(coords[static_cast<std::size_t>(a)]);
            os << ',' << format_g17(sol.snapshots[s][static_cast<std::size_t>(k)]) << '\n';
        }
    }
}

}  // namespace harnack::pde
