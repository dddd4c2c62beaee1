#pragma once

// Variational side: discrete path energies, Euler-Lagrange residuals, and
// the minimizers that define omega(x, y; t, s) for a general potential.
// Paths live on [0,1] with n uniform segments; gamma(0) = y, gamma(1) = x.

#include <string>

#include "harnack/common.hpp"
#include "harnack/expr.hpp"
#include "harnack/omega.hpp"

namespace harnack::action {

struct TimeWindow {
    double t;
    double s;
    TimeWindow(double t_, double s_) : t(t_), s(s_) {
        if (!(s > 0.0) || !(t > s))
            throw std::invalid_argument("time window must satisfy 0 < s < t");
    }
    [[nodiscard]] double dt() const { return t - s; }
};

struct PathDiscretization {
    int dim = 1;
    int n = 2;                  // segments; n+1 nodes with fixed endpoints
    std::vector<double> nodes;  // (n+1)*dim row-major

    PathDiscretization(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim < 1) throw std::invalid_argument("path dimension must be >= 1");
        if (n < 2) throw std::invalid_argument("path needs at least 2 segments");
        nodes.assign(static_cast<std::size_t>((n + 1) * dim), 0.0);
    }
    [[nodiscard]] std::span<double> node(int i) {
        return {nodes.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    [[nodiscard]] std::span<const double> node(int i) const {
        return {nodes.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }

    [[nodiscard]] static PathDiscretization straight(std::span<const double> x,
                                                     std::span<const double> y, int n) {
        if (x.size() != y.size()) throw std::invalid_argument("endpoint dimension mismatch");
        PathDiscretization p(static_cast<int>(x.size()), n);
        for (int i = 0; i <= n; ++i) {
            double tau = static_cast<double>(i) / n;
            auto nd = p.node(i);
            for (std::size_t a = 0; a < x.size(); ++a)
                nd[a] = y[a] + tau * (x[a] - y[a]);
        }
        return p;
    }
};

// Kinetic part exact for piecewise-linear paths, trapezoid rule in the
// potential; minimizing this over interior nodes is the discrete problem.
[[nodiscard]] inline double energy(const PathDiscretization& p, const TimeWindow& w,
                                   const expr::ScalarField& v) {
    if (p.dim != v.dim) throw std::invalid_argument("energy: dimension mismatch");
    const double n = static_cast<double>(p.n);
    double kinetic = 0.0;
    double potential = 0.0;
    double prev_v = v.value(p.node(0));
    for (int i = 0; i < p.n; ++i) {
        kinetic += dist2(p.node(i + 1), p.node(i));
        double next_v = v.value(p.node(i + 1));
        potential += 0.5 * (prev_v + next_v);
        prev_v = next_v;
    }
    return kinetic * n / (4.0 * w.dt()) + potential * w.dt() / n;
}

// Same functional written over the window [s,t] with node spacing (t-s)/n.
[[nodiscard]] inline double reparametrized_energy(const PathDiscretization& p,
                                                  const TimeWindow& w,
                                                  const expr::ScalarField& v) {
    if (p.dim != v.dim) throw std::invalid_argument("energy: dimension mismatch");
    const double h = w.dt() / p.n;
    double acc = 0.0;
    double prev_v = v.value(p.node(0));
    for (int i = 0; i < p.n; ++i) {
        double next_v = v.value(p.node(i + 1));
        acc += dist2(p.node(i + 1), p.node(i)) / (4.0 * h) + h * 0.5 * (prev_v + next_v);
        prev_v = next_v;
    }
    return acc;
}

// Discrete geodesic equation at interior nodes:
//   n^2 (x_{i+1} - 2 x_i + x_{i-1}) - 2 (t-s)^2 grad V(x_i),
// scaled so that a smooth minimizer leaves O(n^-2) independent of n in the
// energy gradient -r_i / (2 n (t-s)).
[[nodiscard]] inline std::vector<double> el_residual(const PathDiscretization& p,
                                                     const TimeWindow& w,
                                                     const expr::ScalarField& v) {
    if (p.dim != v.dim) throw std::invalid_argument("el_residual: dimension mismatch");
    const double n2 = static_cast<double>(p.n) * p.n;
    const double c = 2.0 * sq(w.dt());
    std::vector<double> r(static_cast<std::size_t>((p.n - 1) * p.dim));
    std::vector<double> g(static_cast<std::size_t>(p.dim));
    for (int i = 1; i < p.n; ++i) {
        auto lo = p.node(i - 1);
        auto mid = p.node(i);
        auto hi = p.node(i + 1);
        v.gradient(mid, g);
        for (int a = 0; a < p.dim; ++a)
            r[static_cast<std::size_t>((i - 1) * p.dim + a)] =
                n2 * (hi[a] - 2.0 * mid[a] + lo[a]) - c * g[static_cast<std::size_t>(a)];
    }
    return r;
}

[[nodiscard]] inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

enum class SolveMethod { direct, shooting, dp_oracle };
enum class SolveStatus { converged, max_iterations, fallback_direct };

struct GeodesicOptions {
    int n = 200;
    double tol = 1e-8;  // energy-decrease stopping threshold for descent
    int max_iter = 10000;
    SolveMethod method = SolveMethod::direct;
    bool multistart = false;  // additionally try 5 bent initial paths
    int newton_max = 40;
};

struct AgmonResult {
    double omega = 0.0;
    PathDiscretization path{1, 2};
    int iterations = 0;
    double residual = 0.0;  // sup norm of el_residual at the returned path
    SolveMethod method = SolveMethod::direct;
    SolveStatus status = SolveStatus::converged;
    bool multimodal = false;
};

namespace detail {

// Dense Gauss-Jordan inverse for the small d x d Newton blocks.
inline bool invert_small(std::vector<double>& m, int d) {
    std::vector<double> inv(static_cast<std::size_t>(d * d), 0.0);
    for (int i = 0; i < d; ++i) inv[static_cast<std::size_t>(i * d + i)] = 1.0;
    for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r)
            if (std::fabs(m[static_cast<std::size_t>(r * d + col)]) >
                std::fabs(m[static_cast<std::size_t>(piv * d + col)]))
                piv = r;
        double p = m[static_cast<std::size_t>(piv * d + col)];
        if (p == 0.0 || !std::isfinite(p)) return false;
        if (piv != col) {
            for (int c = 0; c < d; ++c) {
                std::swap(m[static_cast<std::size_t>(piv * d + c)],
                          m[static_cast<std::size_t>(col * d + c)]);
                std::swap(inv[static_cast<std::size_t>(piv * d + c)],
                          inv[static_cast<std::size_t>(col * d + c)]);
            }
        }
        double ip = 1.0 / m[static_cast<std::size_t>(col * d + col)];
        for (int c = 0; c < d; ++c) {
            m[static_cast<std::size_t>(col * d + c)] *= ip;
            inv[static_cast<std::size_t>(col * d + c)] *= ip;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            double f = m[static_cast<std::size_t>(r * d + col)];
            if (f == 0.0) continue;
            for (int c = 0; c < d; ++c) {
                m[static_cast<std::size_t>(r * d + c)] -=
                    f * m[static_cast<std::size_t>(col * d + c)];
                inv[static_cast<std::size_t>(r * d + c)] -=
                    f * inv[static_cast<std::size_t>(col * d + c)];
            }
        }
    }
    m = std::move(inv);
    return true;
}

inline void matvec(const std::vector<double>& m, int d, const double* v, double* out) {
    for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        for (int c = 0; c < d; ++c) acc += m[static_cast<std::size_t>(r * d + c)] * v[c];
        out[r] = acc;
    }
}

// One damped Newton pass on the discrete geodesic equation. The Jacobian is
// block tridiagonal with constant off-diagonal n^2 I; returns false when the
// elimination breaks down or no damping step improves the residual.
inline bool newton_step(PathDiscretization& p, const TimeWindow& w, const expr::ScalarField& v,
                        std::vector<double>& residual) {
    const int d = p.dim;
    const int rows = p.n - 1;
    const double n2 = static_cast<double>(p.n) * p.n;
    const double c = 2.0 * sq(w.dt());

    std::vector<double> diag(static_cast<std::size_t>(rows * d * d));
    std::vector<double> hess(static_cast<std::size_t>(d * d));
    for (int i = 0; i < rows; ++i) {
        v.hessian(p.node(i + 1), hess);
        for (int r = 0; r < d; ++r) {
            for (int cc = 0; cc < d; ++cc) {
                double hval = hess[static_cast<std::size_t>(r * d + cc)];
                if (!std::isfinite(hval)) hval = 0.0;
                diag[static_cast<std::size_t>((i * d + r) * d + cc)] =
                    (r == cc ? -2.0 * n2 : 0.0) - c * hval;
            }
        }
    }

    // Block Thomas elimination of J delta = -residual.
    std::vector<double> gmat(static_cast<std::size_t>(rows * d * d));
    std::vector<double> z(static_cast<std::size_t>(rows * d));
    std::vector<double> block(static_cast<std::size_t>(d * d));
    std::vector<double> tmp(static_cast<std::size_t>(d));
    for (int i = 0; i < rows; ++i) {
        std::copy_n(diag.begin() + static_cast<std::ptrdiff_t>(i) * d * d, d * d, block.begin());
        if (i > 0) {
            // C_i = A_i - n^2 G_{i-1}; rhs_i gets - n^2 z_{i-1}
            for (int k = 0; k < d * d; ++k)
                block[static_cast<std::size_t>(k)] -=
                    n2 * gmat[static_cast<std::size_t>((i - 1) * d * d + k)];
        }
        if (!invert_small(block, d)) return false;
        // G_i = C_i^{-1} * (n^2 I)
        for (int k = 0; k < d * d; ++k)
            gmat[static_cast<std::size_t>(i * d * d + k)] =
                n2 * block[static_cast<std::size_t>(k)];
        for (int r = 0; r < d; ++r) {
            tmp[static_cast<std::size_t>(r)] = -residual[static_cast<std::size_t>(i * d + r)];
            if (i > 0)
                tmp[static_cast<std::size_t>(r)] -= n2 * z[static_cast<std::size_t>((i - 1) * d + r)];
        }
        matvec(block, d, tmp.data(), z.data() + static_cast<std::ptrdiff_t>(i) * d);
    }
    std::vector<double> delta(static_cast<std::size_t>(rows * d));
    for (int i = rows - 1; i >= 0; --i) {
        for (int r = 0; r < d; ++r)
            delta[static_cast<std::size_t>(i * d + r)] = z[static_cast<std::size_t>(i * d + r)];
        if (i < rows - 1) {
            matvec(std::vector<double>(gmat.begin() + static_cast<std::ptrdiff_t>(i) * d * d,
                                       gmat.begin() + static_cast<std::ptrdiff_t>(i + 1) * d * d),
                   d, delta.data() + static_cast<std::ptrdiff_t>(i + 1) * d, tmp.data());
            for (int r = 0; r < d; ++r)
                delta[static_cast<std::size_t>(i * d + r)] -= tmp[static_cast<std::size_t>(r)];
        }
    }

    const double before = sup_norm(residual);
    std::vector<double> saved = p.nodes;
    double scale = 1.0;
    for (int attempt = 0; attempt < 9; ++attempt) {
        p.nodes = saved;
        for (int i = 0; i < rows; ++i) {
            auto nd = p.node(i + 1);
            for (int r = 0; r < d; ++r)
                nd[static_cast<std::size_t>(r)] +=
                    scale * delta[static_cast<std::size_t>(i * d + r)];
        }
        std::vector<double> next = el_residual(p, w, v);
        double after = sup_norm(next);
        if (std::isfinite(after) && after < before) {
            residual = std::move(next);
            return true;
        }
        scale *= 0.5;
    }
    p.nodes = std::move(saved);
    return false;
}

struct DescentOutcome {
    int iterations = 0;
    bool hit_cap = false;
};

// Backtracking gradient descent on the discrete energy over interior nodes.
inline DescentOutcome descend(PathDiscretization& p, const TimeWindow& w,
                              const expr::ScalarField& v, double tol, int max_iter) {
    const int d = p.dim;
    const int rows = p.n - 1;
    const double gscale = 1.0 / (2.0 * p.n * w.dt());
    std::vector<double> grad(static_cast<std::size_t>(rows * d));
    double e = energy(p, w, v);
    if (!std::isfinite(e))
        throw std::runtime_error("path energy is not finite at initialization");
    double step = 1.0;
    DescentOutcome out;
    for (; out.iterations < max_iter; ++out.iterations) {
        std::vector<double> r = el_residual(p, w, v);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = -r[k] * gscale;
        double gnorm2 = 0.0;
        for (double gk : grad) gnorm2 += gk * gk;
        // Below this the gradient is rounding noise from the n^2 differences.
        if (gnorm2 <= 1e-24 * (1.0 + e * e)) return out;

        std::vector<double> saved = p.nodes;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            p.nodes = saved;
            for (int i = 0; i < rows; ++i) {
                auto nd = p.node(i + 1);
                for (int a = 0; a < d; ++a)
                    nd[static_cast<std::size_t>(a)] -=
                        step * grad[static_cast<std::size_t>(i * d + a)];
            }
            double trial = energy(p, w, v);
            if (std::isfinite(trial) && trial <= e - 1e-4 * step * gnorm2) {
                accepted = true;
                double drop = e - trial;
                e = trial;
                step *= 1.25;
                if (drop < tol) {
                    ++out.iterations;
                    return out;
                }
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            p.nodes = std::move(saved);
            return out;
        }
    }
    out.hit_cap = true;
    return out;
}

}  // namespace detail

// Minimize the discrete energy starting from a caller-supplied path.
// Descent brings the iterate into the Newton basin; Newton then drives the
// discrete geodesic equation to solver precision.
[[nodiscard]] inline AgmonResult solve_geodesic_from(PathDiscretization init, const TimeWindow& w,
                                                     const expr::ScalarField& v,
                                                     const GeodesicOptions& opt = {},
                                                     int descent_cap = 150) {
    if (init.dim != v.dim) throw std::invalid_argument("solve_geodesic: dimension mismatch");
    AgmonResult res;
    res.method = SolveMethod::direct;
    auto outcome =
        detail::descend(init, w, v, opt.tol, std::min(descent_cap, opt.max_iter));
    res.iterations = outcome.iterations;

    std::vector<double> r = el_residual(init, w, v);
    for (int k = 0; k < opt.newton_max; ++k) {
        if (sup_norm(r) <= 1e-11 * sq(static_cast<double>(init.n))) break;
        if (!detail::newton_step(init, w, v, r)) break;
        ++res.iterations;
    }
    res.residual = sup_norm(r);
    res.status = res.residual <= 10.0 * opt.tol * sq(static_cast<double>(init.n))
                     ? SolveStatus::converged
                     : SolveStatus::max_iterations;
    res.omega = energy(init, w, v);
    res.path = std::move(init);
    return res;
}

[[nodiscard]] inline AgmonResult solve_geodesic_direct(std::span<const double> x,
                                                       std::span<const double> y,
                                                       const TimeWindow& w,
                                                       const expr::ScalarField& v,
                                                       const GeodesicOptions& opt = {}) {
    auto base = solve_geodesic_from(PathDiscretization::straight(x, y, opt.n), w, v, opt);
    if (!opt.multistart) return base;

    const double rho = std::sqrt(dist2(x, y));
    const double scale = 0.5 * (1.0 + rho);
    AgmonResult best = base;
    bool spread = false;
    for (int k = 0; k < 5; ++k) {
        PathDiscretization p = PathDiscretization::straight(x, y, opt.n);
        const int axis = k % p.dim;
        const double amp = scale * (0.4 + 0.3 * k) * (k % 2 == 0 ? 1.0 : -1.0);
        for (int i = 1; i < p.n; ++i) {
            double tau = static_cast<double>(i) / p.n;
            p.node(i)[static_cast<std::size_t>(axis)] +=
                amp * std::sin(3.14159265358979323846 * tau);
        }
        AgmonResult cand = solve_geodesic_from(std::move(p), w, v, opt);
        if (cand.status == SolveStatus::converged &&
            std::fabs(cand.omega - best.omega) > 1e-6 * (1.0 + std::fabs(best.omega)))
            spread = true;
        if (cand.status == SolveStatus::converged && cand.omega < best.omega) best = std::move(cand);
    }
    best.multimodal = spread;
    return best;
}

namespace detail {

// RK4 on the first-order system for gamma'' = 2 (t-s)^2 grad V(gamma).
// Returns false when the trajectory leaves a generous bounding region.
inline bool integrate_shoot(std::span<const double> y, std::span<const double> v0,
                            const TimeWindow& w, const expr::ScalarField& field, int steps,
                            double guard_radius, PathDiscretization& out) {
    const int d = static_cast<int>(y.size());
    const double c = 2.0 * sq(w.dt());
    const double h = 1.0 / steps;
    std::vector<double> pos(y.begin(), y.end());
    std::vector<double> vel(v0.begin(), v0.end());
    std::vector<double> g(static_cast<std::size_t>(d));
    auto accel = [&](const std::vector<double>& q, std::vector<double>& a) {
        field.gradient(q, g);
        for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = c * g[static_cast<std::size_t>(i)];
    };
    std::vector<double> k1p(static_cast<std::size_t>(d)), k1v(static_cast<std::size_t>(d)),
        k2p(k1p), k2v(k1v), k3p(k1p), k3v(k1v), k4p(k1p), k4v(k1v), q(k1p);

    std::copy(pos.begin(), pos.end(), out.node(0).begin());
    for (int step = 0; step < steps; ++step) {
        k1p = vel;
        accel(pos, k1v);
        for (int i = 0; i < d; ++i) q[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(i)] + 0.5 * h * k1p[static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i) k2p[static_cast<std::size_t>(i)] = vel[static_cast<std::size_t>(i)] + 0.5 * h * k1v[static_cast<std::size_t>(i)];
        accel(q, k2v);
        for (int i = 0; i < d; ++i) q[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(i)] + 0.5 * h * k2p[static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i) k3p[static_cast<std::size_t>(i)] = vel[static_cast<std::size_t>(i)] + 0.5 * h * k2v[static_cast<std::size_t>(i)];
        accel(q, k3v);
        for (int i = 0; i < d; ++i) q[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(i)] + h * k3p[static_cast<std::size_t>(i)];
        for (int i = 0; i < d; ++i) k4p[static_cast<std::size_t>(i)] = vel[static_cast<std::size_t>(i)] + h * k3v[static_cast<std::size_t>(i)];
        accel(q, k4v);
        for (int i = 0; i < d; ++i) {
            pos[static_cast<std::size_t>(i)] +=
                h / 6.0 *
                (k1p[static_cast<std::size_t>(i)] + 2.0 * k2p[static_cast<std::size_t>(i)] +
                 2.0 * k3p[static_cast<std::size_t>(i)] + k4p[static_cast<std::size_t>(i)]);
            vel[static_cast<std::size_t>(i)] +=
                h / 6.0 *
                (k1v[static_cast<std::size_t>(i)] + 2.0 * k2v[static_cast<std::size_t>(i)] +
                 2.0 * k3v[static_cast<std::size_t>(i)] + k4v[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < d; ++i)
            if (!std::isfinite(pos[static_cast<std::size_t>(i)]) ||
                std::fabs(pos[static_cast<std::size_t>(i)]) > guard_radius)
                return false;
        std::copy(pos.begin(), pos.end(), out.node(step + 1).begin());
    }
    return true;
}

}  // namespace detail

// Shooting: Newton on the terminal miss of the geodesic initial-value
// problem. Falls back to the direct method when trajectories blow up or the
// boundary-value iteration stalls.
[[nodiscard]] inline AgmonResult solve_geodesic_shooting(std::span<const double> x,
                                                         std::span<const double> y,
                                                         const TimeWindow& w,
                                                         const expr::ScalarField& field,
                                                         const GeodesicOptions& opt = {}) {
    const int d = static_cast<int>(x.size());
    if (static_cast<int>(y.size()) != d || field.dim != d)
        throw std::invalid_argument("solve_geodesic: dimension mismatch");
    double guard = 10.0 + 10.0 * (std::sqrt(dist2(x, y)) + sup_norm(x) + sup_norm(y));

    std::vector<double> v0(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v0[static_cast<std::size_t>(i)] = x[i] - y[i];

    PathDiscretization traj(d, opt.n);
    std::vector<double> miss(static_cast<std::size_t>(d));
    std::vector<double> jac(static_cast<std::size_t>(d * d));
    auto compute_miss = [&](const std::vector<double>& vel, std::vector<double>& m) {
        if (!detail::integrate_shoot(y, vel, w, field, opt.n, guard, traj)) return false;
        auto end = traj.node(traj.n);
        for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i)] = end[static_cast<std::size_t>(i)] - x[i];
        return true;
    };

    bool ok = compute_miss(v0, miss);
    int iters = 0;
    if (ok) {
        for (; iters < 50; ++iters) {
            double mn = sup_norm(miss);
            if (mn <= 1e-11 * (1.0 + sup_norm(x))) break;
            // Finite-difference Jacobian of the miss in the initial velocity.
            bool jac_ok = true;
            std::vector<double> m1(static_cast<std::size_t>(d));
            for (int cidx = 0; cidx < d && jac_ok; ++cidx) {
                double h = 1e-6 * (1.0 + std::fabs(v0[static_cast<std::size_t>(cidx)]));
                std::vector<double> vp = v0;
                vp[static_cast<std::size_t>(cidx)] += h;
                PathDiscretization keep = traj;
                jac_ok = compute_miss(vp, m1);
                traj = std::move(keep);
                if (!jac_ok) break;
                for (int r = 0; r < d; ++r)
                    jac[static_cast<std::size_t>(r * d + cidx)] =
                        (m1[static_cast<std::size_t>(r)] - miss[static_cast<std::size_t>(r)]) / h;
            }
            if (!jac_ok || !detail::invert_small(jac, d)) {
                ok = false;
                break;
            }
            std::vector<double> delta(static_cast<std::size_t>(d));
            detail::matvec(jac, d, miss.data(), delta.data());
            double scale = 1.0;
            bool improved = false;
            std::vector<double> vtrial(static_cast<std::size_t>(d)), mtrial(static_cast<std::size_t>(d));
            for (int bt = 0; bt < 8; ++bt) {
                for (int i = 0; i < d; ++i)
                    vtrial[static_cast<std::size_t>(i)] =
                        v0[static_cast<std::size_t>(i)] - scale * delta[static_cast<std::size_t>(i)];
                if (compute_miss(vtrial, mtrial) && sup_norm(mtrial) < mn) {
                    v0 = vtrial;
                    miss = mtrial;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!improved) {
                ok = sup_norm(miss) <= 1e-8 * (1.0 + sup_norm(x));
                break;
            }
        }
        if (ok && sup_norm(miss) > 1e-8 * (1.0 + sup_norm(x))) ok = false;
    }

    if (!ok) {
        AgmonResult res = solve_geodesic_direct(x, y, w, field, opt);
        if (res.status == SolveStatus::converged) res.status = SolveStatus::fallback_direct;
        return res;
    }

    // Pin the endpoint exactly and report the discrete residual of the path.
    std::copy(x.begin(), x.end(), traj.node(traj.n).begin());
    AgmonResult res;
    res.method = SolveMethod::shooting;
    res.status = SolveStatus::converged;
    res.iterations = iters;
    res.residual = sup_norm(el_residual(traj, w, field));
    res.omega = energy(traj, w, field);
    res.path = std::move(traj);
    return res;
}

[[nodiscard]] inline AgmonResult solve_geodesic(std::span<const double> x,
                                                std::span<const double> y, const TimeWindow& w,
                                                const expr::ScalarField& field,
                                                const GeodesicOptions& opt = {}) {
    if (opt.n < 2) throw std::invalid_argument("solve_geodesic: need n >= 2");
    if (opt.method == SolveMethod::shooting)
        return solve_geodesic_shooting(x, y, w, field, opt);
    return solve_geodesic_direct(x, y, w, field, opt);
}

// ---- dynamic-programming oracle (one dimension) ----

struct DpLattice {
    double lo = -2.0;
    double hi = 2.0;
    int m = 401;  // lattice points
    int k = 16;   // time slices
};

// Exact minimum of the discrete energy over all lattice paths with k slices.
// Endpoints must sit on the lattice. O(k m^2), independent of the solver.
[[nodiscard]] inline double omega_oracle_dp(double x, double y, const TimeWindow& w,
                                            const expr::ScalarField& field,
                                            const DpLattice& lat = {}) {
    if (field.dim != 1) throw std::invalid_argument("dp oracle supports dimension 1 only");
    if (lat.m < 2 || lat.k < 1 || !(lat.hi > lat.lo))
        throw std::invalid_argument("dp oracle: bad lattice");
    const double h = (lat.hi - lat.lo) / (lat.m - 1);
    auto to_index = [&](double v, const char* which) {
        double fi = (v - lat.lo) / h;
        long idx = std::lround(fi);
        if (idx < 0 || idx >= lat.m || std::fabs(fi - static_cast<double>(idx)) > 1e-9 / h)
            throw std::invalid_argument(std::string("dp oracle: endpoint '") + which +
                                        "' is not a lattice point");
        return static_cast<int>(idx);
    };
    const int iy = to_index(y, "y");
    const int ix = to_index(x, "x");

    std::vector<double> vals(static_cast<std::size_t>(lat.m));
    std::vector<double> grid(static_cast<std::size_t>(lat.m));
    for (int i = 0; i < lat.m; ++i) {
        grid[static_cast<std::size_t>(i)] = lat.lo + h * i;
        vals[static_cast<std::size_t>(i)] =
            field.value(std::span<const double>(&grid[static_cast<std::size_t>(i)], 1));
    }

    const double kin = static_cast<double>(lat.k) / (4.0 * w.dt());
    const double pot = w.dt() / lat.k * 0.5;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(static_cast<std::size_t>(lat.m), inf);
    std::vector<double> next(static_cast<std::size_t>(lat.m));
    dp[static_cast<std::size_t>(iy)] = 0.0;
    for (int layer = 0; layer < lat.k; ++layer) {
        const bool last = layer == lat.k - 1;
        for (int j = 0; j < lat.m; ++j) {
            if (last && j != ix) {
                next[static_cast<std::size_t>(j)] = inf;
                continue;
            }
            double best = inf;
            const double gj = grid[static_cast<std::size_t>(j)];
            const double vj = vals[static_cast<std::size_t>(j)];
            for (int i = 0; i < lat.m; ++i) {
                double base = dp[static_cast<std::size_t>(i)];
                if (base == inf) continue;
                double cand = base + kin * sq(gj - grid[static_cast<std::size_t>(i)]) +
                              pot * (vals[static_cast<std::size_t>(i)] + vj);
                if (cand < best) best = cand;
            }
            next[static_cast<std::size_t>(j)] = best;
        }
        dp.swap(next);
    }
    return dp[static_cast<std::size_t>(ix)];
}

// ---- finite-difference derivatives of omega ----

struct DerivativeOptions {
    double box_extent = 10.0;   // length scale of the working region
    double space_step = 0.0;    // 0: use 1e-3 * box_extent
    double time_step_rel = 1e-3;  // times (t-s)
    double second_order_factor = 10.0;
    int order = 2;  // 1: first derivatives only
    int jobs = 1;
};

[[nodiscard]] inline OmegaDerivatives omega_derivatives(std::span<const double> x,
                                                        std::span<const double> y,
                                                        const TimeWindow& w,
                                                        const expr::ScalarField& field,
                                                        GeodesicOptions gopt = {},
                                                        const DerivativeOptions& dopt = {}) {
    const int d = static_cast<int>(x.size());
    gopt.multistart = false;
    AgmonResult base = solve_geodesic(x, y, w, field, gopt);
    if (base.status == SolveStatus::max_iterations)
        throw std::runtime_error("omega_derivatives: base solve did not converge");

    const double hx = dopt.space_step > 0.0 ? dopt.space_step : 1e-3 * dopt.box_extent;
    const double ht = dopt.time_step_rel * w.dt();
    const double hh = dopt.second_order_factor * hx;

    struct Stencil {
        std::vector<double> dx, dy;
        double dt = 0.0, ds = 0.0;
        std::string name;
    };
    std::vector<Stencil> stencils;
    auto push = [&](std::vector<double> dx, std::vector<double> dy, double dt_, double ds_,
                    std::string name) {
        stencils.push_back({std::move(dx), std::move(dy), dt_, ds_, std::move(name)});
    };
    std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
    auto unit = [&](int a, double v) {
        std::vector<double> e(static_cast<std::size_t>(d), 0.0);
        e[static_cast<std::size_t>(a)] = v;
        return e;
    };

    push(zero, zero, ht, 0.0, "t+h");
    push(zero, zero, -ht, 0.0, "t-h");
    push(zero, zero, 0.0, ht, "s+h");
    push(zero, zero, 0.0, -ht, "s-h");
    for (int a = 0; a < d; ++a) {
        push(unit(a, hx), zero, 0.0, 0.0, "x+h e" + std::to_string(a + 1));
        push(unit(a, -hx), zero, 0.0, 0.0, "x-h e" + std::to_string(a + 1));
        push(zero, unit(a, hx), 0.0, 0.0, "y+h e" + std::to_string(a + 1));
        push(zero, unit(a, -hx), 0.0, 0.0, "y-h e" + std::to_string(a + 1));
    }
    if (dopt.order >= 2) {
        for (int a = 0; a < d; ++a) {
            push(unit(a, hh), zero, 0.0, 0.0, "x+H e" + std::to_string(a + 1));
            push(unit(a, -hh), zero, 0.0, 0.0, "x-H e" + std::to_string(a + 1));
            push(zero, unit(a, hh), 0.0, 0.0, "y+H e" + std::to_string(a + 1));
            push(zero, unit(a, -hh), 0.0, 0.0, "y-H e" + std::to_string(a + 1));
            push(unit(a, hh), unit(a, hh), 0.0, 0.0, "x+H,y+H e" + std::to_string(a + 1));
            push(unit(a, hh), unit(a, -hh), 0.0, 0.0, "x+H,y-H e" + std::to_string(a + 1));
            push(unit(a, -hh), unit(a, hh), 0.0, 0.0, "x-H,y+H e" + std::to_string(a + 1));
            push(unit(a, -hh), unit(a, -hh), 0.0, 0.0, "x-H,y-H e" + std::to_string(a + 1));
        }
    }

    std::vector<double> value(stencils.size());
    std::vector<std::string> failed(stencils.size());
    parallel_for(stencils.size(), dopt.jobs, [&](std::size_t idx) {
        const Stencil& st = stencils[idx];
        try {
            TimeWindow ws(w.t + st.dt, w.s + st.ds);
            // Warm start: blend the endpoint shifts linearly along the base path.
            PathDiscretization p = base.path;
            for (int i = 0; i <= p.n; ++i) {
                double tau = static_cast<double>(i) / p.n;
                auto nd = p.node(i);
                for (int a = 0; a < d; ++a)
                    nd[static_cast<std::size_t>(a)] +=
                        tau * st.dx[static_cast<std::size_t>(a)] +
                        (1.0 - tau) * st.dy[static_cast<std::size_t>(a)];
            }
            AgmonResult r = solve_geodesic_from(std::move(p), ws, field, gopt, 30);
            if (r.status == SolveStatus::max_iterations)
                failed[idx] = st.name;
            else
                value[idx] = r.omega;
        } catch (const std::exception&) {
            failed[idx] = st.name;
        }
    });
    for (std::size_t i = 0; i < stencils.size(); ++i)
        if (!failed[i].empty())
            throw std::runtime_error("omega_derivatives: stencil solve failed at corner " +
                                     failed[i]);

    OmegaDerivatives out;
    out.grad_x.resize(static_cast<std::size_t>(d));
    out.grad_y.resize(static_cast<std::size_t>(d));
    std::size_t at = 0;
    out.dt = (value[at] - value[at + 1]) / (2.0 * ht);
    out.ds = (value[at + 2] - value[at + 3]) / (2.0 * ht);
    at += 4;
    for (int a = 0; a < d; ++a, at += 4) {
        out.grad_x[static_cast<std::size_t>(a)] = (value[at] - value[at + 1]) / (2.0 * hx);
        out.grad_y[static_cast<std::size_t>(a)] = (value[at + 2] - value[at + 3]) / (2.0 * hx);
    }
    if (dopt.order >= 2) {
        for (int a = 0; a < d; ++a, at += 8) {
            out.lap_x += (value[at] - 2.0 * base.omega + value[at + 1]) / (hh * hh);
            out.lap_y += (value[at + 2] - 2.0 * base.omega + value[at + 3]) / (hh * hh);
            out.mixed_sum +=
                (value[at + 4] - value[at + 5] - value[at + 6] + value[at + 7]) /
                (4.0 * hh * hh);
        }
    }
    return out;
}

[[nodiscard]] inline OmegaProvider numeric_omega_provider(const expr::ScalarField& field,
                                                          GeodesicOptions gopt = {},
                                                          DerivativeOptions dopt = {}) {
    OmegaProvider p;
    p.dim = field.dim;
    p.analytic = false;
    p.smooth = field.smooth;
    p.value = [field, gopt](std::span<const double> x, std::span<const double> y, double t,
                            double s) {
        AgmonResult r = solve_geodesic(x, y, TimeWindow(t, s), field, gopt);
        if (r.status == SolveStatus::max_iterations)
            throw std::runtime_error("omega solve did not converge");
        return r.omega;
    };
    p.derivatives = [field, gopt, dopt](std::span<const double> x, std::span<const double> y,
                                        double t, double s) {
        return omega_derivatives(x, y, TimeWindow(t, s), field, gopt, dopt);
    };
    return p;
}

}  // namespace harnack::action
