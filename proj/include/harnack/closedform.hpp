#pragma once

// Closed forms for the two reference potentials: V = 0 (free heat flow) and
// the quadratic well V = c1^2 |x-a|^2 + c2. Fundamental solutions, action
// values with exact derivatives, minimizing paths, and admissible rate pairs.

#include <functional>
#include <string>

#include "harnack/common.hpp"
#include "harnack/expr.hpp"
#include "harnack/omega.hpp"

namespace harnack::closedform {

namespace detail {

inline void require_window(double t, double s) {
    if (!(s >= 0.0) || !(t > s))
        throw std::invalid_argument("time window must satisfy 0 <= s < t");
}

// 1/sinh(z), cosh(z)/sinh(z)^2, coth(z) without overflow for large z.
[[nodiscard]] inline double inv_sinh(double z) {
    if (z > 30.0) {
        double e = std::exp(-z);
        return 2.0 * e / (1.0 - e * e);
    }
    return 1.0 / std::sinh(z);
}
[[nodiscard]] inline double coth(double z) {
    if (z > 30.0) {
        double e = std::exp(-2.0 * z);
        return (1.0 + e) / (1.0 - e);
    }
    return std::cosh(z) / std::sinh(z);
}
[[nodiscard]] inline double cosh_over_sinh2(double z) { return coth(z) * inv_sinh(z); }

// sinh(num)/sinh(den) for nonnegative num <= den, stable for large arguments.
[[nodiscard]] inline double sinh_ratio(double num, double den) {
    if (num == 0.0) return 0.0;
    if (den > 30.0 || num > 30.0) return std::exp(log_sinh(num) - log_sinh(den));
    return std::sinh(num) / std::sinh(den);
}

}  // namespace detail

// ---- fundamental solutions ----

[[nodiscard]] inline double log_heat_kernel(std::span<const double> x, double t) {
    if (!(t > 0.0)) throw std::domain_error("heat kernel needs t > 0");
    const double d = static_cast<double>(x.size());
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return -0.5 * d * std::log(4.0 * 3.14159265358979323846 * t) - r2 / (4.0 * t);
}

[[nodiscard]] inline double heat_kernel(std::span<const double> x, double t) {
    return std::exp(log_heat_kernel(x, t));
}

struct QuadraticWell {
    double c1 = 1.0;  // curvature scale; V grows like c1^2 |x-a|^2
    double c2 = 0.0;  // constant offset
    std::vector<double> a;  // center (empty = origin)

    [[nodiscard]] double center(std::size_t axis) const {
        return a.empty() ? 0.0 : a[axis];
    }
};

[[nodiscard]] inline double log_mehler_kernel(std::span<const double> x, double t,
                                              const QuadraticWell& w = {}) {
    if (!(t > 0.0)) throw std::domain_error("mehler kernel needs t > 0");
    if (!(w.c1 > 0.0)) throw std::invalid_argument("mehler kernel needs c1 > 0");
    const double d = static_cast<double>(x.size());
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += sq(x[i] - w.center(i));
    const double z = 2.0 * w.c1 * t;
    return -0.5 * d *
               (std::log(2.0 * 3.14159265358979323846) - std::log(w.c1) + log_sinh(z)) -
           w.c1 * r2 / (2.0 * std::tanh(z)) - w.c2 * t;
}

[[nodiscard]] inline double mehler_kernel(std::span<const double> x, double t,
                                          const QuadraticWell& w = {}) {
    return std::exp(log_mehler_kernel(x, t, w));
}

// ---- action values ----

[[nodiscard]] inline double omega_heat(std::span<const double> x, std::span<const double> y,
                                       double t, double s) {
    detail::require_window(t, s);
    return dist2(x, y) / (4.0 * (t - s));
}

[[nodiscard]] inline double omega_quadratic(std::span<const double> x, std::span<const double> y,
                                            double t, double s, const QuadraticWell& w = {}) {
    detail::require_window(t, s);
    if (!(w.c1 > 0.0)) throw std::invalid_argument("omega_quadratic needs c1 > 0");
    const double dt = t - s;
    double rho2 = dist2(x, y);
    double p = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        p += sq(x[i] - w.center(i)) + sq(y[i] - w.center(i));
    return 0.5 * w.c1 *
               (rho2 * detail::inv_sinh(2.0 * w.c1 * dt) + p * std::tanh(w.c1 * dt)) +
           w.c2 * dt;
}

[[nodiscard]] inline OmegaDerivatives omega_heat_derivatives(std::span<const double> x,
                                                             std::span<const double> y, double t,
                                                             double s) {
    detail::require_window(t, s);
    const double dt = t - s;
    const double d = static_cast<double>(x.size());
    OmegaDerivatives out;
    double rho2 = dist2(x, y);
    out.dt = -rho2 / (4.0 * dt * dt);
    out.ds = rho2 / (4.0 * dt * dt);
    out.grad_x.resize(x.size());
    out.grad_y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.grad_x[i] = (x[i] - y[i]) / (2.0 * dt);
        out.grad_y[i] = -(x[i] - y[i]) / (2.0 * dt);
    }
    out.lap_x = out.lap_y = d / (2.0 * dt);
    out.mixed_sum = -d / (2.0 * dt);
    return out;
}

[[nodiscard]] inline OmegaDerivatives omega_quadratic_derivatives(std::span<const double> x,
                                                                  std::span<const double> y,
                                                                  double t, double s,
                                                                  const QuadraticWell& w = {}) {
    detail::require_window(t, s);
    if (!(w.c1 > 0.0)) throw std::invalid_argument("omega_quadratic needs c1 > 0");
    const double dt = t - s;
    const double d = static_cast<double>(x.size());
    const double z = 2.0 * w.c1 * dt;
    const double inv_s = detail::inv_sinh(z);
    const double tn = std::tanh(w.c1 * dt);
    const double sech2 = 1.0 - tn * tn;

    OmegaDerivatives out;
    double rho2 = dist2(x, y);
    double p = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        p += sq(x[i] - w.center(i)) + sq(y[i] - w.center(i));

    const double ddelta = -w.c1 * w.c1 * rho2 * detail::cosh_over_sinh2(z) +
                          0.5 * w.c1 * w.c1 * p * sech2 + w.c2;
    out.dt = ddelta;
    out.ds = -ddelta;
    out.grad_x.resize(x.size());
    out.grad_y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        out.grad_x[i] = w.c1 * (diff * inv_s + (x[i] - w.center(i)) * tn);
        out.grad_y[i] = w.c1 * (-diff * inv_s + (y[i] - w.center(i)) * tn);
    }
    out.lap_x = out.lap_y = d * w.c1 * (inv_s + tn);
    out.mixed_sum = -d * w.c1 * inv_s;
    return out;
}

// Minimizing path of the quadratic-well action, parametrized on [0,1] with
// gamma(0) = y and gamma(1) = x.
[[nodiscard]] inline std::vector<double> geodesic_quadratic(std::span<const double> x,
                                                            std::span<const double> y, double t,
                                                            double s, double tau,
                                                            const QuadraticWell& w = {}) {
    detail::require_window(t, s);
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in [0,1]");
    const double z = 2.0 * w.c1 * (t - s);
    const double wx = detail::sinh_ratio(tau * z, z);
    const double wy = detail::sinh_ratio((1.0 - tau) * z, z);
    std::vector<double> pt(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = w.center(i);
        pt[i] = c + wx * (x[i] - c) + wy * (y[i] - c);
    }
    return pt;
}

// Point on the equality set of the sharp bound: the y for which the kernel
// attains the bound against (x, t, s).
[[nodiscard]] inline std::vector<double> heat_characteristic_y(std::span<const double> x,
                                                               double t, double s) {
    detail::require_window(t, s);
    if (!(s > 0.0)) throw std::domain_error("characteristic point needs s > 0");
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * s / t;
    return y;
}

[[nodiscard]] inline std::vector<double> quadratic_characteristic_y(std::span<const double> x,
                                                                    double t, double s,
                                                                    const QuadraticWell& w = {}) {
    detail::require_window(t, s);
    if (!(s > 0.0)) throw std::domain_error("characteristic point needs s > 0");
    const double r = detail::sinh_ratio(2.0 * w.c1 * s, 2.0 * w.c1 * t);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = w.center(i);
        y[i] = c + r * (x[i] - c);
    }
    return y;
}

// ---- rate pairs ----

enum class RateKind { heat, quadratic, custom };

// An admissible pair (A, beta) certifying the bound
// u(x,t) >= u(y,s) * beta(s)/beta(t) * exp(-omega).
struct RatePair {
    RateKind kind = RateKind::custom;
    int dim = 1;
    double c = 0.0;  // quadratic curvature scale, when applicable
    std::string label;
    std::function<double(double)> A;
    std::function<double(double)> A_prime;
    std::function<double(double)> beta;
    std::function<double(double)> beta_log_deriv;  // beta'(t)/beta(t)
    std::function<double(double)> log_beta;
};

[[nodiscard]] inline RatePair rate_pair_heat(int dim) {
    if (dim < 1) throw std::invalid_argument("rate_pair_heat: dim >= 1");
    RatePair rp;
    rp.kind = RateKind::heat;
    rp.dim = dim;
    rp.label = "heat";
    const double d = static_cast<double>(dim);
    rp.A = [](double tau) { return tau; };
    rp.A_prime = [](double) { return 1.0; };
    rp.beta = [d](double tau) { return std::pow(tau, 0.5 * d); };
    rp.beta_log_deriv = [d](double tau) { return 0.5 * d / tau; };
    rp.log_beta = [d](double tau) { return 0.5 * d * std::log(tau); };
    return rp;
}

[[nodiscard]] inline RatePair rate_pair_quadratic(int dim, double c1) {
    if (dim < 1) throw std::invalid_argument("rate_pair_quadratic: dim >= 1");
    if (!(c1 > 0.0)) throw std::invalid_argument("rate_pair_quadratic: c1 > 0");
    RatePair rp;
    rp.kind = RateKind::quadratic;
    rp.dim = dim;
    rp.c = c1;
    rp.label = "quadratic(c=" + format_g17(c1) + ")";
    const double d = static_cast<double>(dim);
    rp.A = [c1](double tau) { return std::sinh(2.0 * c1 * tau); };
    rp.A_prime = [c1](double tau) { return 2.0 * c1 * std::cosh(2.0 * c1 * tau); };
    rp.beta = [c1, d](double tau) { return std::pow(std::sinh(2.0 * c1 * tau), 0.5 * d); };
    rp.beta_log_deriv = [c1, d](double tau) { return d * c1 * detail::coth(2.0 * c1 * tau); };
    rp.log_beta = [c1, d](double tau) { return 0.5 * d * log_sinh(2.0 * c1 * tau); };
    return rp;
}

// Replace beta by tau^p while keeping A. Used to probe how the checks react
// to rate functions that do not certify anything.
[[nodiscard]] inline RatePair with_power_beta(RatePair rp, double p) {
    rp.kind = RateKind::custom;
    rp.label += " with beta=tau^" + format_g17(p);
    rp.beta = [p](double tau) { return std::pow(tau, p); };
    rp.beta_log_deriv = [p](double tau) { return p / tau; };
    rp.log_beta = [p](double tau) { return p * std::log(tau); };
    return rp;
}

// ---- drift reduction ----

// For d/dt u = Lap u - 2 grad f . grad u - V u, the substitution v = e^{-f} u
// turns the equation into d/dt v = Lap v - Vtilde v with
// Vtilde = |grad f|^2 - Lap f + V. Built symbolically.
[[nodiscard]] inline expr::PotentialExpr drift_transform(const expr::PotentialExpr& f,
                                                         const expr::PotentialExpr& v,
                                                         const Box* sample_box = nullptr) {
    if (f.dim != v.dim) throw std::invalid_argument("drift_transform: dimension mismatch");
    expr::NodePtr grad2 = expr::number(0.0);
    expr::NodePtr lap = expr::number(0.0);
    for (int axis = 0; axis < f.dim; ++axis) {
        expr::NodePtr df = expr::derivative(f.ast, axis);
        grad2 = expr::add(grad2, expr::pow(df, 2));
        lap = expr::add(lap, expr::derivative(df, axis));
    }
    expr::NodePtr tilde =
        expr::simplify(expr::add(expr::sub(grad2, lap), v.ast));
    return expr::make_potential(tilde, f.dim, sample_box);
}

// ---- bound evaluation ----

[[nodiscard]] inline double log_harnack_rhs(double log_u_ys, const RatePair& rp, double t,
                                            double s, double omega, double drift_df = 0.0) {
    detail::require_window(t, s);
    return log_u_ys + rp.log_beta(s) - rp.log_beta(t) - omega + drift_df;
}

[[nodiscard]] inline double harnack_rhs(double u_ys, const RatePair& rp, double t, double s,
                                        double omega, double drift_df = 0.0) {
    if (!(u_ys > 0.0)) throw std::domain_error("harnack_rhs needs u(y,s) > 0");
    return std::exp(log_harnack_rhs(std::log(u_ys), rp, t, s, omega, drift_df));
}

// ---- providers ----

[[nodiscard]] inline OmegaProvider heat_omega_provider(int dim) {
    OmegaProvider p;
    p.dim = dim;
    p.analytic = true;
    p.smooth = true;
    p.value = [](std::span<const double> x, std::span<const double> y, double t, double s) {
        return omega_heat(x, y, t, s);
    };
    p.derivatives = [](std::span<const double> x, std::span<const double> y, double t,
                       double s) { return omega_heat_derivatives(x, y, t, s); };
    return p;
}

[[nodiscard]] inline OmegaProvider quadratic_omega_provider(int dim, QuadraticWell w = {}) {
    OmegaProvider p;
    p.dim = dim;
    p.analytic = true;
    p.smooth = true;
    p.value = [w](std::span<const double> x, std::span<const double> y, double t, double s) {
        return omega_quadratic(x, y, t, s, w);
    };
    p.derivatives = [w](std::span<const double> x, std::span<const double> y, double t,
                        double s) { return omega_quadratic_derivatives(x, y, t, s, w); };
    return p;
}

}  // namespace harnack::closedform
