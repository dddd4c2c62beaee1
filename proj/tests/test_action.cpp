#include <catch2/catch_amalgamated.hpp>

#include "harnack/action.hpp"
#include "harnack/closedform.hpp"

using namespace harnack;
namespace act = harnack::action;
namespace cf = harnack::closedform;

namespace {

const double kX1[] = {1.0};
const double kY0[] = {0.0};

expr::ScalarField quad_field() { return expr::field_from_source("x1^2", 1); }

}  // namespace

TEST_CASE("energy matches hand-computed values") {
    act::TimeWindow w(1.0, 0.5);
    auto zero = expr::field_from_source("0", 1);

    auto straight = act::PathDiscretization::straight(kX1, kY0, 2);
    CHECK(act::energy(straight, w, zero) == Catch::Approx(0.5).margin(1e-15));

    // Constant path at 1 under V = x^2 over a unit window: pure potential term.
    act::TimeWindow w1(1.5, 0.5);
    act::PathDiscretization constant(1, 2);
    for (int i = 0; i <= 2; ++i) constant.node(i)[0] = 1.0;
    auto quad = quad_field();
    CHECK(act::energy(constant, w1, quad) == Catch::Approx(1.0).margin(1e-15));

    auto r = act::el_residual(constant, w1, quad);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == Catch::Approx(-4.0).margin(1e-12));

    auto r0 = act::el_residual(straight, w, zero);
    CHECK(act::sup_norm(r0) == 0.0);
}

TEST_CASE("reparametrized energy agrees with the unit-interval form") {
    Rng rng(20260814u);
    auto v = expr::field_from_source("sin(x1) + x1^2", 1);
    act::TimeWindow w(1.7, 0.3);
    for (int rep = 0; rep < 10; ++rep) {
        act::PathDiscretization p(1, 17);
        for (int i = 0; i <= 17; ++i) p.node(i)[0] = rng.uniform(-2.0, 2.0);
        double a = act::energy(p, w, v);
        double b = act::reparametrized_energy(p, w, v);
        CHECK(a == Catch::Approx(b).margin(1e-12 * (1.0 + std::fabs(a))));
    }
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(act::TimeWindow(0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(act::TimeWindow(1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(act::TimeWindow(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(act::PathDiscretization(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(act::PathDiscretization(0, 4), std::invalid_argument);

    auto v2 = expr::field_from_source("x1^2 + x2^2", 2);
    act::TimeWindow w(1.0, 0.5);
    CHECK_THROWS_AS(act::solve_geodesic(kX1, kY0, w, v2), std::invalid_argument);
}

TEST_CASE("free potential: straight line is the exact minimizer") {
    auto zero = expr::field_from_source("0", 1);
    act::TimeWindow w(1.0, 0.5);
    auto res = act::solve_geodesic(kX1, kY0, w, zero);
    CHECK(res.status == act::SolveStatus::converged);
    CHECK(res.method == act::SolveMethod::direct);
    CHECK(res.omega == Catch::Approx(0.5).margin(1e-14));
    CHECK(res.residual <= 1e-10);
    for (int i = 0; i <= res.path.n; ++i) {
        double tau = static_cast<double>(i) / res.path.n;
        CHECK(res.path.node(i)[0] == Catch::Approx(tau).margin(0.0));
    }
}

TEST_CASE("quadratic well: solver matches the closed form") {
    auto quad = quad_field();
    cf::QuadraticWell well;

    struct Case {
        double x, y, t, s;
    };
    const Case cases[] = {
        {1.0, 0.0, 1.0, 0.5},   {0.8, -0.4, 0.75, 0.5}, {-1.2, 0.3, 1.1, 0.9},
        {0.5, 0.5, 2.0, 1.75},  {1.2, 1.0, 0.6, 0.35},  {-0.7, -1.1, 1.3, 1.05},
    };
    for (const auto& c : cases) {
        CAPTURE(c.x, c.y, c.t, c.s);
        const double xs[] = {c.x};
        const double ys[] = {c.y};
        act::TimeWindow w(c.t, c.s);
        auto res = act::solve_geodesic(xs, ys, w, quad);
        REQUIRE(res.status == act::SolveStatus::converged);
        double exact = cf::omega_quadratic(xs, ys, c.t, c.s, well);
        CHECK(res.omega == Catch::Approx(exact).margin(1e-5));
        double worst = 0.0;
        for (int i = 0; i <= res.path.n; ++i) {
            double tau = static_cast<double>(i) / res.path.n;
            auto g = cf::geodesic_quadratic(xs, ys, c.t, c.s, tau, well);
            worst = std::max(worst, std::fabs(res.path.node(i)[0] - g[0]));
        }
        CHECK(worst <= 1e-6);
    }

    // Reference value pinned once; guards against silent regressions.
    act::TimeWindow w(1.0, 0.5);
    auto res = act::solve_geodesic(kX1, kY0, w, quad);
    CHECK(res.omega == Catch::Approx(0.6565176427496656).margin(1e-5));
    auto mid = res.path.node(100);
    CHECK(mid[0] == Catch::Approx(0.443409441985037).margin(1e-6));
}

TEST_CASE("coinciding endpoints at the well bottom give zero action") {
    auto quad = quad_field();
    act::TimeWindow w(1.0, 0.5);
    auto res = act::solve_geodesic(kY0, kY0, w, quad);
    CHECK(res.status == act::SolveStatus::converged);
    CHECK(res.omega == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("discrete geodesic residual decays at second order") {
    cf::QuadraticWell well;
    auto quad = quad_field();
    act::TimeWindow w(1.0, 0.25);
    const double xs[] = {1.5};
    const double ys[] = {-0.5};
    auto sampled_residual = [&](int n) {
        act::PathDiscretization p(1, n);
        for (int i = 0; i <= n; ++i) {
            auto g = cf::geodesic_quadratic(xs, ys, w.t, w.s, static_cast<double>(i) / n, well);
            p.node(i)[0] = g[0];
        }
        return act::sup_norm(act::el_residual(p, w, quad));
    };
    double r50 = sampled_residual(50);
    double r100 = sampled_residual(100);
    double r200 = sampled_residual(200);
    CHECK(r50 / r100 == Catch::Approx(4.0).margin(0.4));
    CHECK(r100 / r200 == Catch::Approx(4.0).margin(0.4));
}

TEST_CASE("solution is a local minimum under node perturbations") {
    auto v = expr::field_from_source("sin(x1) + 2", 1);
    act::TimeWindow w(1.0, 0.5);
    const double xs[] = {2.0};
    auto res = act::solve_geodesic(xs, kY0, w, v);
    REQUIRE(res.status == act::SolveStatus::converged);
    Rng rng(7u);
    for (int rep = 0; rep < 20; ++rep) {
        act::PathDiscretization p = res.path;
        double amp = rng.uniform(1e-4, 0.05);
        for (int i = 1; i < p.n; ++i) p.node(i)[0] += amp * rng.uniform(-1.0, 1.0);
        CHECK(act::energy(p, w, v) >= res.omega - 1e-9);
    }
}

TEST_CASE("action dominates the free action plus the potential floor") {
    // V >= m forces omega >= |x-y|^2/(4 dt) + m dt.
    auto v = expr::field_from_source("sin(x1) + 2", 1);
    act::TimeWindow w(1.0, 0.5);
    const double xs[] = {2.0};
    auto res = act::solve_geodesic(xs, kY0, w, v);
    double floor = 4.0 / (4.0 * w.dt()) + 1.0 * w.dt();
    CHECK(res.omega >= floor - 1e-9);

    auto quad = quad_field();
    auto res2 = act::solve_geodesic(kX1, kY0, w, quad);
    CHECK(res2.omega >= 1.0 / (4.0 * w.dt()) - 1e-12);
}

TEST_CASE("even potentials give a mirror-symmetric action") {
    auto v = expr::field_from_source("cos(x1) + 2", 1);
    act::TimeWindow w(1.0, 0.5);
    const double xa[] = {1.3};
    const double ya[] = {-0.2};
    const double xb[] = {-1.3};
    const double yb[] = {0.2};
    auto ra = act::solve_geodesic(xa, ya, w, v);
    auto rb = act::solve_geodesic(xb, yb, w, v);
    CHECK(ra.omega == Catch::Approx(rb.omega).margin(1e-12));
}

TEST_CASE("action depends on the window only through its length") {
    auto quad = quad_field();
    const double xs[] = {0.9};
    const double ys[] = {-0.3};
    auto ra = act::solve_geodesic(xs, ys, act::TimeWindow(1.0, 0.5), quad);
    auto rb = act::solve_geodesic(xs, ys, act::TimeWindow(0.6, 0.1), quad);
    CHECK(ra.omega == rb.omega);
}

TEST_CASE("shooting agrees with the direct solver") {
    act::GeodesicOptions sh;
    sh.method = act::SolveMethod::shooting;
    act::TimeWindow w(1.0, 0.5);

    auto quad = quad_field();
    auto a = act::solve_geodesic(kX1, kY0, w, quad, sh);
    CHECK(a.status == act::SolveStatus::converged);
    CHECK(a.method == act::SolveMethod::shooting);
    CHECK(a.omega == Catch::Approx(cf::omega_quadratic(kX1, kY0, 1.0, 0.5)).margin(1e-5));

    auto trig = expr::field_from_source("sin(x1) + 2", 1);
    const double xs[] = {2.0};
    auto b_direct = act::solve_geodesic(xs, kY0, w, trig);
    auto b_shoot = act::solve_geodesic(xs, kY0, w, trig, sh);
    REQUIRE(b_shoot.status == act::SolveStatus::converged);
    CHECK(b_shoot.omega == Catch::Approx(b_direct.omega).margin(1e-6));
}

TEST_CASE("shooting falls back to the direct method on blow-up") {
    auto steep = expr::field_from_source("exp(4 * x1)", 1);
    act::GeodesicOptions sh;
    sh.method = act::SolveMethod::shooting;
    act::TimeWindow w(2.5, 0.5);
    const double xs[] = {3.0};
    auto res = act::solve_geodesic(xs, kY0, w, steep, sh);
    CHECK(res.status == act::SolveStatus::fallback_direct);
    CHECK(res.method == act::SolveMethod::direct);
    auto direct = act::solve_geodesic(xs, kY0, w, steep);
    CHECK(res.omega == Catch::Approx(direct.omega).margin(1e-12));
}

TEST_CASE("multistart finds the off-axis detour past a bump") {
    auto bump = expr::field_from_source("20 * exp(-8 * (x1^2 + x2^2))", 2);
    act::TimeWindow w(1.0, 0.5);
    const double xs[] = {1.5, 0.0};
    const double ys[] = {-1.5, 0.0};
    auto plain = act::solve_geodesic(xs, ys, w, bump);
    act::GeodesicOptions opt;
    opt.multistart = true;
    auto multi = act::solve_geodesic(xs, ys, w, bump, opt);
    CHECK(multi.omega <= plain.omega + 1e-12);
    CHECK(multi.multimodal);
    CHECK(std::fabs(multi.omega - plain.omega) > 1e-3);
}

TEST_CASE("lattice oracle: free motion on an aligned dyadic lattice is exact") {
    auto zero = expr::field_from_source("0", 1);
    act::TimeWindow w(1.0, 0.5);
    act::DpLattice lat{-2.0, 2.0, 129, 16};
    // Step budget divides the hop count, so quantization cost vanishes.
    CHECK(act::omega_oracle_dp(1.0, 0.0, w, zero, lat) == Catch::Approx(0.5).margin(1e-12));

    // A 101-point lattice cannot split 25 hops into 16 even moves; the
    // leftover r(k-r) h^2 / (4 dt) shows up exactly: r = 9 gives 0.0504.
    act::DpLattice coarse{-2.0, 2.0, 101, 16};
    double v = act::omega_oracle_dp(1.0, 0.0, w, zero, coarse);
    CHECK(v == Catch::Approx(0.5504).margin(1e-9));
    CHECK(v >= 0.5);
}

TEST_CASE("lattice oracle brackets the solver on a quadratic well") {
    auto quad = quad_field();
    act::TimeWindow w(1.0, 0.5);
    act::DpLattice lat{-2.0, 2.0, 1601, 16};
    double dp = act::omega_oracle_dp(1.0, 0.0, w, quad, lat);
    auto res = act::solve_geodesic(kX1, kY0, w, quad);
    CHECK(dp == Catch::Approx(res.omega).margin(5e-3));
}

TEST_CASE("lattice oracle rejects off-lattice endpoints and bad input") {
    auto zero = expr::field_from_source("0", 1);
    act::TimeWindow w(1.0, 0.5);
    act::DpLattice lat{-2.0, 2.0, 1601, 16};
    CHECK_THROWS_AS(act::omega_oracle_dp(1.0, 1e-4, w, zero, lat), std::invalid_argument);
    CHECK_THROWS_AS(act::omega_oracle_dp(1.0, 0.0, w, zero, act::DpLattice{2.0, -2.0, 101, 16}),
                    std::invalid_argument);
    auto v2 = expr::field_from_source("x1^2 + x2^2", 2);
    CHECK_THROWS_AS(act::omega_oracle_dp(1.0, 0.0, w, v2, lat), std::invalid_argument);
}

TEST_CASE("finite-difference derivatives match the free closed form") {
    auto zero = expr::field_from_source("0", 1);
    act::TimeWindow w(1.0, 0.5);
    auto fd = act::omega_derivatives(kX1, kY0, w, zero);
    auto exact = cf::omega_heat_derivatives(kX1, kY0, 1.0, 0.5);
    CHECK(fd.dt == Catch::Approx(exact.dt).margin(1e-5));
    CHECK(fd.ds == Catch::Approx(exact.ds).margin(1e-5));
    CHECK(fd.grad_x[0] == Catch::Approx(exact.grad_x[0]).margin(1e-9));
    CHECK(fd.grad_y[0] == Catch::Approx(exact.grad_y[0]).margin(1e-9));
    CHECK(fd.lap_x == Catch::Approx(exact.lap_x).margin(1e-8));
    CHECK(fd.lap_y == Catch::Approx(exact.lap_y).margin(1e-8));
    CHECK(fd.mixed_sum == Catch::Approx(exact.mixed_sum).margin(1e-8));
}

TEST_CASE("finite-difference derivatives match the quadratic closed form") {
    auto quad = quad_field();
    cf::QuadraticWell well;
    act::TimeWindow w(1.0, 0.5);
    const double xs[] = {0.8};
    const double ys[] = {-0.4};
    auto fd = act::omega_derivatives(xs, ys, w, quad);
    auto exact = cf::omega_quadratic_derivatives(xs, ys, 1.0, 0.5, well);
    CHECK(fd.dt == Catch::Approx(exact.dt).margin(1e-4));
    CHECK(fd.ds == Catch::Approx(exact.ds).margin(1e-4));
    CHECK(fd.grad_x[0] == Catch::Approx(exact.grad_x[0]).margin(1e-5));
    CHECK(fd.grad_y[0] == Catch::Approx(exact.grad_y[0]).margin(1e-5));
    CHECK(fd.lap_x == Catch::Approx(exact.lap_x).margin(1e-4));
    CHECK(fd.lap_y == Catch::Approx(exact.lap_y).margin(1e-4));
    CHECK(fd.mixed_sum == Catch::Approx(exact.mixed_sum).margin(1e-4));

    // The eikonal identities close the loop between time and space slopes.
    double vx = quad.value(xs);
    double vy = quad.value(ys);
    CHECK(fd.dt + fd.grad_x[0] * fd.grad_x[0] == Catch::Approx(vx).margin(1e-4));
    CHECK(fd.ds - fd.grad_y[0] * fd.grad_y[0] == Catch::Approx(-vy).margin(1e-4));
}

TEST_CASE("numeric provider wraps the solver consistently") {
    auto quad = quad_field();
    auto prov = act::numeric_omega_provider(quad);
    CHECK_FALSE(prov.analytic);
    CHECK(prov.smooth);
    CHECK(prov.dim == 1);
    double v = prov.value(kX1, kY0, 1.0, 0.5);
    CHECK(v == Catch::Approx(cf::omega_quadratic(kX1, kY0, 1.0, 0.5)).margin(1e-5));
    auto der = prov.derivatives(kX1, kY0, 1.0, 0.5);
    CHECK(der.grad_x[0] ==
          Catch::Approx(cf::omega_quadratic_derivatives(kX1, kY0, 1.0, 0.5).grad_x[0])
              .margin(1e-5));
}

TEST_CASE("derivative stencils run identically across job counts") {
    auto quad = quad_field();
    act::TimeWindow w(1.0, 0.5);
    act::DerivativeOptions one;
    act::DerivativeOptions four;
    four.jobs = 4;
    auto a = act::omega_derivatives(kX1, kY0, w, quad, {}, one);
    auto b = act::omega_derivatives(kX1, kY0, w, quad, {}, four);
    CHECK(a.dt == b.dt);
    CHECK(a.lap_x == b.lap_x);
    CHECK(a.mixed_sum == b.mixed_sum);
}
