// Harnack scans, sharpness location, differential Harnack, nested domains.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "harnack/verify.hpp"

using namespace harnack;
using verify::KernelSpec;
using verify::ScanConfig;

namespace {

ScanConfig kernel_scan_config(int dim) {
    ScanConfig cfg;
    cfg.count = 10000;
    cfg.seed = 20260814;
    cfg.sample_box = Box::cube(dim, -3.0, 3.0);
    cfg.t_min = 0.1;
    cfg.t_max = 2.0;
    cfg.tolerance = 1e-9;
    return cfg;
}

}  // namespace

TEST_CASE("heat kernel satisfies its own Harnack bound") {
    KernelSpec k;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    auto rate = closedform::rate_pair_heat(1);
    auto omega = closedform::heat_omega_provider(1);
    auto rep = verify::harnack_scan(view, rate, omega, kernel_scan_config(1));

    CHECK(rep.quadruple_count + rep.skipped == 10000);
    CHECK(rep.skipped == 0);
    CHECK(rep.min_ratio >= 1.0 - 1e-9);
    CHECK(rep.violations.empty());
    CHECK(rep.pass());

    // Equality on the characteristic set s x = t y.
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.uniform(-3.0, 3.0)};
        double t = rng.uniform(0.3, 2.0);
        double s = rng.uniform(0.1, 0.9) * t;
        auto y = closedform::heat_characteristic_y(x, t, s);
        double lr = verify::harnack_log_ratio(view, rate, omega, x, y, t, s);
        CHECK(std::fabs(std::exp(lr) - 1.0) <= 1e-10);
    }
}

TEST_CASE("mehler kernel satisfies the quadratic-rate Harnack bound") {
    KernelSpec k;
    k.kind = KernelSpec::Kind::mehler;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    auto rate = closedform::rate_pair_quadratic(1, 1.0);
    auto omega = closedform::quadratic_omega_provider(1);
    auto rep = verify::harnack_scan(view, rate, omega, kernel_scan_config(1));

    CHECK(rep.skipped == 0);
    CHECK(rep.min_ratio >= 1.0 - 1e-9);
    CHECK(rep.pass());

    // Equality on the characteristic set sinh(2s) x = sinh(2t) y.
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.uniform(-3.0, 3.0)};
        double t = rng.uniform(0.3, 2.0);
        double s = rng.uniform(0.1, 0.9) * t;
        auto y = closedform::quadratic_characteristic_y(x, t, s, k.well);
        double lr = verify::harnack_log_ratio(view, rate, omega, x, y, t, s);
        CHECK(std::fabs(std::exp(lr) - 1.0) <= 1e-8);
    }
}

TEST_CASE("constant solution keeps a strict margin") {
    // u constant solves the free equation; the ratio (t/s)^{d/2} e^{omega}
    // exceeds 1 away from the degenerate corner x=y, t=s.
    verify::SolutionView view;
    view.dim = 1;
    view.domain = Box::cube(1, -1.0, 1.0);
    view.log_u = [](std::span<const double>, double) { return std::log(4.2); };
    ScanConfig cfg = kernel_scan_config(1);
    cfg.sample_box = Box::cube(1, -1.0, 1.0);
    auto rep = verify::harnack_scan(view, closedform::rate_pair_heat(1),
                                    closedform::heat_omega_provider(1), cfg);
    CHECK(rep.min_ratio > 1.0);
    CHECK(rep.pass());
}

TEST_CASE("sharpness search recovers the characteristic minimizer") {
    auto heat_rate = closedform::rate_pair_heat(1);
    auto heat_omega = closedform::heat_omega_provider(1);
    KernelSpec heat;

    SECTION("heat kernel") {
        std::vector<double> x{1.0};
        auto res = verify::sharpness_locate(heat, heat_rate, heat_omega, x, 1.0, 0.5);
        CHECK(std::fabs(res.q.y[0] - 0.5) <= 1e-6);
        CHECK(std::fabs(res.ratio - 1.0) <= 1e-8);
        CHECK_FALSE(res.at_bound);
    }

    SECTION("mehler kernel") {
        KernelSpec k;
        k.kind = KernelSpec::Kind::mehler;
        auto rate = closedform::rate_pair_quadratic(1, 1.0);
        auto omega = closedform::quadratic_omega_provider(1);
        std::vector<double> x{1.0};
        auto res = verify::sharpness_locate(k, rate, omega, x, 0.5, 0.25);
        const double ystar = std::sinh(0.5) / std::sinh(1.0);
        CHECK(std::fabs(res.q.y[0] - ystar) <= 1e-6);
        CHECK(std::fabs(res.q.y[0] - 0.443409441985037) <= 1e-6);
        CHECK(std::fabs(res.ratio - 1.0) <= 1e-8);
        CHECK_FALSE(res.at_bound);
    }

    SECTION("x at the well center pins y to the center") {
        std::vector<double> x{0.0};
        auto res = verify::sharpness_locate(heat, heat_rate, heat_omega, x, 1.0, 0.5);
        CHECK(std::fabs(res.q.y[0]) <= 1e-9);
        CHECK(std::fabs(res.ratio - 1.0) <= 1e-10);

        KernelSpec m;
        m.kind = KernelSpec::Kind::mehler;
        auto resm = verify::sharpness_locate(m, closedform::rate_pair_quadratic(1, 1.0),
                                             closedform::quadratic_omega_provider(1), x,
                                             1.0, 0.5);
        CHECK(std::fabs(resm.q.y[0]) <= 1e-9);
        CHECK(std::fabs(resm.ratio - 1.0) <= 1e-10);
    }

    SECTION("batch variant carries the window through") {
        std::vector<std::vector<double>> xs{{-2.0}, {0.25}, {1.5}};
        auto out = verify::sharpness_scan(heat, heat_rate, heat_omega, xs, 2.0, 0.5);
        REQUIRE(out.size() == 3);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(std::fabs(out[i].q.y[0] - 0.25 * xs[i][0]) <= 1e-6);
            CHECK(std::fabs(out[i].ratio - 1.0) <= 1e-8);
        }
    }
}

TEST_CASE("differential Harnack is exact on kernels") {
    std::vector<double> times{0.2, 0.5, 1.0, 2.0};

    SECTION("heat, d=1 and d=2") {
        for (int d : {1, 2}) {
            KernelSpec k;
            k.dim = d;
            auto rep =
                verify::differential_harnack(k, closedform::rate_pair_heat(d), times);
            CHECK(rep.verdict == conditions::Verdict::holds_with_equality);
            CHECK(rep.max_abs_residual <= 1e-10);
        }
    }

    SECTION("mehler, matched quadratic rate") {
        for (int d : {1, 2}) {
            KernelSpec k;
            k.kind = KernelSpec::Kind::mehler;
            k.dim = d;
            auto rep = verify::differential_harnack(
                k, closedform::rate_pair_quadratic(d, 1.0), times);
            CHECK(rep.verdict == conditions::Verdict::holds_with_equality);
            CHECK(rep.max_abs_residual <= 1e-10);
        }
    }

    SECTION("mismatched power rate is flagged") {
        KernelSpec k;
        k.kind = KernelSpec::Kind::mehler;
        auto wrong = closedform::with_power_beta(closedform::rate_pair_quadratic(1, 1.0),
                                                 1.0);
        auto rep = verify::differential_harnack(k, wrong, times);
        CHECK(rep.verdict == conditions::Verdict::violated);
        CHECK(rep.worst_residual < -0.4);  // 1/t - coth(2t) at t=2
    }
}

TEST_CASE("differential Harnack on a grid solution") {
    pde::BoxGrid grid;
    grid.box = Box::cube(1, -8.0, 8.0);
    grid.nx = 321;
    grid.dt = 1e-3;
    grid.t_end = 1.0;
    grid.snapshot_times = {0.2, 0.5, 1.0};
    auto v = expr::field_from_source("x1 * x1", 1);
    auto sol = pde::solve(v, pde::initial_gaussian({0.5}, 1.0), grid);

    conditions::CheckOptions opt;
    opt.violation_tol = 1e-3;
    auto rep = verify::differential_harnack(sol, closedform::rate_pair_quadratic(1, 1.0),
                                            0.1, 2, nullptr, opt);
    INFO("worst residual " << rep.worst_residual);
    CHECK(rep.verdict != conditions::Verdict::violated);
    CHECK(rep.worst_residual >= -1e-3);
    CHECK(rep.sample_count > 900);
}

TEST_CASE("differential Harnack for the drift form") {
    // d/dt u = Lap u + 2 x . grad u - x^2 u; transformed potential 2 x^2 + 1.
    pde::BoxGrid grid;
    grid.box = Box::cube(1, -8.0, 8.0);
    grid.nx = 321;
    grid.dt = 1e-3;
    grid.t_end = 1.0;
    grid.snapshot_times = {0.2, 0.5, 1.0};
    auto f = expr::parse_potential("-0.5 * x1^2", 1);
    auto v = expr::parse_potential("x1^2", 1);
    auto sol = pde::solve_drift(f, v, pde::initial_gaussian({0.5}, 1.0), grid);

    auto f_field = expr::differentiate(f);
    conditions::CheckOptions opt;
    opt.violation_tol = 1e-3;
    auto rep = verify::differential_harnack(
        sol, closedform::rate_pair_quadratic(1, std::sqrt(2.0)), 0.1, 2, &f_field, opt);
    INFO("worst residual " << rep.worst_residual);
    CHECK(rep.verdict != conditions::Verdict::violated);
    CHECK(rep.worst_residual >= -1e-3);
}

TEST_CASE("grid-backed scan over a quadratic well passes at solver tolerance") {
    pde::BoxGrid grid;
    grid.box = Box::cube(1, -8.0, 8.0);
    grid.nx = 321;
    grid.dt = 1e-3;
    grid.t_end = 1.0;
    grid.snapshot_times = {0.2, 0.5, 1.0};
    auto v = expr::field_from_source("x1 * x1", 1);
    auto sol = pde::solve(v, pde::initial_gaussian({0.5}, 1.0), grid);
    auto view = verify::view_of(sol);

    ScanConfig cfg;
    cfg.count = 500;
    cfg.seed = 20260814;
    cfg.sample_box = Box::cube(1, -3.0, 3.0);
    cfg.tolerance = 2e-3;
    auto rep = verify::harnack_scan(view, closedform::rate_pair_quadratic(1, 1.0),
                                    closedform::quadratic_omega_provider(1), cfg);
    INFO("min ratio " << rep.min_ratio);
    CHECK(rep.skipped == 0);
    CHECK(rep.min_ratio >= 1.0 - 2e-3);
    CHECK(rep.pass());
}

TEST_CASE("drift scan matches the transformed bound") {
    pde::BoxGrid grid;
    grid.box = Box::cube(1, -8.0, 8.0);
    grid.nx = 321;
    grid.dt = 1e-3;
    grid.t_end = 1.0;
    grid.snapshot_times = {0.2, 0.5, 1.0};
    auto f = expr::parse_potential("-0.5 * x1^2", 1);
    auto v = expr::parse_potential("x1^2", 1);
    auto sol = pde::solve_drift(f, v, pde::initial_gaussian({0.5}, 1.0), grid);
    auto view = verify::view_of(sol);
    auto f_field = expr::differentiate(f);

    closedform::QuadraticWell well;
    well.c1 = std::sqrt(2.0);
    well.c2 = 1.0;
    ScanConfig cfg;
    cfg.count = 500;
    cfg.seed = 20260814;
    cfg.sample_box = Box::cube(1, -3.0, 3.0);
    cfg.tolerance = 2e-3;
    auto rep = verify::harnack_scan(view, closedform::rate_pair_quadratic(1, well.c1),
                                    closedform::quadratic_omega_provider(1, well), cfg,
                                    nullptr, &f_field);
    INFO("min ratio " << rep.min_ratio);
    CHECK(rep.skipped == 0);
    CHECK(rep.min_ratio >= 1.0 - 2e-3);
    CHECK(rep.pass());
}

TEST_CASE("recheck view separates discretization artifacts from violations") {
    // Coarse view: kernel times e^{-0.1 t}, a time decay that cannot cancel
    // from the two sides of the ratio; "fine" view: the exact kernel. All
    // tentative violations must clear and the aggregates use the fine values.
    KernelSpec k;
    k.kind = KernelSpec::Kind::mehler;
    auto exact = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    verify::SolutionView dented = exact;
    dented.log_u = [k](std::span<const double> x, double t) {
        return k.log_value(x, t) - 0.1 * t;
    };

    auto rate = closedform::rate_pair_quadratic(1, 1.0);
    auto omega = closedform::quadratic_omega_provider(1);
    ScanConfig cfg = kernel_scan_config(1);
    cfg.count = 4000;
    cfg.tolerance = 5e-3;

    auto broken = verify::harnack_scan(dented, rate, omega, cfg);
    REQUIRE_FALSE(broken.violations.empty());
    REQUIRE_FALSE(broken.pass());

    auto cured = verify::harnack_scan(dented, rate, omega, cfg, &exact);
    CHECK(cured.violations.empty());
    CHECK(cured.recheck_cleared == static_cast<long>(broken.violations.size()));
    CHECK(cured.pass());

    // Identical recheck view clears nothing.
    auto same = verify::harnack_scan(dented, rate, omega, cfg, &dented);
    CHECK(same.recheck_cleared == 0);
    CHECK(same.violations.size() == broken.violations.size());
}

TEST_CASE("scan reports are reproducible and seed-sensitive") {
    KernelSpec k;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    auto rate = closedform::rate_pair_heat(1);
    auto omega = closedform::heat_omega_provider(1);
    ScanConfig cfg = kernel_scan_config(1);
    cfg.count = 2000;

    auto a = verify::harnack_scan(view, rate, omega, cfg);
    auto b = verify::harnack_scan(view, rate, omega, cfg);
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.min_ratio == b.min_ratio);
    CHECK(a.min_log_ratio == b.min_log_ratio);
    CHECK(a.min_point.x == b.min_point.x);
    CHECK(a.min_point.t == b.min_point.t);

    ScanConfig jig = cfg;
    jig.jobs = 3;
    auto c = verify::harnack_scan(view, rate, omega, jig);
    CHECK(c.min_ratio == a.min_ratio);
    CHECK(c.config_hash == a.config_hash);  // jobs do not shape the experiment

    ScanConfig other = cfg;
    other.seed = 99;
    auto d = verify::harnack_scan(view, rate, omega, other);
    CHECK(d.config_hash != a.config_hash);
}

TEST_CASE("shift by a constant cancels out of every ratio") {
    // u -> u e^{-alpha t}, V -> V + alpha, omega -> omega + alpha (t - s).
    const double alpha = 0.7;
    KernelSpec k;
    auto base = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    verify::SolutionView shifted = base;
    shifted.log_u = [k, alpha](std::span<const double> x, double t) {
        return k.log_value(x, t) - alpha * t;
    };
    OmegaProvider omega = closedform::heat_omega_provider(1);
    OmegaProvider shifted_omega = omega;
    shifted_omega.value = [alpha](std::span<const double> x, std::span<const double> y,
                                  double t, double s) {
        return closedform::omega_heat(x, y, t, s) + alpha * (t - s);
    };

    auto rate = closedform::rate_pair_heat(1);
    ScanConfig cfg = kernel_scan_config(1);
    cfg.count = 2000;
    cfg.keep_samples = true;
    auto a = verify::harnack_scan(base, rate, omega, cfg);
    auto b = verify::harnack_scan(shifted, rate, shifted_omega, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(std::fabs(a.samples[i].log_ratio - b.samples[i].log_ratio) <= 1e-12);
    CHECK(std::fabs(a.min_log_ratio - b.min_log_ratio) <= 1e-12);
}

TEST_CASE("violation set shrinks as the tolerance grows") {
    // Wrong decay power on the mehler kernel produces genuine violations.
    KernelSpec k;
    k.kind = KernelSpec::Kind::mehler;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    auto wrong = closedform::with_power_beta(closedform::rate_pair_quadratic(1, 1.0), 1.0);
    auto omega = closedform::quadratic_omega_provider(1);

    ScanConfig tight = kernel_scan_config(1);
    tight.count = 4000;
    tight.tolerance = 1e-6;
    ScanConfig loose = tight;
    loose.tolerance = 0.1;

    auto a = verify::harnack_scan(view, wrong, omega, tight);
    auto b = verify::harnack_scan(view, wrong, omega, loose);
    REQUIRE_FALSE(a.violations.empty());
    REQUIRE_FALSE(b.violations.empty());
    CHECK(b.violations.size() < a.violations.size());
    CHECK_FALSE(a.pass());
    CHECK_FALSE(b.pass());

    // Every loose violation appears among the tight ones (same seed, same
    // quadruples, lower bar).
    std::size_t ia = 0;
    for (const auto& smp : b.violations) {
        while (ia < a.violations.size() &&
               (a.violations[ia].q.t != smp.q.t || a.violations[ia].q.s != smp.q.s ||
                a.violations[ia].q.x != smp.q.x || a.violations[ia].q.y != smp.q.y))
            ++ia;
        REQUIRE(ia < a.violations.size());
        ++ia;
    }

    // Listed violations re-evaluate below threshold.
    for (const auto& smp : a.violations) CHECK(smp.ratio < 1.0 - tight.tolerance);
}

TEST_CASE("provider failures are skipped and counted") {
    KernelSpec k;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    OmegaProvider flaky = closedform::heat_omega_provider(1);
    flaky.value = [](std::span<const double> x, std::span<const double> y, double t,
                     double s) {
        if (x[0] > 0.0) throw std::runtime_error("window closed");
        return closedform::omega_heat(x, y, t, s);
    };
    ScanConfig cfg = kernel_scan_config(1);
    cfg.count = 400;
    auto rep = verify::harnack_scan(view, closedform::rate_pair_heat(1), flaky, cfg);
    CHECK(rep.skipped > 100);
    CHECK(rep.quadruple_count + rep.skipped == 400);
    CHECK(rep.min_ratio >= 1.0 - 1e-9);
}

TEST_CASE("ratio table export") {
    KernelSpec k;
    auto view = verify::view_of(k, Box::cube(1, -2.0, 2.0));
    ScanConfig cfg = kernel_scan_config(1);
    cfg.sample_box = Box::cube(1, -2.0, 2.0);
    cfg.count = 25;
    cfg.keep_samples = true;
    auto rep = verify::harnack_scan(view, closedform::rate_pair_heat(1),
                                    closedform::heat_omega_provider(1), cfg);
    REQUIRE(rep.samples.size() == 25);

    std::ostringstream os;
    verify::write_ratio_csv(os, rep);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "x1,y1,t,s,ratio");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 25);
}

TEST_CASE("nested boxes stabilize the interior solution") {
    auto v = expr::parse_potential("x1^2", 1);
    ScanConfig cfg;
    cfg.count = 200;
    cfg.seed = 20260814;
    cfg.sample_box = Box::cube(1, -2.0, 2.0);
    cfg.tolerance = 2e-3;
    auto rate = closedform::rate_pair_quadratic(1, 1.0);
    auto omega = closedform::quadratic_omega_provider(1);

    std::vector<double> halves{4.0, 6.0, 8.0};
    auto table = verify::nested_domain_probe(v, pde::initial_gaussian({0.0}, 1.0), halves,
                                             rate, omega, cfg);
    REQUIRE(table.rows.size() == 3);
    CHECK(std::isnan(table.rows[0].sup_diff));
    CHECK(table.rows[1].sup_diff > table.rows[2].sup_diff);
    CHECK(table.stabilizing);
    for (const auto& row : table.rows) {
        INFO("halfwidth " << row.halfwidth << " min ratio " << row.min_ratio);
        CHECK(row.min_ratio >= 1.0 - 2e-3);
        CHECK(row.violations == 0);
    }
}

TEST_CASE("nested boxes with zero potential give identical constants") {
    auto v = expr::parse_potential("0", 1);
    ScanConfig cfg;
    cfg.count = 100;
    cfg.seed = 3;
    cfg.sample_box = Box::cube(1, -2.0, 2.0);
    cfg.tolerance = 1e-9;
    std::vector<double> halves{4.0, 6.0};
    auto table = verify::nested_domain_probe(v, pde::initial_constant(1.0), halves,
                                             closedform::rate_pair_heat(1),
                                             closedform::heat_omega_provider(1), cfg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1].sup_diff <= 1e-12);
    for (const auto& row : table.rows) CHECK(row.min_ratio > 1.0);
}

TEST_CASE("scan input validation") {
    KernelSpec k;
    auto view = verify::view_of(k, Box::cube(1, -3.0, 3.0));
    auto rate = closedform::rate_pair_heat(1);
    auto omega = closedform::heat_omega_provider(1);

    ScanConfig cfg = kernel_scan_config(1);
    cfg.sample_box = Box::cube(2, -1.0, 1.0);
    CHECK_THROWS_AS(verify::harnack_scan(view, rate, omega, cfg), std::invalid_argument);

    cfg = kernel_scan_config(1);
    cfg.t_min = 0.0;
    CHECK_THROWS_AS(verify::harnack_scan(view, rate, omega, cfg), std::invalid_argument);

    verify::SolutionView single;
    single.dim = 1;
    single.domain = Box::cube(1, -1.0, 1.0);
    single.times = {0.5};
    single.log_u = [](std::span<const double>, double) { return 0.0; };
    cfg = kernel_scan_config(1);
    cfg.sample_box = Box::cube(1, -1.0, 1.0);
    CHECK_THROWS_AS(verify::harnack_scan(single, rate, omega, cfg), std::invalid_argument);
}
