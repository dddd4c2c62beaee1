#include <catch2/catch_amalgamated.hpp>

#include "harnack/expr.hpp"

using namespace harnack;
using namespace harnack::expr;

namespace {

double fd_gradient(const ScalarField& sf, std::vector<double> x, int axis, double h) {
    x[static_cast<std::size_t>(axis)] += h;
    double up = sf.value(x);
    x[static_cast<std::size_t>(axis)] -= 2.0 * h;
    double dn = sf.value(x);
    return (up - dn) / (2.0 * h);
}

double fd_laplacian(const ScalarField& sf, const std::vector<double>& x, double h) {
    double acc = 0.0;
    double mid = sf.value(x);
    for (int a = 0; a < sf.dim; ++a) {
        std::vector<double> p = x;
        p[static_cast<std::size_t>(a)] += h;
        double up = sf.value(p);
        p[static_cast<std::size_t>(a)] -= 2.0 * h;
        double dn = sf.value(p);
        acc += (up - 2.0 * mid + dn) / (h * h);
    }
    return acc;
}

}  // namespace

TEST_CASE("quadratic well in one variable differentiates to constant curvature") {
    auto pe = parse_potential("x1^2", 1);
    auto sf = differentiate(pe);
    std::vector<double> x{1.7};
    CHECK(sf.value(x) == Catch::Approx(1.7 * 1.7).epsilon(1e-15));
    CHECK(sf.laplacian(x) == Catch::Approx(2.0).margin(1e-15));
    CHECK(print(sf.grad[0]) == "(2 * x1)");
}

TEST_CASE("isotropic quadratic well in two variables has constant Laplacian 4") {
    auto sf = field_from_source("x1^2 + x2^2", 2);
    std::vector<double> x{0.3, -2.0};
    CHECK(sf.laplacian(x) == Catch::Approx(4.0).margin(1e-15));
    CHECK(sf.lap->kind == Kind::number);
}

TEST_CASE("shifted sine potential: gradient and Laplacian") {
    auto sf = field_from_source("sin(x1) + 2", 1);
    std::vector<double> g(1);
    for (double xv : {-2.5, -0.3, 0.0, 1.1, 3.0}) {
        std::vector<double> x{xv};
        sf.gradient(x, g);
        CHECK(g[0] == Catch::Approx(std::cos(xv)).margin(1e-14));
        CHECK(sf.laplacian(x) == Catch::Approx(-std::sin(xv)).margin(1e-14));
        CHECK(std::fabs(sf.laplacian(x)) <= 1.0 + 1e-15);
    }
}

TEST_CASE("evaluation matches a hand-coded Gaussian bump") {
    auto pe = parse_potential("exp(-(x1^2))", 1);
    for (double xv : {-1.5, 0.0, 0.25, 2.0}) {
        std::vector<double> x{xv};
        CHECK(pe(x) == Catch::Approx(std::exp(-xv * xv)).epsilon(1e-15));
    }
}

TEST_CASE("dangling operator reports the failing offset") {
    try {
        (void)parse_potential("x1 +", 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset == 4);
    }
}

TEST_CASE("parse failures carry positions and reasons") {
    CHECK_THROWS_AS(parse_potential("x2", 1), ParseError);
    CHECK_THROWS_AS(parse_potential("x1^2.5", 1), ParseError);
    CHECK_THROWS_AS(parse_potential("foo(x1)", 1), ParseError);
    CHECK_THROWS_AS(parse_potential("(x1", 1), ParseError);
    CHECK_THROWS_AS(parse_potential("x1 2", 1), ParseError);
    CHECK_THROWS_AS(parse_potential("", 1), ParseError);
}

TEST_CASE("absolute value and square root are flagged non-smooth") {
    auto pe = parse_potential("abs(x1)", 1);
    CHECK_FALSE(pe.smooth);
    REQUIRE_FALSE(pe.warnings.empty());
    auto pe2 = parse_potential("sqrt(x1^2 + 1)", 1);
    CHECK_FALSE(pe2.smooth);
    auto pe3 = parse_potential("x1^2", 1);
    CHECK(pe3.smooth);
    CHECK(pe3.warnings.empty());
}

TEST_CASE("symbolic gradient agrees with central differences at random points") {
    struct Case {
        const char* src;
        int dim;
    };
    const Case cases[] = {
        {"x1^2", 1},
        {"sin(x1) + 2", 1},
        {"exp(-(x1^2)) * cos(x1)", 1},
        {"x1^3 - 2*x1 + 0.5", 1},
        {"x1^2 + x2^2", 2},
        {"sin(x1)*cos(x2) + 3", 2},
        {"exp(-(x1^2 + x2^2))", 2},
        {"tanh(x1) + cosh(x2) / 10", 2},
    };
    Rng rng(20260814u);
    for (const auto& c : cases) {
        auto sf = field_from_source(c.src, c.dim);
        std::vector<double> g(static_cast<std::size_t>(c.dim));
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(static_cast<std::size_t>(c.dim));
            for (auto& v : x) v = rng.uniform(-5.0, 5.0);
            sf.gradient(x, g);
            for (int a = 0; a < c.dim; ++a) {
                double fd = fd_gradient(sf, x, a, 1e-5);
                double tol = 1e-6 * (1.0 + std::fabs(g[static_cast<std::size_t>(a)]));
                INFO(c.src << " axis " << a << " at x[0]=" << x[0]);
                CHECK(std::fabs(fd - g[static_cast<std::size_t>(a)]) <= tol);
            }
        }
    }
}

TEST_CASE("symbolic Laplacian agrees with second differences at random points") {
    const char* srcs1[] = {"x1^2", "sin(x1) + 2", "x1^3 - 2*x1 + 0.5"};
    const char* srcs2[] = {"x1^2 + x2^2", "sin(x1)*cos(x2) + 3"};
    Rng rng(77031u);
    auto run = [&](const char* src, int dim) {
        auto sf = field_from_source(src, dim);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (auto& v : x) v = rng.uniform(-5.0, 5.0);
            double lap = sf.laplacian(x);
            double fd = fd_laplacian(sf, x, 1e-4);
            INFO(src);
            CHECK(std::fabs(fd - lap) <= 1e-4 * (1.0 + std::fabs(lap)));
        }
    };
    for (const char* s : srcs1) run(s, 1);
    for (const char* s : srcs2) run(s, 2);
}

TEST_CASE("printing then reparsing is a fixed point") {
    const char* srcs[] = {
        "x1^2",
        "sin(x1) + 2",
        "-x1 + 3.25 * x2",
        "exp(-(x1^2 + x2^2)) / (1 + x1^2)",
        "sqrt(x1^2 + 1) - tanh(x2)",
        "2.5e-3 * x1^3",
    };
    for (const char* s : srcs) {
        auto first = parse_potential(s, 2);
        auto second = parse_potential(first.canonical, 2);
        INFO(s << " -> " << first.canonical);
        CHECK(structurally_equal(first.ast, second.ast));
        CHECK(first.canonical == second.canonical);
    }
}

TEST_CASE("constant shifts do not change derivative trees") {
    auto base = differentiate(parse_potential("x1^2", 1));
    auto shifted = differentiate(parse_potential("x1^2 + 3.5", 1));
    CHECK(structurally_equal(base.grad[0], shifted.grad[0]));
    CHECK(structurally_equal(base.lap, shifted.lap));

    auto b2 = differentiate(parse_potential("sin(x1)*cos(x2)", 2));
    auto s2 = differentiate(parse_potential("sin(x1)*cos(x2) + 100", 2));
    for (int a = 0; a < 2; ++a) CHECK(structurally_equal(b2.grad[a], s2.grad[a]));
    CHECK(structurally_equal(b2.lap, s2.lap));
}

TEST_CASE("lower bound shift covers the sampled minimum") {
    auto flat = parse_potential("x1^2", 1);
    CHECK(flat.lower_bound_shift == 0.0);

    auto tilted = parse_potential("x1", 1);  // min on [-5,5] is -5
    CHECK(tilted.lower_bound_shift == Catch::Approx(5.0).margin(1e-6));

    auto well = parse_potential("x1^2 - 2", 1);
    CHECK(well.lower_bound_shift == Catch::Approx(2.0).margin(1e-6));

    // Shifting by the reported amount makes every sample nonnegative.
    auto sf = differentiate(tilted);
    for (double xv : linspace(-5.0, 5.0, 201))
        CHECK(sf.value(std::vector<double>{xv}) + tilted.lower_bound_shift >= 0.0);
}

TEST_CASE("Hessian trees match mixed second differences") {
    auto sf = field_from_source("sin(x1)*cos(x2) + x1^2*x2", 2);
    std::vector<double> H(4);
    Rng rng(951u);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        sf.hessian(x, H);
        CHECK(H[1] == Catch::Approx(H[2]).margin(1e-14));
        const double h = 1e-4;
        std::vector<double> pp{x[0] + h, x[1] + h}, pm{x[0] + h, x[1] - h},
            mp{x[0] - h, x[1] + h}, mm{x[0] - h, x[1] - h};
        double fd = (sf.value(pp) - sf.value(pm) - sf.value(mp) + sf.value(mm)) / (4 * h * h);
        CHECK(std::fabs(fd - H[1]) <= 1e-4 * (1.0 + std::fabs(H[1])));
    }
}

TEST_CASE("integer powers evaluate by repeated multiplication") {
    auto pe = parse_potential("x1^7", 1);
    std::vector<double> x{-1.3};
    CHECK(pe(x) == Catch::Approx(-std::pow(1.3, 7.0)).epsilon(1e-14));
    auto inv = parse_potential("(1 + x1^2)^-1", 1);
    CHECK(inv(x) == Catch::Approx(1.0 / (1.0 + 1.69)).epsilon(1e-14));
}
