// harnack_lab: one binary driving the library from a JSON config file.
//
// Subcommands: omega, geodesic, solve, check, verify, sharpness, nested.
// Every experiment is reproducible: the effective config (after file, env and
// flag overrides) is hashed and echoed into the outputs, and reruns with the
// same config are byte-identical. Exit codes: 0 pass, 1 failed verdict or
// solver breakdown, 2 malformed config or expression.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "harnack/action.hpp"
#include "harnack/closedform.hpp"
#include "harnack/common.hpp"
#include "harnack/conditions.hpp"
#include "harnack/expr.hpp"
#include "harnack/omega.hpp"
#include "harnack/pde.hpp"
#include "harnack/verify.hpp"

using nlohmann::json;
using namespace harnack;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- config plumbing ----

json default_config() {
    return json{
        {"potential", "0"},
        {"drift", ""},
        {"dim", 1},
        {"box", {{"halfwidth", 8.0}}},
        {"mode", "kernel"},  // verify: kernel | pde | drift
        {"kernel", "heat"},
        {"well", {{"c1", 1.0}, {"c2", 0.0}, {"center", json::array()}}},
        {"rate", {{"kind", "heat"}, {"c", 1.0}}},
        {"omega_source", "closed_heat"},
        {"solver",
         {{"nx", 161},
          {"dt", 1e-3},
          {"t_end", 1.0},
          {"snapshots", {0.2, 0.5, 1.0}},
          {"scheme", "crank_nicolson"}}},
        {"initial",
         {{"kind", "gaussian"},
          {"center", json::array()},
          {"width", 1.0},
          {"value", 1.0},
          {"source", ""},
          {"t0", 0.1}}},
        {"sampler",
         {{"count", 10000},
          {"seed", 20260814},
          {"halfwidth", 3.0},
          {"t_min", 0.1},
          {"t_max", 2.0}}},
        {"tolerances",
         {{"scan", 1e-9},
          {"sharp", 1e-6},
          {"violation", 0.0},
          {"equality", 0.0},
          {"differential", 1e-3}}},
        {"geodesic",
         {{"n", 200},
          {"tol", 1e-8},
          {"max_iter", 10000},
          {"method", "direct"},
          {"multistart", true},
          {"newton_max", 40}}},
        {"derivatives",
         {{"box_extent", 10.0}, {"space_step", 0.0}, {"time_step_rel", 1e-3}, {"order", 2}}},
        {"windows", {{1.0, 0.5}}},
        {"points", {{"x", {{1.0}}}, {"y", {{0.0}}}}},
        {"checks",
         {{"per_axis", 6},
          {"halfwidth", 1.2},
          {"ball_radius", 1.0},
          {"ball_center", json::array()},
          {"boundary_samples", 16},
          {"comparison_per_axis", 64},
          {"windows", json::array()}}},
        {"nested",
         {{"halfwidths", {4.0, 6.0, 8.0}},
          {"h", 0.05},
          {"dt", 1e-3},
          {"snapshots", {0.2, 0.5, 1.0}}}},
        {"diff_times", {0.2, 0.5, 1.0, 2.0}},
        {"diff_t_min", 0.1},
        {"recheck", true},
        {"keep_samples", false},
        {"jobs", 1},
    };
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// Flag overrides; sentinels mark "not given".
struct Flags {
    std::string config_path;
    std::string out_dir;
    std::string potential, drift, mode, rate_kind, omega_source, kernel, method;
    int dim = -1, nx = -1, jobs = -1, count = -1;
    double dt = -1.0, rate_c = -1.0, tol_scan = -1.0, tol_violation = -1.0;
    double beta_power = std::numeric_limits<double>::quiet_NaN();
    long long seed = -1;
    bool timestamp = false;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config_path, "JSON config file");
    cmd->add_option("-o,--out", f.out_dir, "output directory (default: stdout)");
    cmd->add_option("-j,--jobs", f.jobs, "worker threads, 0 = logical cores");
    cmd->add_option("--seed", f.seed, "sampler seed");
    cmd->add_option("--count", f.count, "sampler quadruple count");
    cmd->add_option("--potential", f.potential, "potential V expression");
    cmd->add_option("--drift", f.drift, "drift exponent f expression");
    cmd->add_option("--dim", f.dim, "spatial dimension (1 or 2)");
    cmd->add_option("--mode", f.mode, "verify subject: kernel | pde | drift");
    cmd->add_option("--kernel", f.kernel, "kernel kind: heat | mehler");
    cmd->add_option("--rate", f.rate_kind, "rate pair: heat | quadratic | comparison_auto");
    cmd->add_option("--rate-c", f.rate_c, "quadratic rate scale C");
    cmd->add_option("--beta-power", f.beta_power, "replace beta by tau^p (probe)");
    cmd->add_option("--omega", f.omega_source,
                    "omega source: closed_heat | closed_quadratic | numeric");
    cmd->add_option("--nx", f.nx, "grid nodes per axis");
    cmd->add_option("--dt", f.dt, "time step");
    cmd->add_option("--method", f.method, "geodesic method: direct | shooting | dp");
    cmd->add_option("--tolerance", f.tol_scan, "scan pass tolerance");
    cmd->add_option("--violation-tol", f.tol_violation, "condition violation tolerance");
    cmd->add_flag("--timestamp", f.timestamp, "include generation time in reports");
}

json effective_config(const Flags& f) {
    json cfg = default_config();
    cfg.merge_patch(load_config_file(f.config_path));
    if (const char* env = std::getenv("HARNACK_LAB_SEED")) {
        char* end = nullptr;
        unsigned long long s = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw ConfigError("HARNACK_LAB_SEED is not an unsigned integer");
        cfg["sampler"]["seed"] = s;
    }
    if (!f.potential.empty()) cfg["potential"] = f.potential;
    if (!f.drift.empty()) cfg["drift"] = f.drift;
    if (!f.mode.empty()) cfg["mode"] = f.mode;
    if (!f.kernel.empty()) cfg["kernel"] = f.kernel;
    if (!f.rate_kind.empty()) cfg["rate"]["kind"] = f.rate_kind;
    if (!f.omega_source.empty()) cfg["omega_source"] = f.omega_source;
    if (!f.method.empty()) cfg["geodesic"]["method"] = f.method;
    if (f.dim > 0) cfg["dim"] = f.dim;
    if (f.nx > 0) cfg["solver"]["nx"] = f.nx;
    if (f.dt > 0.0) cfg["solver"]["dt"] = f.dt;
    if (f.rate_c > 0.0) cfg["rate"]["c"] = f.rate_c;
    if (!std::isnan(f.beta_power)) cfg["rate"]["beta_power"] = f.beta_power;
    if (f.count > 0) cfg["sampler"]["count"] = f.count;
    if (f.seed >= 0) cfg["sampler"]["seed"] = f.seed;
    if (f.tol_scan > 0.0) cfg["tolerances"]["scan"] = f.tol_scan;
    if (f.tol_violation > 0.0) cfg["tolerances"]["violation"] = f.tol_violation;
    if (f.jobs >= 0) cfg["jobs"] = f.jobs;
    return cfg;
}

struct Context {
    json cfg;
    std::string out_dir;
    bool timestamp = false;
    int jobs = 1;
    std::string hash;
};

Context make_context(const Flags& f) {
    Context c;
    c.cfg = effective_config(f);
    c.out_dir = f.out_dir;
    c.timestamp = f.timestamp;
    int jobs = c.cfg.value("jobs", 1);
    if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    c.jobs = jobs;
    json hashed = c.cfg;
    hashed.erase("jobs");  // worker count never shapes results
    c.hash = fnv1a64_hex(hashed.dump());
    return c;
}

// ---- config readers ----

int dim_of(const Context& c) {
    int d = c.cfg.at("dim").get<int>();
    if (d < 1 || d > 2) throw ConfigError("dim must be 1 or 2");
    return d;
}

Box box_from(const json& j, int dim, double fallback_halfwidth) {
    if (j.contains("lo") && j.contains("hi")) {
        auto lo = j.at("lo").get<std::vector<double>>();
        auto hi = j.at("hi").get<std::vector<double>>();
        if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
            throw ConfigError("box lo/hi must list one bound per axis");
        return Box(std::move(lo), std::move(hi));
    }
    double h = j.value("halfwidth", fallback_halfwidth);
    if (!(h > 0.0)) throw ConfigError("box halfwidth must be positive");
    return Box::cube(dim, -h, h);
}

expr::PotentialExpr potential_of(const Context& c) {
    return expr::parse_potential(c.cfg.at("potential").get<std::string>(), dim_of(c));
}

closedform::QuadraticWell well_of(const Context& c) {
    const json& w = c.cfg.at("well");
    closedform::QuadraticWell well;
    well.c1 = w.value("c1", 1.0);
    well.c2 = w.value("c2", 0.0);
    well.a = w.value("center", std::vector<double>{});
    if (!well.a.empty() && static_cast<int>(well.a.size()) != dim_of(c))
        throw ConfigError("well center must match dim");
    return well;
}

action::GeodesicOptions gopt_of(const Context& c) {
    const json& g = c.cfg.at("geodesic");
    action::GeodesicOptions o;
    o.n = g.value("n", 200);
    o.tol = g.value("tol", 1e-8);
    o.max_iter = g.value("max_iter", 10000);
    o.multistart = g.value("multistart", true);
    o.newton_max = g.value("newton_max", 40);
    std::string m = g.value("method", "direct");
    if (m == "direct")
        o.method = action::SolveMethod::direct;
    else if (m == "shooting")
        o.method = action::SolveMethod::shooting;
    else if (m == "dp")
        o.method = action::SolveMethod::dp_oracle;
    else
        throw ConfigError("geodesic method must be direct, shooting or dp");
    return o;
}

action::DerivativeOptions dopt_of(const Context& c) {
    const json& d = c.cfg.at("derivatives");
    action::DerivativeOptions o;
    o.box_extent = d.value("box_extent", 10.0);
    o.space_step = d.value("space_step", 0.0);
    o.time_step_rel = d.value("time_step_rel", 1e-3);
    o.order = d.value("order", 2);
    o.jobs = c.jobs;
    return o;
}

std::vector<std::pair<double, double>> windows_of(const Context& c) {
    std::vector<std::pair<double, double>> out;
    for (const auto& w : c.cfg.at("windows")) {
        if (!w.is_array() || w.size() != 2) throw ConfigError("windows entries are [t, s]");
        out.emplace_back(w[0].get<double>(), w[1].get<double>());
    }
    if (out.empty()) throw ConfigError("at least one (t, s) window is required");
    return out;
}

std::vector<std::vector<double>> point_list(const Context& c, const char* key) {
    std::vector<std::vector<double>> pts =
        c.cfg.at("points").at(key).get<std::vector<std::vector<double>>>();
    for (const auto& p : pts)
        if (static_cast<int>(p.size()) != dim_of(c))
            throw ConfigError(std::string("points.") + key + " entries must match dim");
    if (pts.empty()) throw ConfigError(std::string("points.") + key + " is empty");
    return pts;
}

pde::BoxGrid grid_of(const Context& c) {
    const json& s = c.cfg.at("solver");
    pde::BoxGrid g;
    g.d = dim_of(c);
    g.box = box_from(c.cfg.at("box"), g.d, 8.0);
    g.nx = s.value("nx", 161);
    g.dt = s.value("dt", 1e-3);
    g.snapshot_times = s.value("snapshots", std::vector<double>{0.2, 0.5, 1.0});
    g.t_end = s.value("t_end", g.snapshot_times.empty() ? 1.0 : g.snapshot_times.back());
    return g;
}

pde::Scheme scheme_of(const Context& c) {
    std::string s = c.cfg.at("solver").value("scheme", "crank_nicolson");
    if (s == "crank_nicolson") return pde::Scheme::crank_nicolson;
    if (s == "backward_euler") return pde::Scheme::backward_euler;
    throw ConfigError("scheme must be crank_nicolson or backward_euler");
}

pde::InitialData initial_of(const Context& c) {
    const json& ini = c.cfg.at("initial");
    std::string kind = ini.value("kind", "gaussian");
    const int d = dim_of(c);
    if (kind == "constant") return pde::initial_constant(ini.value("value", 1.0));
    if (kind == "gaussian") {
        auto center = ini.value("center", std::vector<double>{});
        if (center.empty()) center.assign(static_cast<std::size_t>(d), 0.0);
        if (static_cast<int>(center.size()) != d)
            throw ConfigError("initial gaussian center must match dim");
        return pde::initial_gaussian(std::move(center), ini.value("width", 1.0));
    }
    if (kind == "expression")
        return pde::initial_expression(ini.at("source").get<std::string>(), d);
    if (kind == "mehler_snapshot")
        return pde::initial_mehler_snapshot(ini.value("t0", 0.1), well_of(c));
    throw ConfigError("initial kind must be constant, gaussian, expression or mehler_snapshot");
}

struct RateInfo {
    closedform::RatePair pair;
    std::optional<conditions::ComparisonSelection> comparison;
};

RateInfo rate_of(const Context& c, const expr::ScalarField& field) {
    const json& r = c.cfg.at("rate");
    const int d = dim_of(c);
    RateInfo info{closedform::rate_pair_heat(d), std::nullopt};
    std::string kind = r.value("kind", "heat");
    if (kind == "heat") {
        info.pair = closedform::rate_pair_heat(d);
    } else if (kind == "quadratic") {
        info.pair = closedform::rate_pair_quadratic(d, r.value("c", 1.0));
    } else if (kind == "comparison_auto") {
        conditions::CheckOptions opt;
        opt.jobs = c.jobs;
        Box box = box_from(c.cfg.at("box"), d, 8.0);
        info.comparison = conditions::comparison_select(
            field, box, c.cfg.at("checks").value("comparison_per_axis", 64), opt);
        info.pair = info.comparison->pair;
    } else {
        throw ConfigError("rate kind must be heat, quadratic or comparison_auto");
    }
    if (r.contains("beta_power"))
        info.pair = closedform::with_power_beta(info.pair, r.at("beta_power").get<double>());
    return info;
}

// A potential expression equal to the quadratic well, for numeric runs that
// start from a kernel.
expr::PotentialExpr well_expression(const closedform::QuadraticWell& w, int dim) {
    expr::NodePtr sum = expr::number(w.c2);
    for (int a = 0; a < dim; ++a) {
        expr::NodePtr diff =
            expr::sub(expr::variable(a), expr::number(w.center(static_cast<std::size_t>(a))));
        sum = expr::add(sum, expr::mul(expr::number(w.c1 * w.c1), expr::pow(diff, 2)));
    }
    return expr::make_potential(expr::simplify(sum), dim);
}

// Closed-form omega sources must match the potential they claim to describe.
void require_matches(const expr::ScalarField& field, const expr::ScalarField& expected,
                     const std::string& what) {
    Rng rng(0xfeedface);
    std::vector<double> x(static_cast<std::size_t>(field.dim));
    for (int k = 0; k < 32; ++k) {
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        double a = field.value(x), b = expected.value(x);
        if (!(std::fabs(a - b) <= 1e-9 * (1.0 + std::fabs(b))))
            throw ConfigError("omega_source " + what + " does not match the potential");
    }
}

OmegaProvider omega_of(const Context& c, const expr::ScalarField& field) {
    std::string src = c.cfg.at("omega_source").get<std::string>();
    const int d = dim_of(c);
    if (src == "closed_heat") {
        require_matches(field, expr::field_from_source("0", d), "closed_heat");
        return closedform::heat_omega_provider(d);
    }
    if (src == "closed_quadratic") {
        closedform::QuadraticWell w = well_of(c);
        require_matches(field, expr::differentiate(well_expression(w, d)),
                        "closed_quadratic");
        return closedform::quadratic_omega_provider(d, w);
    }
    if (src == "numeric") return action::numeric_omega_provider(field, gopt_of(c), dopt_of(c));
    throw ConfigError("omega_source must be closed_heat, closed_quadratic or numeric");
}

verify::ScanConfig scan_config_of(const Context& c) {
    const json& s = c.cfg.at("sampler");
    verify::ScanConfig cfg;
    cfg.count = s.value("count", 10000);
    cfg.seed = s.value("seed", std::uint64_t{20260814});
    cfg.sample_box = box_from(s, dim_of(c), 3.0);
    cfg.t_min = s.value("t_min", 0.1);
    cfg.t_max = s.value("t_max", 2.0);
    cfg.tolerance = c.cfg.at("tolerances").value("scan", 1e-9);
    cfg.sharp_tol = c.cfg.at("tolerances").value("sharp", 1e-6);
    cfg.jobs = c.jobs;
    cfg.keep_samples = c.cfg.value("keep_samples", false);
    return cfg;
}

conditions::CheckOptions check_options_of(const Context& c) {
    conditions::CheckOptions opt;
    opt.violation_tol = c.cfg.at("tolerances").value("violation", 0.0);
    opt.equality_tol = c.cfg.at("tolerances").value("equality", 0.0);
    opt.jobs = c.jobs;
    return opt;
}

// ---- output plumbing ----

class Sink {
    std::ofstream file_;
    std::ostream* os_;

  public:
    Sink(const std::string& out_dir, const std::string& name) {
        if (out_dir.empty()) {
            os_ = &std::cout;
        } else {
            std::filesystem::create_directories(out_dir);
            auto path = std::filesystem::path(out_dir) / name;
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot write " + path.string());
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }
};

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

const char* method_name(action::SolveMethod m) {
    switch (m) {
        case action::SolveMethod::direct: return "direct";
        case action::SolveMethod::shooting: return "shooting";
        case action::SolveMethod::dp_oracle: return "dp_oracle";
    }
    return "unknown";
}

json quad_json(const verify::Quadruple& q) {
    return json{{"x", q.x}, {"y", q.y}, {"t", q.t}, {"s", q.s}};
}

json report_json(const conditions::ConditionReport& rep) {
    return json{{"id", conditions::to_string(rep.id)},
                {"verdict", conditions::to_string(rep.verdict)},
                {"samples", rep.sample_count},
                {"inconclusive", rep.inconclusive_count},
                {"worst_residual", rep.worst_residual},
                {"max_abs_residual", rep.max_abs_residual},
                {"worst_point", rep.worst_point},
                {"note", rep.note}};
}

json scan_json(const verify::HarnackReport& rep, std::size_t violation_cap = 1000) {
    json j{{"quadruples", rep.quadruple_count},
           {"skipped", rep.skipped},
           {"recheck_cleared", rep.recheck_cleared},
           {"tolerance", rep.tolerance},
           {"min_ratio", rep.min_ratio},
           {"min_log_ratio", rep.min_log_ratio},
           {"max_ratio", rep.max_ratio},
           {"min_point", quad_json(rep.min_point)},
           {"violation_count", rep.violations.size()},
           {"pass", rep.pass()},
           {"scan_hash", rep.config_hash}};
    json viols = json::array();
    for (std::size_t i = 0; i < rep.violations.size() && i < violation_cap; ++i) {
        json v = quad_json(rep.violations[i].q);
        v["ratio"] = rep.violations[i].ratio;
        viols.push_back(std::move(v));
    }
    j["violations"] = std::move(viols);
    json sharp = json::array();
    for (const auto& s : rep.sharpness) {
        json v = quad_json(s.q);
        v["gap"] = s.gap;
        sharp.push_back(std::move(v));
    }
    j["sharpness"] = std::move(sharp);
    return j;
}

void print_condition_line(std::ostream& os, const conditions::ConditionReport& rep) {
    os << conditions::to_string(rep.id) << ": " << conditions::to_string(rep.verdict)
       << "  worst=" << format_g17(rep.worst_residual)
       << "  max_abs=" << format_g17(rep.max_abs_residual) << "  samples="
       << rep.sample_count;
    if (rep.inconclusive_count > 0) os << "  inconclusive=" << rep.inconclusive_count;
    if (!rep.note.empty()) os << "  note=" << rep.note;
    os << "\n";
}

void emit_json(const Context& c, const std::string& filename, json body) {
    body["config"] = c.cfg;
    body["config_hash"] = c.hash;
    if (c.timestamp) body["generated_at"] = iso_now();
    Sink sink(c.out_dir, filename);
    sink.stream() << body.dump(2) << "\n";
}

// ---- subcommands ----

int cmd_omega(const Context& c) {
    expr::ScalarField field = expr::differentiate(potential_of(c));
    auto gopt = gopt_of(c);
    auto xs = point_list(c, "x");
    auto ys = point_list(c, "y");
    auto windows = windows_of(c);
    const int d = dim_of(c);

    Sink sink(c.out_dir, "omega.csv");
    std::ostream& os = sink.stream();
    os << "# config_hash=" << c.hash << "\n";
    for (int a = 0; a < d; ++a) os << "x" << a + 1 << ",";
    for (int a = 0; a < d; ++a) os << "y" << a + 1 << ",";
    os << "t,s,omega,residual,method\n";

    bool all_converged = true;
    for (const auto& x : xs)
        for (const auto& y : ys)
            for (const auto& [t, s] : windows) {
                action::AgmonResult res =
                    action::solve_geodesic(x, y, action::TimeWindow(t, s), field, gopt);
                if (res.status == action::SolveStatus::max_iterations) all_converged = false;
                for (double v : x) os << format_g17(v) << ",";
                for (double v : y) os << format_g17(v) << ",";
                os << format_g17(t) << "," << format_g17(s) << "," << format_g17(res.omega)
                   << "," << format_g17(res.residual) << "," << method_name(res.method)
                   << "\n";
            }
    if (!all_converged) {
        std::cerr << "omega: at least one geodesic solve did not converge\n";
        return 1;
    }
    return 0;
}

int cmd_geodesic(const Context& c) {
    expr::ScalarField field = expr::differentiate(potential_of(c));
    auto x = point_list(c, "x").front();
    auto y = point_list(c, "y").front();
    auto [t, s] = windows_of(c).front();
    action::AgmonResult res =
        action::solve_geodesic(x, y, action::TimeWindow(t, s), field, gopt_of(c));

    Sink sink(c.out_dir, "geodesic.csv");
    std::ostream& os = sink.stream();
    os << "# config_hash=" << c.hash << " omega=" << format_g17(res.omega)
       << " residual=" << format_g17(res.residual) << " method=" << method_name(res.method)
       << "\n";
    os << "tau";
    for (int a = 0; a < res.path.dim; ++a) os << ",x" << a + 1;
    os << "\n";
    for (int i = 0; i <= res.path.n; ++i) {
        os << format_g17(static_cast<double>(i) / res.path.n);
        for (double v : res.path.node(i)) os << "," << format_g17(v);
        os << "\n";
    }
    if (res.status == action::SolveStatus::max_iterations) {
        std::cerr << "geodesic: solver did not converge (residual "
                  << format_g17(res.residual) << ")\n";
        return 1;
    }
    return 0;
}

int cmd_solve(const Context& c) {
    pde::BoxGrid grid = grid_of(c);
    pde::Scheme scheme = scheme_of(c);
    pde::InitialData u0 = initial_of(c);
    expr::PotentialExpr v = potential_of(c);
    std::string drift = c.cfg.at("drift").get<std::string>();

    pde::GridSolution sol;
    try {
        if (drift.empty()) {
            sol = pde::solve(expr::differentiate(v), u0, grid, scheme);
        } else {
            expr::PotentialExpr f = expr::parse_potential(drift, grid.d);
            sol = pde::solve_drift(f, v, u0, grid, scheme);
        }
    } catch (const pde::PositivityError& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 1;
    }

    {
        Sink sink(c.out_dir, "solution.csv");
        pde::export_csv(sol, sink.stream());
    }
    json summary{{"min_value", sol.min_value},
                 {"snapshots", sol.times},
                 {"scheme", pde::to_string(sol.scheme)}};
    json flux = json::array();
    for (std::size_t i = 0; i < sol.times.size(); ++i)
        flux.push_back(pde::neumann_flux_sup(sol, i));
    summary["neumann_flux_sup"] = std::move(flux);
    if (!c.out_dir.empty()) emit_json(c, "summary.json", std::move(summary));
    return 0;
}

int cmd_check(const Context& c) {
    expr::ScalarField field = expr::differentiate(potential_of(c));
    RateInfo rate = rate_of(c, field);
    OmegaProvider omega = omega_of(c, field);
    conditions::CheckOptions opt = check_options_of(c);
    const json& checks = c.cfg.at("checks");
    const int d = dim_of(c);

    std::vector<std::pair<double, double>> cond_windows;
    for (const auto& w : checks.at("windows"))
        cond_windows.emplace_back(w[0].get<double>(), w[1].get<double>());
    conditions::SampleSet samples = conditions::SampleSet::tensor(
        box_from(checks, d, 1.2), checks.value("per_axis", 6), cond_windows);

    std::vector<conditions::ConditionReport> reports;
    auto [fwd, bwd] = conditions::check_first_order(omega, field, samples, opt);
    reports.push_back(std::move(fwd));
    reports.push_back(std::move(bwd));
    reports.push_back(conditions::check_second_order(omega, rate.pair, samples, opt));

    auto gopt = gopt_of(c);
    auto x0 = point_list(c, "x").front();
    auto y0 = point_list(c, "y").front();
    // Quadrature error along the path enters the integral checks directly, so
    // solve these geodesics on a fine grid regardless of the omega settings.
    action::GeodesicOptions gopt_fine = gopt;
    gopt_fine.n = std::max(gopt.n, 3000);
    for (const auto& [t, s] : windows_of(c)) {
        action::TimeWindow w(t, s);
        try {
            action::AgmonResult geo = action::solve_geodesic(x0, y0, w, field, gopt_fine);
            reports.push_back(
                conditions::check_second_order_integral(field, rate.pair, geo, w, opt));
            reports.push_back(
                conditions::check_second_order_geodesic(omega, field, rate.pair, geo, w, opt));
        } catch (const std::exception& e) {
            conditions::ConditionReport rep;
            rep.id = conditions::ConditionId::second_order_integral;
            rep.note = e.what();
            reports.push_back(rep);  // inconclusive by default
        }
    }

    std::vector<double> center = checks.value("ball_center", std::vector<double>{});
    if (center.empty()) center.assign(static_cast<std::size_t>(d), 0.0);
    if (static_cast<int>(center.size()) != d)
        throw ConfigError("checks.ball_center must match dim");
    const double radius = checks.value("ball_radius", 1.0);
    const int bsamples = checks.value("boundary_samples", 16);
    auto [t0, s0] = windows_of(c).front();
    reports.push_back(conditions::check_boundary_outflow(
        field, center, radius, action::TimeWindow(t0, s0), bsamples, opt, gopt));
    reports.push_back(conditions::check_v_convex_ball(field, center, radius, bsamples, opt));
    reports.push_back(conditions::check_beta_boundary_limits(rate.pair, omega, opt));
    if (rate.comparison) reports.push_back(rate.comparison->certificate);

    bool violated = false;
    {
        Sink sink(c.out_dir, "checks.txt");
        std::ostream& os = sink.stream();
        os << "# config_hash=" << c.hash << "\n";
        if (rate.comparison)
            os << "# comparison_auto selected C=" << format_g17(rate.comparison->c)
               << " (sup lap=" << format_g17(rate.comparison->sup_laplacian) << ")\n";
        for (const auto& rep : reports) {
            print_condition_line(os, rep);
            violated = violated || rep.verdict == conditions::Verdict::violated;
        }
    }
    if (!c.out_dir.empty()) {
        json body{{"reports", json::array()}, {"pass", !violated}};
        for (const auto& rep : reports) body["reports"].push_back(report_json(rep));
        if (rate.comparison) {
            body["comparison_c"] = rate.comparison->c;
            body["comparison_sup_laplacian"] = rate.comparison->sup_laplacian;
        }
        emit_json(c, "checks.json", std::move(body));
    }
    return violated ? 1 : 0;
}

verify::KernelSpec kernel_of(const Context& c) {
    verify::KernelSpec k;
    k.dim = dim_of(c);
    std::string kind = c.cfg.at("kernel").get<std::string>();
    if (kind == "heat") {
        k.kind = verify::KernelSpec::Kind::heat;
    } else if (kind == "mehler") {
        k.kind = verify::KernelSpec::Kind::mehler;
        k.well = well_of(c);
    } else {
        throw ConfigError("kernel must be heat or mehler");
    }
    return k;
}

// The potential implied by a kernel, for omega consistency and numeric runs.
expr::PotentialExpr kernel_potential(const Context& c, const verify::KernelSpec& k) {
    if (k.kind == verify::KernelSpec::Kind::heat)
        return expr::parse_potential("0", k.dim);
    return well_expression(k.well, k.dim);
}

int cmd_verify(const Context& c) {
    std::string mode = c.cfg.at("mode").get<std::string>();
    verify::ScanConfig scfg = scan_config_of(c);
    conditions::CheckOptions diff_opt;
    diff_opt.violation_tol = c.cfg.at("tolerances").value("differential", 1e-3);
    diff_opt.jobs = c.jobs;

    json body{{"command", "verify"}, {"mode", mode}};
    verify::HarnackReport rep;
    conditions::ConditionReport diff;

    if (mode == "kernel") {
        verify::KernelSpec k = kernel_of(c);
        expr::PotentialExpr v = kernel_potential(c, k);
        Context cc = c;
        cc.cfg["potential"] = v.canonical;  // so omega consistency checks line up
        expr::ScalarField field = expr::differentiate(v);
        RateInfo rate = rate_of(cc, field);
        OmegaProvider omega = omega_of(cc, field);
        verify::SolutionView view = verify::view_of(k, scfg.sample_box);
        rep = verify::harnack_scan(view, rate.pair, omega, scfg);
        std::vector<double> times = c.cfg.value("diff_times", std::vector<double>{1.0});
        diff = verify::differential_harnack(k, rate.pair, times);

        json sharp = json::array();
        auto [t, s] = windows_of(c).front();
        for (const auto& x : point_list(c, "x")) {
            verify::SharpnessResult sr =
                verify::sharpness_locate(k, rate.pair, omega, x, t, s);
            sharp.push_back(json{{"x", sr.q.x},
                                 {"y_star", sr.q.y},
                                 {"t", sr.q.t},
                                 {"s", sr.q.s},
                                 {"ratio", sr.ratio},
                                 {"gap", sr.gap},
                                 {"at_bound", sr.at_bound}});
        }
        body["sharpness_located"] = std::move(sharp);
    } else if (mode == "pde" || mode == "drift") {
        pde::BoxGrid grid = grid_of(c);
        pde::Scheme scheme = scheme_of(c);
        pde::InitialData u0 = initial_of(c);
        expr::PotentialExpr v = potential_of(c);

        expr::PotentialExpr f = expr::parse_potential("0", grid.d);
        expr::ScalarField f_field;
        bool drift = mode == "drift";
        if (drift) {
            std::string fsrc = c.cfg.at("drift").get<std::string>();
            if (fsrc.empty()) throw ConfigError("drift mode needs a drift expression");
            f = expr::parse_potential(fsrc, grid.d);
            f_field = expr::differentiate(f);
        }
        // The scan certifies against the effective potential: V itself for the
        // plain equation, |grad f|^2 - lap f + V for the drift form.
        expr::PotentialExpr veff = drift ? closedform::drift_transform(f, v) : v;
        expr::ScalarField eff_field = expr::differentiate(veff);
        Context cc = c;
        cc.cfg["potential"] = veff.canonical;
        RateInfo rate = rate_of(cc, eff_field);
        OmegaProvider omega = omega_of(cc, eff_field);

        pde::GridSolution sol = drift ? pde::solve_drift(f, v, u0, grid, scheme)
                                      : pde::solve(expr::differentiate(v), u0, grid, scheme);
        verify::SolutionView view = verify::view_of(sol);

        pde::GridSolution fine;
        verify::SolutionView fine_view;
        bool recheck = c.cfg.value("recheck", true);
        if (recheck) {
            pde::BoxGrid g2 = grid;
            g2.nx = 2 * grid.nx - 1;
            g2.dt = 0.5 * grid.dt;
            fine = drift ? pde::solve_drift(f, v, u0, g2, scheme)
                         : pde::solve(expr::differentiate(v), u0, g2, scheme);
            fine_view = verify::view_of(fine);
        }
        rep = verify::harnack_scan(view, rate.pair, omega, scfg,
                                   recheck ? &fine_view : nullptr,
                                   drift ? &f_field : nullptr);
        diff = verify::differential_harnack(sol, rate.pair, c.cfg.value("diff_t_min", 0.1),
                                            2, drift ? &f_field : nullptr, diff_opt);
        body["solution_min_value"] = sol.min_value;
    } else {
        throw ConfigError("mode must be kernel, pde or drift");
    }

    const bool pass = rep.pass() && diff.verdict != conditions::Verdict::violated;
    body["scan"] = scan_json(rep);
    body["differential"] = report_json(diff);
    body["pass"] = pass;
    emit_json(c, "report.json", std::move(body));
    if (!c.out_dir.empty() && !rep.samples.empty()) {
        Sink sink(c.out_dir, "ratios.csv");
        sink.stream() << "# config_hash=" << c.hash << "\n";
        verify::write_ratio_csv(sink.stream(), rep);
    }
    return pass ? 0 : 1;
}

int cmd_sharpness(const Context& c) {
    verify::KernelSpec k = kernel_of(c);
    expr::PotentialExpr v = kernel_potential(c, k);
    Context cc = c;
    cc.cfg["potential"] = v.canonical;
    expr::ScalarField field = expr::differentiate(v);
    RateInfo rate = rate_of(cc, field);
    OmegaProvider omega = omega_of(cc, field);

    Sink sink(c.out_dir, "sharpness.csv");
    std::ostream& os = sink.stream();
    os << "# config_hash=" << c.hash << "\n";
    const int d = k.dim;
    for (int a = 0; a < d; ++a) os << "x" << a + 1 << ",";
    for (int a = 0; a < d; ++a) os << "ystar" << a + 1 << ",";
    os << "t,s,ratio,gap,at_bound\n";
    for (const auto& [t, s] : windows_of(c))
        for (const auto& x : point_list(c, "x")) {
            verify::SharpnessResult sr =
                verify::sharpness_locate(k, rate.pair, omega, x, t, s);
            for (double vv : sr.q.x) os << format_g17(vv) << ",";
            for (double vv : sr.q.y) os << format_g17(vv) << ",";
            os << format_g17(sr.q.t) << "," << format_g17(sr.q.s) << ","
               << format_g17(sr.ratio) << "," << format_g17(sr.gap) << ","
               << (sr.at_bound ? 1 : 0) << "\n";
        }
    return 0;
}

int cmd_nested(const Context& c) {
    expr::PotentialExpr v = potential_of(c);
    expr::ScalarField field = expr::differentiate(v);
    RateInfo rate = rate_of(c, field);
    OmegaProvider omega = omega_of(c, field);
    pde::InitialData u0 = initial_of(c);
    const json& n = c.cfg.at("nested");
    auto halves = n.value("halfwidths", std::vector<double>{4.0, 6.0, 8.0});
    verify::ScanConfig scfg = scan_config_of(c);

    verify::NestedDomainTable table = verify::nested_domain_probe(
        v, u0, halves, rate.pair, omega, scfg, n.value("h", 0.05), n.value("dt", 1e-3),
        n.value("snapshots", std::vector<double>{0.2, 0.5, 1.0}), scheme_of(c));

    long violations = 0;
    {
        Sink sink(c.out_dir, "nested.csv");
        std::ostream& os = sink.stream();
        os << "# config_hash=" << c.hash << " stabilizing=" << (table.stabilizing ? 1 : 0)
           << "\n";
        os << "halfwidth,min_ratio,sup_diff,violations\n";
        for (const auto& row : table.rows) {
            os << format_g17(row.halfwidth) << "," << format_g17(row.min_ratio) << ","
               << format_g17(row.sup_diff) << "," << row.violations << "\n";
            violations += row.violations;
        }
    }
    if (!c.out_dir.empty()) {
        json body{{"stabilizing", table.stabilizing}, {"rows", json::array()}};
        for (const auto& row : table.rows)
            body["rows"].push_back(json{{"halfwidth", row.halfwidth},
                                        {"min_ratio", row.min_ratio},
                                        {"sup_diff", row.sup_diff},
                                        {"violations", row.violations}});
        emit_json(c, "nested.json", std::move(body));
    }
    return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"harnack_lab: Agmon actions, Schroedinger solvers and Harnack scans"};
    app.require_subcommand(1);
    Flags flags;
    const char* names[] = {"omega",  "geodesic",  "solve", "check",
                           "verify", "sharpness", "nested"};
    const char* descs[] = {"tabulate the action omega over endpoint pairs and windows",
                           "emit one optimized path as CSV",
                           "solve the PDE and export snapshots",
                           "evaluate the hypothesis conditions",
                           "scan the Harnack inequality and write a JSON report",
                           "locate equality points of kernel bounds",
                           "solve on nested boxes and watch stabilization"};
    for (int i = 0; i < 7; ++i) add_common_flags(app.add_subcommand(names[i], descs[i]), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        Context c = make_context(flags);
        if (app.got_subcommand("omega")) return cmd_omega(c);
        if (app.got_subcommand("geodesic")) return cmd_geodesic(c);
        if (app.got_subcommand("solve")) return cmd_solve(c);
        if (app.got_subcommand("check")) return cmd_check(c);
        if (app.got_subcommand("verify")) return cmd_verify(c);
        if (app.got_subcommand("sharpness")) return cmd_sharpness(c);
        if (app.got_subcommand("nested")) return cmd_nested(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const expr::ParseError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
