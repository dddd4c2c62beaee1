#pragma once

// Scalar potential expressions over variables x1..xd: parsing, evaluation,
// symbolic differentiation and pretty-printing. Trees are immutable and
// shared; every rewrite allocates fresh nodes.

#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "harnack/common.hpp"

namespace harnack::expr {

enum class Kind { number, variable, add, sub, mul, div, pow, neg, call };

enum class Fn { sin, cos, exp, sinh, cosh, tanh, sqrt, abs };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind;
    double value = 0.0;  // number
    int index = 0;       // variable: 0-based axis; pow: integer exponent
    Fn fn = Fn::sin;
    NodePtr a;
    NodePtr b;
};

inline NodePtr number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::number;
    n->value = v;
    return n;
}
inline NodePtr variable(int axis) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->index = axis;
    return n;
}
inline NodePtr binary(Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline NodePtr add(NodePtr a, NodePtr b) { return binary(Kind::add, std::move(a), std::move(b)); }
inline NodePtr sub(NodePtr a, NodePtr b) { return binary(Kind::sub, std::move(a), std::move(b)); }
inline NodePtr mul(NodePtr a, NodePtr b) { return binary(Kind::mul, std::move(a), std::move(b)); }
inline NodePtr div(NodePtr a, NodePtr b) { return binary(Kind::div, std::move(a), std::move(b)); }
inline NodePtr pow(NodePtr base, int exponent) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::pow;
    n->a = std::move(base);
    n->index = exponent;
    return n;
}
inline NodePtr neg(NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::neg;
    n->a = std::move(a);
    return n;
}
inline NodePtr call(Fn fn, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::call;
    n->fn = fn;
    n->a = std::move(a);
    return n;
}

[[nodiscard]] inline const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::exp: return "exp";
        case Fn::sinh: return "sinh";
        case Fn::cosh: return "cosh";
        case Fn::tanh: return "tanh";
        case Fn::sqrt: return "sqrt";
        case Fn::abs: return "abs";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Fn> fn_from_name(std::string_view s) {
    if (s == "sin") return Fn::sin;
    if (s == "cos") return Fn::cos;
    if (s == "exp") return Fn::exp;
    if (s == "sinh") return Fn::sinh;
    if (s == "cosh") return Fn::cosh;
    if (s == "tanh") return Fn::tanh;
    if (s == "sqrt") return Fn::sqrt;
    if (s == "abs") return Fn::abs;
    return std::nullopt;
}

// ---- evaluation ----

[[nodiscard]] inline double eval(const Node& n, std::span<const double> x) {
    switch (n.kind) {
        case Kind::number: return n.value;
        case Kind::variable: return x[static_cast<std::size_t>(n.index)];
        case Kind::add: return eval(*n.a, x) + eval(*n.b, x);
        case Kind::sub: return eval(*n.a, x) - eval(*n.b, x);
        case Kind::mul: return eval(*n.a, x) * eval(*n.b, x);
        case Kind::div: return eval(*n.a, x) / eval(*n.b, x);
        case Kind::pow: return ipow(eval(*n.a, x), n.index);
        case Kind::neg: return -eval(*n.a, x);
        case Kind::call: {
            double v = eval(*n.a, x);
            switch (n.fn) {
                case Fn::sin: return std::sin(v);
                case Fn::cos: return std::cos(v);
                case Fn::exp: return std::exp(v);
                case Fn::sinh: return std::sinh(v);
                case Fn::cosh: return std::cosh(v);
                case Fn::tanh: return std::tanh(v);
                case Fn::sqrt: return std::sqrt(v);
                case Fn::abs: return std::fabs(v);
            }
        }
    }
    return 0.0;
}

[[nodiscard]] inline bool structurally_equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::number: return a->value == b->value;
        case Kind::variable: return a->index == b->index;
        case Kind::pow:
            return a->index == b->index && structurally_equal(a->a, b->a);
        case Kind::neg: return structurally_equal(a->a, b->a);
        case Kind::call: return a->fn == b->fn && structurally_equal(a->a, b->a);
        default:
            return structurally_equal(a->a, b->a) && structurally_equal(a->b, b->b);
    }
}

// ---- simplification ----

namespace detail {

[[nodiscard]] inline bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::number && n->value == v;
}

[[nodiscard]] inline double apply_fn(Fn f, double v) {
    switch (f) {
        case Fn::sin: return std::sin(v);
        case Fn::cos: return std::cos(v);
        case Fn::exp: return std::exp(v);
        case Fn::sinh: return std::sinh(v);
        case Fn::cosh: return std::cosh(v);
        case Fn::tanh: return std::tanh(v);
        case Fn::sqrt: return std::sqrt(v);
        case Fn::abs: return std::fabs(v);
    }
    return 0.0;
}

[[nodiscard]] inline NodePtr simplify_once(const NodePtr& n) {
    switch (n->kind) {
        case Kind::number:
        case Kind::variable: return n;
        case Kind::neg: {
            NodePtr a = simplify_once(n->a);
            if (a->kind == Kind::number) return number(-a->value);
            if (a->kind == Kind::neg) return a->a;
            return a == n->a ? n : neg(a);
        }
        case Kind::pow: {
            NodePtr a = simplify_once(n->a);
            if (n->index == 0) return number(1.0);
            if (n->index == 1) return a;
            if (a->kind == Kind::number) return number(ipow(a->value, n->index));
            return a == n->a ? n : pow(a, n->index);
        }
        case Kind::call: {
            NodePtr a = simplify_once(n->a);
            if (a->kind == Kind::number) return number(apply_fn(n->fn, a->value));
            return a == n->a ? n : call(n->fn, a);
        }
        default: {
            NodePtr a = simplify_once(n->a);
            NodePtr b = simplify_once(n->b);
            const bool ac = a->kind == Kind::number;
            const bool bc = b->kind == Kind::number;
            switch (n->kind) {
                case Kind::add:
                    if (ac && bc) return number(a->value + b->value);
                    if (is_const(a, 0.0)) return b;
                    if (is_const(b, 0.0)) return a;
                    break;
                case Kind::sub:
                    if (ac && bc) return number(a->value - b->value);
                    if (is_const(b, 0.0)) return a;
                    if (is_const(a, 0.0)) return neg(b);
                    break;
                case Kind::mul:
                    if (ac && bc) return number(a->value * b->value);
                    if (is_const(a, 0.0) || is_const(b, 0.0)) return number(0.0);
                    if (is_const(a, 1.0)) return b;
                    if (is_const(b, 1.0)) return a;
                    break;
                case Kind::div:
                    if (is_const(a, 0.0)) return number(0.0);
                    if (is_const(b, 1.0)) return a;
                    if (ac && bc && b->value != 0.0) return number(a->value / b->value);
                    break;
                default: break;
            }
            if (a == n->a && b == n->b) return n;
            return binary(n->kind, a, b);
        }
    }
}

}  // namespace detail

[[nodiscard]] inline NodePtr simplify(NodePtr n) {
    for (int pass = 0; pass < 8; ++pass) {
        NodePtr next = detail::simplify_once(n);
        if (structurally_equal(next, n)) return next;
        n = next;
    }
    return n;
}

// ---- differentiation ----

[[nodiscard]] inline NodePtr derivative_raw(const NodePtr& n, int axis) {
    switch (n->kind) {
        case Kind::number: return number(0.0);
        case Kind::variable: return number(n->index == axis ? 1.0 : 0.0);
        case Kind::add: return add(derivative_raw(n->a, axis), derivative_raw(n->b, axis));
        case Kind::sub: return sub(derivative_raw(n->a, axis), derivative_raw(n->b, axis));
        case Kind::mul:
            return add(mul(derivative_raw(n->a, axis), n->b),
                       mul(n->a, derivative_raw(n->b, axis)));
        case Kind::div:
            return div(sub(mul(derivative_raw(n->a, axis), n->b),
                           mul(n->a, derivative_raw(n->b, axis))),
                       pow(n->b, 2));
        case Kind::pow:
            return mul(mul(number(static_cast<double>(n->index)), pow(n->a, n->index - 1)),
                       derivative_raw(n->a, axis));
        case Kind::neg: return neg(derivative_raw(n->a, axis));
        case Kind::call: {
            NodePtr inner = derivative_raw(n->a, axis);
            NodePtr outer;
            switch (n->fn) {
                case Fn::sin: outer = call(Fn::cos, n->a); break;
                case Fn::cos: outer = neg(call(Fn::sin, n->a)); break;
                case Fn::exp: outer = call(Fn::exp, n->a); break;
                case Fn::sinh: outer = call(Fn::cosh, n->a); break;
                case Fn::cosh: outer = call(Fn::sinh, n->a); break;
                case Fn::tanh:
                    outer = sub(number(1.0), pow(call(Fn::tanh, n->a), 2));
                    break;
                case Fn::sqrt:
                    return div(inner, mul(number(2.0), call(Fn::sqrt, n->a)));
                case Fn::abs:
                    // d|u| = u/|u| * du away from u = 0; the expression is
                    // flagged non-smooth upstream.
                    outer = div(n->a, call(Fn::abs, n->a));
                    break;
            }
            return mul(outer, inner);
        }
    }
    return number(0.0);
}

[[nodiscard]] inline NodePtr derivative(const NodePtr& n, int axis) {
    return simplify(derivative_raw(n, axis));
}

// ---- printing ----

namespace detail {
inline void print_to(const NodePtr& n, std::string& out) {
    switch (n->kind) {
        case Kind::number: out += format_g17(n->value); return;
        case Kind::variable:
            out += 'x';
            out += std::to_string(n->index + 1);
            return;
        case Kind::pow:
            out += '(';
            print_to(n->a, out);
            out += '^';
            out += std::to_string(n->index);
            out += ')';
            return;
        case Kind::neg:
            out += "(-";
            print_to(n->a, out);
            out += ')';
            return;
        case Kind::call:
            out += fn_name(n->fn);
            out += '(';
            print_to(n->a, out);
            out += ')';
            return;
        default: {
            const char* op = n->kind == Kind::add   ? " + "
                             : n->kind == Kind::sub ? " - "
                             : n->kind == Kind::mul ? " * "
                                                    : " / ";
            out += '(';
            print_to(n->a, out);
            out += op;
            print_to(n->b, out);
            out += ')';
            return;
        }
    }
}
}  // namespace detail

[[nodiscard]] inline std::string print(const NodePtr& n) {
    std::string out;
    detail::print_to(n, out);
    return out;
}

// ---- parsing ----

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(std::size_t off, const std::string& what)
        : std::runtime_error("syntax error at offset " + std::to_string(off) + ": " + what),
          offset(off) {}
};

namespace detail {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    int dim;

    explicit Parser(std::string_view s, int d) : src(s), dim(d) {}

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    [[nodiscard]] char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[nodiscard]] NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            char c = peek();
            if (c == '+' || c == '-') {
                ++pos;
                NodePtr rhs = parse_product();
                lhs = c == '+' ? add(lhs, rhs) : sub(lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    [[nodiscard]] NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            char c = peek();
            if (c == '*' || c == '/') {
                ++pos;
                NodePtr rhs = parse_unary();
                lhs = c == '*' ? mul(lhs, rhs) : div(lhs, rhs);
            } else {
                return lhs;
            }
        }
    }

    [[nodiscard]] NodePtr parse_unary() {
        if (consume('-')) {
            NodePtr inner = parse_unary();
            if (inner->kind == Kind::number) return number(-inner->value);
            return neg(inner);
        }
        return parse_power();
    }

    [[nodiscard]] NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (peek() == '^') {
            ++pos;
            base = pow(base, parse_int_exponent());
        }
        return base;
    }

    [[nodiscard]] int parse_int_exponent() {
        skip_ws();
        std::size_t start = pos;
        bool negative = consume('-');
        skip_ws();
        std::size_t dstart = pos;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
        if (pos == dstart) throw ParseError(pos, "expected an integer exponent");
        if (pos < src.size() && (src[pos] == '.' || src[pos] == 'e' || src[pos] == 'E'))
            throw ParseError(start, "exponent must be an integer literal");
        int v = 0;
        for (std::size_t i = dstart; i < pos; ++i) {
            v = v * 10 + (src[i] - '0');
            if (v > 1000000) throw ParseError(start, "exponent out of range");
        }
        return negative ? -v : v;
    }

    [[nodiscard]] NodePtr parse_atom() {
        char c = peek();
        std::size_t start = pos;
        if (c == '\0') throw ParseError(pos, "expected an operand");
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_sum();
            if (!consume(')')) throw ParseError(pos, "expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t istart = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            std::string_view name = src.substr(istart, pos - istart);
            if (peek() == '(') {
                auto fn = fn_from_name(name);
                if (!fn) throw ParseError(istart, "unknown function '" + std::string(name) + "'");
                ++pos;
                NodePtr arg = parse_sum();
                if (!consume(')')) throw ParseError(pos, "expected ')'");
                return call(*fn, arg);
            }
            return parse_variable(name, istart);
        }
        throw ParseError(start, std::string("unexpected character '") + c + "'");
    }

    [[nodiscard]] NodePtr parse_variable(std::string_view name, std::size_t at) {
        if (name.size() < 2 || name[0] != 'x')
            throw ParseError(at, "unknown identifier '" + std::string(name) + "'");
        int idx = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(name[i])))
                throw ParseError(at, "unknown identifier '" + std::string(name) + "'");
            idx = idx * 10 + (name[i] - '0');
            if (idx > 1000) throw ParseError(at, "variable index out of range");
        }
        if (idx < 1) throw ParseError(at, "variable indices start at x1");
        if (idx > dim)
            throw ParseError(at, "variable x" + std::to_string(idx) + " exceeds dimension " +
                                     std::to_string(dim));
        return variable(idx - 1);
    }

    [[nodiscard]] NodePtr parse_number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
        if (pos < src.size() && src[pos] == '.') {
            ++pos;
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
        }
        if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
            std::size_t mark = pos;
            ++pos;
            if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
            if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
                    ++pos;
            } else {
                pos = mark;  // 'e' belongs to something else; not our exponent
            }
        }
        if (pos == start) throw ParseError(start, "expected a number");
        double v = 0.0;
        try {
            v = std::stod(std::string(src.substr(start, pos - start)));
        } catch (const std::exception&) {
            throw ParseError(start, "malformed number literal");
        }
        return number(v);
    }
};

inline void collect_warnings(const NodePtr& n, bool& smooth, std::vector<std::string>& warnings) {
    if (!n) return;
    if (n->kind == Kind::call && (n->fn == Fn::abs || n->fn == Fn::sqrt)) {
        if (smooth) {
            smooth = false;
            warnings.push_back(std::string(fn_name(n->fn)) +
                               " is not twice differentiable everywhere; "
                               "curvature certificates are disabled");
        }
    }
    collect_warnings(n->a, smooth, warnings);
    collect_warnings(n->b, smooth, warnings);
}

}  // namespace detail

// A parsed potential. `lower_bound_shift` is the smallest alpha >= 0 such
// that V + alpha is positive on every sampled point of the reference box
// (plus a 1e-9 cushion); 0 when V is already nonnegative there.
struct PotentialExpr {
    NodePtr ast;
    int dim = 1;
    std::string canonical;
    bool smooth = true;
    std::vector<std::string> warnings;
    double lower_bound_shift = 0.0;

    [[nodiscard]] double operator()(std::span<const double> x) const { return eval(*ast, x); }
};

namespace detail {

[[nodiscard]] inline double sample_min(const NodePtr& ast, int dim, const Box& box,
                                       bool& any_invalid) {
    int per_axis = dim == 1 ? 4096 : dim == 2 ? 64 : 16;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    std::vector<double> pt(static_cast<std::size_t>(dim), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    for (;;) {
        for (int a = 0; a < dim; ++a)
            pt[static_cast<std::size_t>(a)] =
                box.lo[static_cast<std::size_t>(a)] +
                box.extent(a) * static_cast<double>(idx[static_cast<std::size_t>(a)]) /
                    (per_axis - 1);
        double v = eval(*ast, pt);
        if (std::isfinite(v))
            lo = std::min(lo, v);
        else
            any_invalid = true;
        int a = 0;
        for (; a < dim; ++a) {
            if (++idx[static_cast<std::size_t>(a)] < per_axis) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
        if (a == dim) break;
    }
    return lo;
}

}  // namespace detail

[[nodiscard]] inline PotentialExpr make_potential(NodePtr ast, int dim,
                                                  const Box* sample_box = nullptr) {
    if (dim < 1) throw std::invalid_argument("make_potential: dim must be >= 1");
    PotentialExpr out;
    out.ast = std::move(ast);
    out.dim = dim;
    out.canonical = print(out.ast);
    detail::collect_warnings(out.ast, out.smooth, out.warnings);

    Box box = sample_box ? *sample_box : Box::cube(dim, -5.0, 5.0);
    bool any_invalid = false;
    double lo = detail::sample_min(out.ast, dim, box, any_invalid);
    if (any_invalid)
        out.warnings.push_back("potential evaluates to non-finite values on parts of the box");
    if (std::isfinite(lo) && lo < 0.0) out.lower_bound_shift = -lo + 1e-9;
    return out;
}

[[nodiscard]] inline PotentialExpr parse_potential(std::string_view source, int dim,
                                                   const Box* sample_box = nullptr) {
    if (dim < 1) throw std::invalid_argument("parse_potential: dim must be >= 1");
    detail::Parser p(source, dim);
    NodePtr ast = p.parse_sum();
    p.skip_ws();
    if (p.pos != source.size())
        throw ParseError(p.pos, "unexpected trailing input");
    return make_potential(std::move(ast), dim, sample_box);
}

// Value, gradient, Laplacian and Hessian of a potential, all from symbolic
// derivative trees.
struct ScalarField {
    int dim = 1;
    bool smooth = true;
    NodePtr f;
    std::vector<NodePtr> grad;
    std::vector<NodePtr> hess;  // row-major d*d, symmetric
    NodePtr lap;

    [[nodiscard]] double value(std::span<const double> x) const { return eval(*f, x); }
    void gradient(std::span<const double> x, std::span<double> out) const {
        for (int a = 0; a < dim; ++a)
            out[static_cast<std::size_t>(a)] = eval(*grad[static_cast<std::size_t>(a)], x);
    }
    [[nodiscard]] double laplacian(std::span<const double> x) const { return eval(*lap, x); }
    void hessian(std::span<const double> x, std::span<double> out) const {
        for (int i = 0; i < dim * dim; ++i)
            out[static_cast<std::size_t>(i)] = eval(*hess[static_cast<std::size_t>(i)], x);
    }
};

[[nodiscard]] inline ScalarField differentiate(const PotentialExpr& pe) {
    ScalarField sf;
    sf.dim = pe.dim;
    sf.smooth = pe.smooth;
    sf.f = pe.ast;
    sf.grad.resize(static_cast<std::size_t>(pe.dim));
    sf.hess.resize(static_cast<std::size_t>(pe.dim * pe.dim));
    for (int a = 0; a < pe.dim; ++a)
        sf.grad[static_cast<std::size_t>(a)] = derivative(pe.ast, a);
    NodePtr lap = number(0.0);
    for (int i = 0; i < pe.dim; ++i) {
        for (int j = i; j < pe.dim; ++j) {
            NodePtr dij = derivative(sf.grad[static_cast<std::size_t>(i)], j);
            sf.hess[static_cast<std::size_t>(i * pe.dim + j)] = dij;
            sf.hess[static_cast<std::size_t>(j * pe.dim + i)] = dij;
        }
        lap = add(lap, sf.hess[static_cast<std::size_t>(i * pe.dim + i)]);
    }
    sf.lap = simplify(lap);
    return sf;
}

// Convenience: field for a source string without keeping the PotentialExpr.
[[nodiscard]] inline ScalarField field_from_source(std::string_view source, int dim) {
    return differentiate(parse_potential(source, dim));
}

}  // namespace harnack::expr
