#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace harnack {

// Axis-aligned working box. Nodes of tensor grids live on the closed box.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    Box() = default;
    Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size() || lo.empty())
            throw std::invalid_argument("box: lo/hi size mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw std::invalid_argument("box: lo must be < hi per axis");
    }
    static Box cube(int dim, double lo, double hi) {
        return Box(std::vector<double>(static_cast<std::size_t>(dim), lo),
                   std::vector<double>(static_cast<std::size_t>(dim), hi));
    }
    [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
    [[nodiscard]] double extent(int axis) const { return hi[axis] - lo[axis]; }
    [[nodiscard]] double max_extent() const {
        double m = 0.0;
        for (int a = 0; a < dim(); ++a) m = std::max(m, extent(a));
        return m;
    }
    [[nodiscard]] bool contains(std::span<const double> x, double slack = 0.0) const {
        for (int a = 0; a < dim(); ++a)
            if (x[a] < lo[a] - slack || x[a] > hi[a] + slack) return false;
        return true;
    }
};

// Deterministic splitmix64 stream; identical output on every platform, unlike
// the distributions in <random>.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // uniform in [0,1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }
    // uniform index in {0, ..., n-1}
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    }
    double normal() {
        // Box-Muller; one value per call keeps the stream position predictable.
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }
};

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

[[nodiscard]] inline std::string fnv1a64_hex(std::string_view s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return std::string(buf);
}

// x^n for integer n by binary exponentiation; bit-for-bit reproducible.
[[nodiscard]] inline double ipow(double x, int n) {
    if (n < 0) return 1.0 / ipow(x, -n);
    double r = 1.0, p = x;
    for (unsigned m = static_cast<unsigned>(n); m != 0; m >>= 1) {
        if (m & 1u) r *= p;
        p *= p;
    }
    return r;
}

// log(sinh z) for z > 0 without overflow for large z.
[[nodiscard]] inline double log_sinh(double z) {
    if (!(z > 0.0)) throw std::domain_error("log_sinh: argument must be positive");
    if (z > 30.0) return z - 0.6931471805599453094 + std::log1p(-std::exp(-2.0 * z));
    return std::log(std::sinh(z));
}

[[nodiscard]] inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    v.back() = b;
    return v;
}

// Static partition over a fixed-size index range. Worker count changes wall
// time only; every result lands in a caller-indexed slot, so reductions done
// in index order are independent of the schedule.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (count == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : (hw ? hw : 1);
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

[[nodiscard]] inline double sq(double x) { return x * x; }

[[nodiscard]] inline double dist2(std::span<const double> a, std::span<const double> b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r += sq(a[i] - b[i]);
    return r;
}

// %.17g rendering used for every floating-point field we serialize.
[[nodiscard]] inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

}  // namespace harnack
