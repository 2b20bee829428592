#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eventlab {

// Bit-mixing finalizer, also usable as a tiny stateless hash.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline double u64_to_unit(std::uint64_t x) {
    // 53 mantissa bits -> [0, 1)
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Deterministic RNG front-end. mt19937_64 output is pinned by the standard;
// the distribution transforms below are implemented here because the standard
// library's distributions are implementation-defined and would break
// reproducibility guarantees across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    double unit() { return u64_to_unit(next()); }

    // Uniform integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(unit() * static_cast<double>(n)) % n;
    }

    // Exact Poisson sampling: sequential inversion for small means, the
    // transformed-rejection scheme of Hormann (PTRS) for large ones.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) return poisson_inversion(lambda);
        return poisson_ptrs(lambda);
    }

private:
    std::uint64_t poisson_inversion(double lambda) {
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= unit();
        } while (p > limit);
        return k - 1;
    }

    std::uint64_t poisson_ptrs(double lambda) {
        const double b = 0.931 + 2.53 * std::sqrt(lambda);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_lambda = std::log(lambda);
        for (;;) {
            double u = unit() - 0.5;
            double v = unit();
            double us = 0.5 - std::abs(u);
            double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            double rhs = kf * log_lambda - lambda - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
        }
    }

    std::mt19937_64 engine_;
};

}  // namespace eventlab
