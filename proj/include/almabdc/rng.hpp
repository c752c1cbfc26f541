#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

namespace almabdc {

/// splitmix64 step; used both as a stream generator and as a mixing hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive 64-bit mix of an arbitrary key sequence. Seed derivation
/// for replicate streams is hash_combine(base_seed, case, strategy, K, r);
/// the chain is fixed so reruns reproduce streams exactly.
inline std::uint64_t hash_combine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = seed;
    for (std::uint64_t k : keys) {
        s ^= k + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        std::uint64_t st = s;
        s = splitmix64(st);
    }
    return s;
}

inline std::uint64_t hash_str(std::string_view sv) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : sv) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// xoshiro256++ with explicitly coded samplers. Distributions are hand-rolled
/// rather than taken from <random> so that output streams do not depend on the
/// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), n >= 1. Unbiased via rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Marsaglia polar method (pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double lognormal(double mu_log, double sigma_log) { return std::exp(normal(mu_log, sigma_log)); }

    /// Gamma(shape, 1) via Marsaglia–Tsang; boosts shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    /// Derive an independent child stream keyed by a label and index.
    Rng derive(std::string_view label, std::uint64_t index = 0) const {
        const std::uint64_t s =
            hash_combine(state_[0] ^ state_[2], {state_[1] ^ state_[3], hash_str(label), index});
        return Rng(s);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace almabdc
