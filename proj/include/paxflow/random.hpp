#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace paxflow {

// Seeded random stream with explicit inverse-CDF / rejection samplers so that
// identical seeds give identical draws on every platform. Streams are never
// shared across concurrent simulation runs; derive one per run with derive().
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream, keyed so that (seed, key) pairs never collide
    // in practice (splitmix64 of seed xor key).
    RngStream derive(std::uint64_t key) const {
        std::uint64_t z = seed_ ^ (key + 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return RngStream(z ^ (z >> 31));
    }

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1));
    }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

    double normal(double mu, double sigma) {
        if (!have_cached_) {
            double u1 = 0.0;
            do {
                u1 = uniform();
            } while (u1 <= 0.0);
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            cached_ = r * std::sin(6.283185307179586477 * u2);
            have_cached_ = true;
            return mu + sigma * r * std::cos(6.283185307179586477 * u2);
        }
        have_cached_ = false;
        return mu + sigma * cached_;
    }

    double lognormal(double mu_log, double sigma_log) {
        return std::exp(normal(mu_log, sigma_log));
    }

    double logistic(double location, double scale) {
        double u = 0.0;
        do {
            u = uniform();
        } while (u <= 0.0);
        return location + scale * std::log(u / (1.0 - u));
    }

    // Marsaglia-Tsang; shape > 0, scale > 0.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            const double u = std::max(uniform(), 1e-300);
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal(0.0, 1.0);
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v * scale;
        }
    }

    // Index drawn proportionally to weights (weights need not be normalized).
    std::size_t pick(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace paxflow
