#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oneshot {

// Deterministic RNG with named sub-streams. Every source of randomness in
// the project is an RngStream derived from the master seed and a stream
// name, so a run is reproducible from (config, seed) alone. Distributions
// are implemented here rather than taken from <random> so that sampled
// sequences do not depend on the standard library implementation.
class RngStream {
public:
    RngStream() : state_(0x9e3779b97f4a7c15ull) {}
    explicit RngStream(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) { next_u64(); }

    // Sub-stream for (master seed, name); independent streams for distinct names.
    static RngStream named(std::uint64_t master_seed, std::string_view name) {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the name
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return RngStream(splitmix(master_seed) ^ splitmix(h));
    }

    RngStream child(std::string_view name) const {
        return RngStream::named(splitmix(state_), name);
    }

    std::uint64_t next_u64() {
        // splitmix64 step
        state_ += 0x9e3779b97f4a7c15ull;
        return splitmix(state_);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1. Rejection-free modulo is fine here:
    // n is always tiny compared to 2^64, so the bias is unmeasurable.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (one value per call, no caching, so the
    // consumed stream length per draw is fixed).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// Partial Fisher-Yates: draws k distinct indices from [0, n) in selection order.
inline void sample_without_replacement(RngStream& rng, std::size_t n, std::size_t k,
                                       std::vector<int>& out) {
    // For the small k/n in this project a swap-based draw over an index pool
    // is exact and unbiased.
    std::vector<int> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<int>(i);
    out.clear();
    for (std::size_t i = 0; i < k && i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
}

inline void sample_without_replacement(RngStream& rng, int n, int k,
                                       std::vector<int>& out) {
    if (n < 0 || k < 0) throw std::invalid_argument("negative sample size");
    sample_without_replacement(rng, static_cast<std::size_t>(n),
                               static_cast<std::size_t>(k), out);
}

template <typename T>
void shuffle(RngStream& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace oneshot
