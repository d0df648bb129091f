#pragma once

// Platform-stable random helpers. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so sampling is done by hand here.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace nodulelink {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// FNV-1a, for deriving stream seeds from string keys.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent stream keyed by (seed, label).
    static Rng derive(std::uint64_t seed, std::string_view label) { return Rng(seed ^ splitmix64(fnv1a(label))); }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] (inclusive), rejection-sampled.
    long range(long lo, long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return lo + static_cast<long>(v % span);
    }

    bool chance(double p) { return uniform() < p; }

    template <typename T>
    const T& pick(std::span<const T> items) {
        return items[static_cast<std::size_t>(range(0, static_cast<long>(items.size()) - 1))];
    }
    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return pick(std::span<const T>(items));
    }

    /// Index drawn proportionally to non-negative weights.
    std::size_t weighted(std::span<const double> weights) {
        double total = 0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(range(0, static_cast<long>(i) - 1))]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace nodulelink
