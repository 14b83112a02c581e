#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mmrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, used to turn stream tags into keys.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_indices(const std::vector<std::size_t>& items) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto v : items) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
}

// Seeded generator with explicit state. Child streams are derived from the
// seed alone (never from engine state), so split(...) is independent of how
// many draws were taken from the parent.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    Rng split(std::uint64_t key) const { return Rng(splitmix64(seed_ ^ splitmix64(key + 0x5851f42d4c957f2dULL))); }
    Rng split(std::string_view tag) const { return split(hash_tag(tag)); }
    Rng split(std::string_view tag, std::uint64_t index) const { return split(tag).split(index); }

    std::mt19937_64& engine() { return engine_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    double exponential() { return -std::log1p(-uniform()); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    // Index drawn with probability proportional to weights (non-negative).
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            last_positive = i;
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        return last_positive;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace mmrl
