#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace ronfa {

/// One SplitMix64 output step: advance `state` by the golden gamma and mix.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of episode `index`: the index-th output of the SplitMix64 stream
/// started at `master_seed`. (0, 0) yields 0xE220A8397B1DCDAF.
constexpr std::uint64_t derive_episode_seed(std::uint64_t master_seed,
                                            std::uint64_t episode_index) noexcept {
    std::uint64_t state = master_seed + episode_index * 0x9E3779B97F4A7C15ULL;
    return splitmix64_next(state);
}

/// Portable random source. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; the distributions below are written out here because
/// the standard library ones differ between implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return static_cast<std::size_t>(r % bound);
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// First `k` entries of `items` become a uniform sample without replacement
    /// (partial Fisher-Yates).
    template <typename T>
    void partial_shuffle(std::vector<T>& items, std::size_t k) {
        const std::size_t n = items.size();
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            using std::swap;
            swap(items[i], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ronfa
