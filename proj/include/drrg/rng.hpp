#pragma once
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace drrg {

// SplitMix64 step: the 64-bit avalanche used for every seed derivation.
// mix64(k) is never zero for small k, so trial 0 also gets a perturbed seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed of trial k in a batch started from `base`.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t k) noexcept {
    return base ^ mix64(k);
}

// Independent sub-stream of a trial seed, selected by a small tag.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag ^ 0xA5A5A5A5A5A5A5A5ULL));
}

// mt19937_64 is fully specified by the standard; the distributions below are
// written out by hand because the std:: ones are implementation-defined, and
// outputs must be byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Uniform integer in [0, bound), bound > 0 (Lemire's nearly-divisionless method).
    std::uint64_t below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace drrg
