#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace repel {

/// Pairwise (cascade) summation; error grows like O(log n) rather than O(n).
inline double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kBlock = 32;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// SplitMix64 finalizer, used to derive independent stream seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// mt19937_64 is fully specified by the standard; the distributions are not, so the
/// mappings below are spelled out to keep sampled values identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform on {1, ..., count}; modulo bias is below 2^-50 for any count used here.
    std::size_t one_to(std::size_t count) {
        return 1 + static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(count));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace repel
