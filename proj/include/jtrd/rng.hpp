#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "jtrd/core.hpp"

namespace jtrd {

namespace detail {

// SplitMix64 finalizer, used to expand (seed, stream) into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/**
 * Deterministic, seedable random stream (xoshiro256++).
 *
 * Identical (seed, stream) pairs produce identical sample sequences on every
 * platform; distinct stream ids give statistically independent streams, so
 * Monte-Carlo trials can be sharded across workers without coordination.
 */
class Rng {
   public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        // Hash seed and stream together through SplitMix64 so that nearby
        // ids still yield decorrelated states.
        std::uint64_t s = seed;
        std::uint64_t mixed = detail::splitmix64(s);
        s = mixed ^ detail::rotl64(stream + 0x1d872b41199b5487ULL, 31);
        for (auto& word : state_) word = detail::splitmix64(s);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Derive an independent child stream from the same master seed.
    Rng substream(std::uint64_t stream) const { return Rng(seed_, stream); }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_below(std::uint64_t n) {
        // Modulo is fine here: n is tiny (codebook sizes) next to 2^64.
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller; second value of each pair is cached.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Circularly-symmetric complex Gaussian, unit variance (1/2 per part).
    Complex complex_gaussian() {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return Complex(r * std::cos(theta), r * std::sin(theta));
    }

    RealMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
        RealMatrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gaussian();
        return m;
    }

   private:
    std::uint64_t state_[4] = {};
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// i.i.d. entries CN(0, 1): real and imaginary parts each have variance 1/2.
inline ComplexMatrix sample_standard_complex_gaussian(Rng& rng, Eigen::Index rows,
                                                      Eigen::Index cols) {
    ComplexMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_gaussian();
    return m;
}

}  // namespace jtrd
