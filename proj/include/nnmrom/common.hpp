// Shared aliases, error types and deterministic RNG primitives.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nnmrom {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Element endpoint index meaning "connected to ground".
inline constexpr int kGround = -1;

/// Thrown when a numeric procedure fails (divergence, non-convergence,
/// non-finite values). Carries the step index where the failure occurred.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::ptrdiff_t step = -1)
        : std::runtime_error(what), step_(step) {}
    std::ptrdiff_t step() const { return step_; }

private:
    std::ptrdiff_t step_;
};

// =============================================================================
// Deterministic RNG
// =============================================================================

/// splitmix64-seeded xoshiro-style generator with explicit uniform/normal
/// mappings. All randomness in the library flows through this type so results
/// are bit-identical for a given seed, independent of the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the 4-word state
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        // xoshiro256**
        auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (discards the paired draw).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_[4];
};

/// FNV-1a 64-bit hash, used for manifest content digests and provenance.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

} // namespace nnmrom
