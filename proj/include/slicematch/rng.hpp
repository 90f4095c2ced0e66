#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace slicematch {

// One step of the splitmix64 sequence (Vigna's reference constants).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256++ 1.0, seeded through splitmix64.
///
/// The integer and uniform-double streams are fully determined by the seed
/// and are identical on every platform. normal() layers Box-Muller on top
/// of two uniforms per draw; its bits additionally depend on the libm
/// rounding of log/cos/sqrt.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal draw. Consumes exactly two uniforms.
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent child stream k: seeded with
    /// splitmix64(seed XOR (k+1)*0x9E3779B97F4A7C15).
    [[nodiscard]] Rng fork(std::uint64_t stream) const {
        std::uint64_t st = seed_ ^ ((stream + 1) * 0x9E3779B97F4A7C15ull);
        return Rng(splitmix64_next(st));
    }

    /// Seed value for the fork derivation of a child stream, without
    /// constructing the child. fork(k) is Rng(fork_seed(k)).
    [[nodiscard]] std::uint64_t fork_seed(std::uint64_t stream) const {
        std::uint64_t st = seed_ ^ ((stream + 1) * 0x9E3779B97F4A7C15ull);
        return splitmix64_next(st);
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    std::uint64_t seed_;
};

}  // namespace slicematch
