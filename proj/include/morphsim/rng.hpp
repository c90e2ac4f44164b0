#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace morphsim {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and a counter, so one stream never perturbs another.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(counter + 0x632BE59BD9B4E019ull));
}

/// Stream indices for split_seed().
enum class SeedStream : std::uint64_t { scene = 1, controller = 2 };

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) noexcept {
    return split_seed(master, static_cast<std::uint64_t>(stream));
}

/// Platform-independent random source. std::mt19937_64 output is fixed by
/// the standard; the std distributions are not, so conversions live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no cached second value, keeps the
    /// stream position a function of the number of calls only).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace morphsim
