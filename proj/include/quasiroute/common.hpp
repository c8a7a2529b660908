#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasiroute {

// Mask offset for infeasible actions. Finite so exp()/softmax stay well-defined.
inline constexpr double kMaskLarge = 1e9;

// Tolerance for triangle-inequality and other geometric checks on unit-scale data.
inline constexpr double kGeomTol = 1e-9;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad sizes, duplicate indices, malformed structures.
struct InvalidInput : Error {
    using Error::Error;
};

// Tensor/matrix dimension mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Math domain violations (log of negative, gap with non-positive reference, ...).
struct DomainError : Error {
    using Error::Error;
};

// File-format errors; message carries the offending line/section.
struct ParseError : Error {
    using Error::Error;
};

// A state the module contract says is unreachable.
struct InvariantViolation : Error {
    using Error::Error;
};

// Deterministic RNG. std::mt19937_64 is bit-exact across platforms but the
// standard distributions are not, so all draws go through hand-rolled
// transforms of the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(split_mix(seed)) {}

    std::uint64_t next_u64() {
        // xorshift* step; fast, full-period, reproducible.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, bound). Rejection sampling avoids modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw InvalidInput("Rng::next_below: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw InvalidInput("Rng::uniform_int: empty range");
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller (one draw per call, the pair partner is cached).
    double next_normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // A statistically independent stream for sub-tasks; deterministic in (seed, tag).
    Rng fork(std::uint64_t tag) const {
        return Rng(state_ ^ (0x9E3779B97F4A7C15ULL * (tag + 1)));
    }

private:
    static std::uint64_t split_mix(std::uint64_t x) {
        // SplitMix64 scramble so small seeds still give well-mixed states.
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        x = x ^ (x >> 31);
        return x == 0 ? 0x1234567899DDEEFFULL : x;
    }

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Dense row-major matrix of doubles; the lingua franca between modules that
// do not need autodiff.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

// Worker-thread cap shared by embarrassingly parallel sweeps (bench, fuzz).
// Reads QUASIROUTE_THREADS; defaults to 1 so results never depend on hardware.
int worker_threads();

}  // namespace quasiroute
