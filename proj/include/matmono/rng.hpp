#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace matmono {

/// Small, self-contained splitmix64 generator.
///
/// The standard-library distributions are implementation-defined, so every
/// randomized routine in this library draws through this class instead.  All
/// draws are pure functions of the seed, which keeps test fixtures and CSV
/// artifacts bit-identical across runs.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derives an independent stream, used for per-trial seeds:
    /// stream = splitmix64(seed XOR golden * (index + 1)).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on (0, 1].
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform() - 0x1.0p-53); }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    /// CN(0,1): unit-variance circularly-symmetric complex Gaussian.
    std::complex<double> cgaussian() {
        const double s = 0.7071067811865475244008443621048;
        return {s * gaussian(), s * gaussian()};
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace matmono
