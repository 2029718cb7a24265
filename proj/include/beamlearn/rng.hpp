// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMLEARN_RNG_HPP
#define BEAMLEARN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace beamlearn {

// Seeded random stream with self-contained uniform and normal samplers.
// The standard <random> distributions are implementation-defined, so both
// samplers are built directly on the mt19937_64 word stream; two runs with
// the same seed produce identical draws on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller (one fresh pair of uniforms per draw).
    double normal() {
        static constexpr double two_pi = 6.28318530717958647692;
        const double u1 = 1.0 - uniform01(); // (0, 1] keeps the log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform index in [0, n). Modulo bias is ~n/2^64, irrelevant here.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace beamlearn

#endif // BEAMLEARN_RNG_HPP
