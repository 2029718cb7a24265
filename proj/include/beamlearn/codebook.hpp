// SPDX-License-Identifier: Apache-2.0
//
// Phase codebooks for quantized analog phase shifters, phase vectors, and
// their mapping to unit-norm constant-modulus beamforming vectors.

#ifndef BEAMLEARN_CODEBOOK_HPP
#define BEAMLEARN_CODEBOOK_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace beamlearn {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Wraps an angle onto (-pi, pi].
double wrap_angle(double x);

// Shortest (circular) angular distance between two angles, in [0, pi].
double circular_distance(double a, double b);

// The finite set of 2^r phase values an r-bit phase shifter can realize.
// Values are -pi + 2*pi*k/2^r for k = 1..2^r: strictly increasing, uniformly
// spaced by 2*pi/2^r, all within (-pi, pi]. 0 and pi are always members.
struct PhaseCodebook {
    int resolution_bits = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// resolution_bits must be in [1, 16].
PhaseCodebook build_codebook(int resolution_bits);

// One phase per antenna, in radians. `quantized` marks that every entry is a
// member of the codebook the vector was quantized against.
struct PhaseVector {
    std::vector<double> phases;
    bool quantized = false;

    std::size_t size() const { return phases.size(); }
};

// Analog beamforming/combining vector: every coefficient has modulus
// 1/sqrt(M), so the Euclidean norm is 1.
struct BeamVector {
    std::vector<std::complex<double>> coefficients;

    std::size_t size() const { return coefficients.size(); }
};

// coefficient m = (1/sqrt(M)) * exp(j * phases[m]).
BeamVector beam_from_phases(const PhaseVector& s);

// Nearest codebook value to `phase` under circular distance, after wrapping
// the input onto (-pi, pi]. Exact ties resolve to the larger value.
double quantize_phase(double phase, const PhaseCodebook& codebook);

// Element-wise quantize_phase; the result is flagged `quantized`.
PhaseVector quantize_phases(const PhaseVector& s_hat, const PhaseCodebook& codebook);

} // namespace beamlearn

#endif // BEAMLEARN_CODEBOOK_HPP
