// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/codebook.hpp"

#include <cmath>
#include <string>

#include "beamlearn/errors.hpp"

namespace beamlearn {

double wrap_angle(double x) {
    double w = std::remainder(x, kTwoPi); // [-pi, pi]
    if (w <= -kPi)
        w = kPi;
    return w;
}

double circular_distance(double a, double b) {
    const double d = std::remainder(a - b, kTwoPi);
    return std::abs(d);
}

PhaseCodebook build_codebook(int resolution_bits) {
    if (resolution_bits < 1 || resolution_bits > 16)
        throw ConfigError("phase shifter resolution must be in [1, 16] bits, got " +
                          std::to_string(resolution_bits));

    const std::size_t n = std::size_t{1} << resolution_bits;
    PhaseCodebook cb;
    cb.resolution_bits = resolution_bits;
    cb.values.resize(n);
    for (std::size_t k = 1; k <= n; ++k)
        cb.values[k - 1] = -kPi + kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    return cb;
}

BeamVector beam_from_phases(const PhaseVector& s) {
    const std::size_t m = s.size();
    const double amplitude = 1.0 / std::sqrt(static_cast<double>(m));
    BeamVector w;
    w.coefficients.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        w.coefficients[i] = std::polar(amplitude, s.phases[i]);
    return w;
}

double quantize_phase(double phase, const PhaseCodebook& codebook) {
    const double wrapped = wrap_angle(phase);
    double best_value = codebook.values.front();
    double best_dist = circular_distance(best_value, wrapped);
    for (std::size_t i = 1; i < codebook.values.size(); ++i) {
        const double d = circular_distance(codebook.values[i], wrapped);
        // <= so that exact ties resolve to the larger value (ascending scan)
        if (d <= best_dist) {
            best_dist = d;
            best_value = codebook.values[i];
        }
    }
    return best_value;
}

PhaseVector quantize_phases(const PhaseVector& s_hat, const PhaseCodebook& codebook) {
    PhaseVector out;
    out.phases.resize(s_hat.size());
    for (std::size_t i = 0; i < s_hat.size(); ++i)
        out.phases[i] = quantize_phase(s_hat.phases[i], codebook);
    out.quantized = true;
    return out;
}

} // namespace beamlearn
