// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/metrics.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "beamlearn/errors.hpp"

namespace beamlearn {

double gain(const BeamVector& w, const ChannelVector& h) {
    if (w.size() != h.size())
        throw UsageError("beam/channel dimension mismatch: " + std::to_string(w.size()) +
                         " vs " + std::to_string(h.size()));
    std::complex<double> dot{0.0, 0.0};
    for (std::size_t m = 0; m < h.size(); ++m)
        dot += std::conj(w.coefficients[m]) * h[m];
    return std::norm(dot);
}

double average_gain(const BeamVector& w, const ChannelSet& set) {
    if (set.channels.empty())
        throw UsageError("average gain of an empty channel set");
    double sum = 0.0;
    for (const ChannelVector& h : set.channels)
        sum += gain(w, h);
    return sum / static_cast<double>(set.size());
}

double snr(const BeamVector& w, const ChannelVector& h, double rho) {
    if (rho <= 0.0)
        throw UsageError("rho must be positive");
    return gain(w, h) * rho;
}

GainReport gain_report(const BeamVector& w, const ChannelSet& set, std::optional<double> rho) {
    if (set.channels.empty())
        throw UsageError("gain report over an empty channel set");
    GainReport report;
    report.per_user.reserve(set.size());
    for (const ChannelVector& h : set.channels)
        report.per_user.push_back(gain(w, h));
    double sum = 0.0;
    for (double g : report.per_user)
        sum += g;
    report.average = sum / static_cast<double>(set.size());
    if (rho) {
        if (*rho <= 0.0)
            throw UsageError("rho must be positive");
        std::vector<double> snrs;
        snrs.reserve(set.size());
        for (double g : report.per_user)
            snrs.push_back(g * *rho);
        report.snr_per_user = std::move(snrs);
    }
    return report;
}

EgcResult egc_beam(const ChannelVector& h) {
    double total_abs = 0.0;
    for (const auto& x : h)
        total_abs += std::abs(x);
    if (total_abs == 0.0)
        throw UsageError("EGC beam of an all-zero channel");

    EgcResult result;
    result.phases.phases.resize(h.size());
    for (std::size_t m = 0; m < h.size(); ++m)
        result.phases.phases[m] = std::arg(h[m]);
    result.gain = gain(beam_from_phases(result.phases), h);
    return result;
}

EgcResult quantized_egc_beam(const ChannelVector& h, const PhaseCodebook& codebook) {
    EgcResult result;
    result.phases = quantize_phases(egc_beam(h).phases, codebook);
    result.gain = gain(beam_from_phases(result.phases), h);
    return result;
}

PhaseVector steering_phases(const ArrayGeometry& geometry, double cos_phi) {
    PhaseVector s;
    s.phases.resize(geometry.size());
    for (std::size_t m = 0; m < geometry.size(); ++m)
        s.phases[m] = wrap_angle(kTwoPi * geometry.positions[m] * cos_phi);
    return s;
}

std::vector<PhaseVector> beamsteering_codebook(const ArrayGeometry& ideal_geometry,
                                               std::size_t num_beams,
                                               const PhaseCodebook& codebook) {
    if (num_beams < 1)
        throw UsageError("beamsteering codebook needs at least one beam");
    std::vector<PhaseVector> beams;
    beams.reserve(num_beams);
    for (std::size_t i = 0; i < num_beams; ++i) {
        const double c = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(num_beams);
        beams.push_back(quantize_phases(steering_phases(ideal_geometry, c), codebook));
    }
    return beams;
}

SearchResult exhaustive_search(const ChannelSet& set, std::size_t array_size,
                               const PhaseCodebook& codebook, std::uint64_t budget) {
    if (set.channels.empty())
        throw UsageError("exhaustive search over an empty channel set");
    if (set.dimension() != array_size)
        throw UsageError("exhaustive search: channel dimension " +
                         std::to_string(set.dimension()) + " does not match array size " +
                         std::to_string(array_size));

    const std::uint64_t k = codebook.size();
    std::uint64_t space = 1;
    bool over_budget = false;
    for (std::size_t m = 0; m < array_size && !over_budget; ++m) {
        if (space > budget / k)
            over_budget = true; // space*k would exceed the budget (and may overflow)
        else
            space *= k;
    }
    if (over_budget)
        throw UsageError("exhaustive search space " + std::to_string(k) + "^" +
                         std::to_string(array_size) + " exceeds the budget of " +
                         std::to_string(budget) + " beams; raise the budget to at least that");

    // Odometer over codebook indices, most-significant digit first, so beams
    // appear in lexicographic phase order and the first strict maximum is the
    // lexicographically smallest optimum.
    std::vector<std::size_t> idx(array_size, 0);
    PhaseVector candidate;
    candidate.phases.resize(array_size);
    candidate.quantized = true;

    SearchResult best;
    best.gain = -1.0;
    std::uint64_t evaluated = 0;
    while (true) {
        for (std::size_t m = 0; m < array_size; ++m)
            candidate.phases[m] = codebook.values[idx[m]];
        const double g = average_gain(beam_from_phases(candidate), set);
        ++evaluated;
        if (g > best.gain) {
            best.gain = g;
            best.phases = candidate;
        }

        std::size_t pos = array_size;
        while (pos > 0) {
            --pos;
            if (++idx[pos] < k)
                break;
            idx[pos] = 0;
            if (pos == 0) {
                best.beams_evaluated = evaluated;
                return best;
            }
        }
    }
}

} // namespace beamlearn
