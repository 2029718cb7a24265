// SPDX-License-Identifier: Apache-2.0
//
// Beamforming-gain objectives and the analytic baselines: the equal-gain
// combining (EGC) upper bound, its codebook-quantized projection, a classical
// beamsteering codebook, and exhaustive search over the discrete beam space.

#ifndef BEAMLEARN_METRICS_HPP
#define BEAMLEARN_METRICS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "beamlearn/channel.hpp"
#include "beamlearn/codebook.hpp"

namespace beamlearn {

// g = |w^H h|^2.
double gain(const BeamVector& w, const ChannelVector& h);

// Mean of the per-user gains over the set; the objective the learner sees.
double average_gain(const BeamVector& w, const ChannelSet& set);

// SNR = gain * rho, with rho = P_x / sigma_n^2 and ||w|| = 1. rho > 0.
double snr(const BeamVector& w, const ChannelVector& h, double rho);

struct GainReport {
    std::vector<double> per_user;
    double average = 0.0;
    std::optional<std::vector<double>> snr_per_user; // present when rho was given
};

GainReport gain_report(const BeamVector& w, const ChannelSet& set,
                       std::optional<double> rho = {});

struct EgcResult {
    PhaseVector phases;
    double gain = 0.0;
};

// Equal-gain combining: phases matched to the channel entries so that w^H h
// sums |h_m| over real positives. Achieves (sum |h_m|)^2 / M, which upper
// bounds the gain of every unit-norm constant-modulus beam on h.
EgcResult egc_beam(const ChannelVector& h);

// EGC phases projected onto the codebook; reports the gain actually achieved.
EgcResult quantized_egc_beam(const ChannelVector& h, const PhaseCodebook& codebook);

// Unquantized steering phases for a plane wave from cos(phi) = cos_phi:
// phase m = 2*pi * positions[m] * cos_phi, wrapped onto (-pi, pi].
PhaseVector steering_phases(const ArrayGeometry& geometry, double cos_phi);

// Classical beamsteering codebook: beam i steers toward the i-th point of a
// uniform cos(phi) grid over [-1, 1), quantized to the phase codebook. Built
// from the ideal geometry; classical codebooks are unaware of impairments.
std::vector<PhaseVector> beamsteering_codebook(const ArrayGeometry& ideal_geometry,
                                               std::size_t num_beams,
                                               const PhaseCodebook& codebook);

struct SearchResult {
    PhaseVector phases;
    double gain = 0.0;
    std::uint64_t beams_evaluated = 0;
};

// Enumerates all (2^r)^M quantized phase vectors and returns the one with the
// highest average gain; ties resolve to the lexicographically smallest phase
// vector. Refuses (UsageError, naming the required budget) when the beam
// space exceeds `budget`.
SearchResult exhaustive_search(const ChannelSet& set, std::size_t array_size,
                               const PhaseCodebook& codebook,
                               std::uint64_t budget = 10000000);

} // namespace beamlearn

#endif // BEAMLEARN_METRICS_HPP
