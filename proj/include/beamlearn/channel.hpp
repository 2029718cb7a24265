// SPDX-License-Identifier: Apache-2.0
//
// Geometric multipath channel synthesis over ideal or hardware-impaired
// linear arrays, plus CSV/JSON ingestion of externally generated channels
// and geometries.

#ifndef BEAMLEARN_CHANNEL_HPP
#define BEAMLEARN_CHANNEL_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace beamlearn {

// Linear array description. Positions are in wavelength units and strictly
// increasing; phase_offsets model fixed per-antenna phase mismatch. An ideal
// geometry has positions (m-1)*d and zero offsets.
struct ArrayGeometry {
    std::vector<double> positions;
    std::vector<double> phase_offsets;

    std::size_t size() const { return positions.size(); }
};

ArrayGeometry ideal_geometry(std::size_t array_size, double spacing_wavelengths);

// Draws positions from Normal((m-1)*d, sigma_position^2) and offsets from
// Normal(0, sigma_phase^2). The whole position vector is resampled until it
// is strictly increasing; sorting instead would distort the stated marginal
// distributions. Throws GenerationError if no ordered sample is found within
// 10^5 attempts.
ArrayGeometry sample_impaired_geometry(std::size_t array_size, double spacing_wavelengths,
                                       double sigma_position_wavelengths, double sigma_phase_rad,
                                       std::uint64_t seed);

// One propagation path: complex gain and angle of arrival. The AoA is
// measured from the array axis, valid range (0, pi).
struct Path {
    std::complex<double> gain;
    double aoa_rad = 0.0;
};

using PathList = std::vector<Path>;

using ChannelVector = std::vector<std::complex<double>>;

// Non-empty set of same-dimension channel vectors (single user or several
// users with similar channels).
struct ChannelSet {
    std::vector<ChannelVector> channels;

    std::size_t size() const { return channels.size(); }
    std::size_t dimension() const { return channels.empty() ? 0 : channels.front().size(); }
};

// Entry m = exp(j * (2*pi * positions[m] * cos(phi) + phase_offsets[m])).
// Every entry has modulus 1.
ChannelVector array_response(const ArrayGeometry& geometry, double phi_rad);

// h = sum over paths of gain * array_response(aoa). Linear in the gains.
ChannelVector synthesize_channel(const ArrayGeometry& geometry, const PathList& paths);

// Synthetic multi-user channel generation. Each user gets `num_paths` paths:
// path 1 is the user's dominant path, the rest are scatterers with AoAs
// uniform over the sector and circular complex Gaussian gains.
//
// Dominant AoA per user: when `center_aoa_rad` is set (or angular_spread_rad
// > 0, in which case a center is drawn once from the sector), users draw
// within +-angular_spread_rad/2 of that center ("similar channels");
// otherwise each user draws independently from the sector.
//
// Gains: with dominant_power_fraction p > 0, path 1 carries power p with a
// uniform random phase and the scatterers share power 1-p; with p = 0 all
// paths are iid CN(0, 1/L).
struct ChannelConfig {
    static constexpr double kDefaultSectorMin = 0.17453292519943295; // 10 deg
    static constexpr double kDefaultSectorMax = 2.9670597283903604;  // 170 deg

    std::size_t num_users = 1;
    std::size_t num_paths = 5;
    double sector_min_rad = kDefaultSectorMin;
    double sector_max_rad = kDefaultSectorMax;
    std::optional<double> center_aoa_rad;
    double angular_spread_rad = 0.0;
    double dominant_power_fraction = 0.0;
    bool normalize = false; // post-scale each channel to ||h||^2 = M
};

// Range checks on a ChannelConfig; throws ConfigError.
void validate(const ChannelConfig& config);

ChannelSet sample_user_channels(const ArrayGeometry& geometry, const ChannelConfig& config,
                                std::uint64_t seed);

// Channel CSV: one channel per row, 2M columns (re_1, im_1, ..., re_M, im_M),
// '#'-prefixed comment lines allowed. Values are written with 17 significant
// digits so a save/load round trip is bitwise exact.
ChannelSet load_channels(const std::filesystem::path& path);
void save_channels(const ChannelSet& set, const std::filesystem::path& path);

// Geometry JSON with fields `positions_wavelengths` and `phase_offsets_rad`.
ArrayGeometry load_geometry(const std::filesystem::path& path);
void save_geometry(const ArrayGeometry& geometry, const std::filesystem::path& path);

} // namespace beamlearn

#endif // BEAMLEARN_CHANNEL_HPP
