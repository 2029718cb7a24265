// SPDX-License-Identifier: Apache-2.0

#include "beamlearn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "beamlearn/codebook.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/rng.hpp"

namespace beamlearn {

namespace {

constexpr int kMaxOrderingAttempts = 100000;

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1])
            return false;
    return true;
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::complex<double> circular_gaussian(Rng& rng, double power) {
    const double s = std::sqrt(power / 2.0);
    const double re = rng.normal(0.0, s);
    const double im = rng.normal(0.0, s);
    return {re, im};
}

} // namespace

ArrayGeometry ideal_geometry(std::size_t array_size, double spacing_wavelengths) {
    if (array_size < 1)
        throw ConfigError("array size must be at least 1");
    if (spacing_wavelengths <= 0.0)
        throw ConfigError("antenna spacing must be positive");
    ArrayGeometry g;
    g.positions.resize(array_size);
    g.phase_offsets.assign(array_size, 0.0);
    for (std::size_t m = 0; m < array_size; ++m)
        g.positions[m] = static_cast<double>(m) * spacing_wavelengths;
    return g;
}

ArrayGeometry sample_impaired_geometry(std::size_t array_size, double spacing_wavelengths,
                                       double sigma_position_wavelengths, double sigma_phase_rad,
                                       std::uint64_t seed) {
    if (array_size < 1)
        throw ConfigError("array size must be at least 1");
    if (spacing_wavelengths <= 0.0)
        throw ConfigError("antenna spacing must be positive");
    if (sigma_position_wavelengths < 0.0 || sigma_phase_rad < 0.0)
        throw ConfigError("impairment standard deviations must be non-negative");

    Rng rng(seed);
    ArrayGeometry g;
    g.positions.resize(array_size);

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxOrderingAttempts && !accepted; ++attempt) {
        for (std::size_t m = 0; m < array_size; ++m)
            g.positions[m] = rng.normal(static_cast<double>(m) * spacing_wavelengths,
                                        sigma_position_wavelengths);
        accepted = strictly_increasing(g.positions);
    }
    if (!accepted)
        throw GenerationError("no ordered antenna-position sample found in " +
                              std::to_string(kMaxOrderingAttempts) +
                              " attempts; sigma_position is too large relative to the spacing");

    g.phase_offsets.resize(array_size);
    for (std::size_t m = 0; m < array_size; ++m)
        g.phase_offsets[m] = rng.normal(0.0, sigma_phase_rad);
    return g;
}

ChannelVector array_response(const ArrayGeometry& geometry, double phi_rad) {
    const double c = std::cos(phi_rad);
    ChannelVector a(geometry.size());
    for (std::size_t m = 0; m < geometry.size(); ++m)
        a[m] = std::polar(1.0, kTwoPi * geometry.positions[m] * c + geometry.phase_offsets[m]);
    return a;
}

ChannelVector synthesize_channel(const ArrayGeometry& geometry, const PathList& paths) {
    if (paths.empty())
        throw UsageError("cannot synthesize a channel from an empty path list");
    ChannelVector h(geometry.size(), {0.0, 0.0});
    for (const Path& p : paths) {
        const ChannelVector a = array_response(geometry, p.aoa_rad);
        for (std::size_t m = 0; m < h.size(); ++m)
            h[m] += p.gain * a[m];
    }
    return h;
}

void validate(const ChannelConfig& config) {
    if (config.num_users < 1)
        throw ConfigError("channel config must request at least one user");
    if (config.num_paths < 1)
        throw ConfigError("channel config must request at least one path");
    if (!(config.sector_min_rad > 0.0 && config.sector_max_rad < kPi &&
          config.sector_min_rad <= config.sector_max_rad))
        throw ConfigError("AoA sector must satisfy 0 < min <= max < pi");
    if (config.angular_spread_rad < 0.0)
        throw ConfigError("angular spread must be non-negative");
    if (config.dominant_power_fraction < 0.0 || config.dominant_power_fraction > 1.0)
        throw ConfigError("dominant power fraction must lie in [0, 1]");
    if (config.center_aoa_rad &&
        (*config.center_aoa_rad <= 0.0 || *config.center_aoa_rad >= kPi))
        throw ConfigError("center AoA must lie in (0, pi)");
}

ChannelSet sample_user_channels(const ArrayGeometry& geometry, const ChannelConfig& config,
                                std::uint64_t seed) {
    validate(config);

    Rng rng(seed);
    const bool similar = config.center_aoa_rad.has_value() || config.angular_spread_rad > 0.0;
    const double center = config.center_aoa_rad
                              ? *config.center_aoa_rad
                              : (similar ? rng.uniform(config.sector_min_rad, config.sector_max_rad)
                                         : 0.0);

    const std::size_t num_paths = config.num_paths;
    const double p = config.dominant_power_fraction;
    const double scatter_power =
        (p > 0.0 && num_paths > 1) ? (1.0 - p) / static_cast<double>(num_paths - 1)
                                   : 1.0 / static_cast<double>(num_paths);

    ChannelSet set;
    set.channels.reserve(config.num_users);
    for (std::size_t u = 0; u < config.num_users; ++u) {
        double dominant_aoa;
        if (similar) {
            dominant_aoa = center + rng.uniform(-config.angular_spread_rad / 2.0,
                                                config.angular_spread_rad / 2.0);
            dominant_aoa = std::clamp(dominant_aoa, config.sector_min_rad, config.sector_max_rad);
        } else {
            dominant_aoa = rng.uniform(config.sector_min_rad, config.sector_max_rad);
        }

        PathList paths(num_paths);
        if (p > 0.0) {
            const double dominant_power = (num_paths == 1) ? 1.0 : p;
            paths[0].gain = std::polar(std::sqrt(dominant_power), rng.uniform(-kPi, kPi));
        } else {
            paths[0].gain = circular_gaussian(rng, scatter_power);
        }
        paths[0].aoa_rad = dominant_aoa;
        for (std::size_t l = 1; l < num_paths; ++l) {
            paths[l].gain = circular_gaussian(rng, scatter_power);
            paths[l].aoa_rad = rng.uniform(config.sector_min_rad, config.sector_max_rad);
        }

        ChannelVector h = synthesize_channel(geometry, paths);
        if (config.normalize) {
            double power = 0.0;
            for (const auto& x : h)
                power += std::norm(x);
            if (power > 0.0) {
                const double scale = std::sqrt(static_cast<double>(h.size()) / power);
                for (auto& x : h)
                    x *= scale;
            }
        }
        set.channels.push_back(std::move(h));
    }
    return set;
}

ChannelSet load_channels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open channel file " + path.string());

    ChannelSet set;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected_values = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;

        std::vector<double> values;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const char* begin = field.c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            while (end && (*end == ' ' || *end == '\t'))
                ++end;
            if (end == begin || (end && *end != '\0' && *end != '\r'))
                throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                                     ": cannot parse value '" + field + "'");
            values.push_back(v);
        }
        if (values.empty() || values.size() % 2 != 0)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) +
                                 ": expected an even, positive number of values, got " +
                                 std::to_string(values.size()));
        if (expected_values == 0)
            expected_values = values.size();
        else if (values.size() != expected_values)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(expected_values) + " values, got " +
                                 std::to_string(values.size()));

        ChannelVector h(values.size() / 2);
        for (std::size_t m = 0; m < h.size(); ++m)
            h[m] = {values[2 * m], values[2 * m + 1]};
        set.channels.push_back(std::move(h));
    }
    if (set.channels.empty())
        throw IngestionError("channel file " + path.string() + " contains no channels");
    return set;
}

void save_channels(const ChannelSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write channel file " + path.string());
    out << "# one channel per row: re_1, im_1, ..., re_M, im_M\n";
    for (const ChannelVector& h : set.channels) {
        for (std::size_t m = 0; m < h.size(); ++m) {
            if (m)
                out << ',';
            out << fmt_double(h[m].real()) << ',' << fmt_double(h[m].imag());
        }
        out << '\n';
    }
}

ArrayGeometry load_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open geometry file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("geometry file " + path.string() + ": " + e.what());
    }
    if (!j.contains("positions_wavelengths") || !j.contains("phase_offsets_rad"))
        throw IngestionError("geometry file " + path.string() +
                             " must contain positions_wavelengths and phase_offsets_rad");
    ArrayGeometry g;
    try {
        g.positions = j.at("positions_wavelengths").get<std::vector<double>>();
        g.phase_offsets = j.at("phase_offsets_rad").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("geometry file " + path.string() + ": " + e.what());
    }
    if (g.positions.empty() || g.positions.size() != g.phase_offsets.size())
        throw IngestionError("geometry file " + path.string() +
                             ": positions and phase offsets must be non-empty and equal length");
    if (!strictly_increasing(g.positions))
        throw IngestionError("geometry file " + path.string() +
                             ": positions must be strictly increasing");
    return g;
}

void save_geometry(const ArrayGeometry& geometry, const std::filesystem::path& path) {
    nlohmann::json j;
    j["positions_wavelengths"] = geometry.positions;
    j["phase_offsets_rad"] = geometry.phase_offsets;
    std::ofstream out(path);
    if (!out)
        throw IngestionError("cannot write geometry file " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace beamlearn
